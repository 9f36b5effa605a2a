//! Tabulated antiderivatives and monotone cubic interpolation.

use crate::error::Result;
use crate::quad::{gk15, integrate, QuadConfig};
use std::sync::Arc;

pub type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `F(x) = ∫_anchor^x g` with `g` known exactly.
///
/// Inside `[lo, hi]` the value is a cumulative sum of per-cell Kronrod panels
/// plus one panel from the cell's left node to `x`; outside, adaptive
/// quadrature starting at the nearest table end.
#[derive(Clone)]
pub struct Antiderivative {
    g: Func,
    lo: f64,
    h: f64,
    values: Vec<f64>,
    cfg: QuadConfig,
}

impl std::fmt::Debug for Antiderivative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Antiderivative")
            .field("lo", &self.lo)
            .field("hi", &self.hi())
            .field("cells", &(self.values.len() - 1))
            .finish()
    }
}

impl Antiderivative {
    /// Tabulates on `[lo, hi]` with `cells` equal cells; `anchor` must be a node.
    pub fn new(g: Func, lo: f64, hi: f64, cells: usize, anchor: f64) -> Result<Antiderivative> {
        let h = (hi - lo) / cells as f64;
        let nodes: Vec<f64> = (0..=cells).map(|i| lo + h * i as f64).collect();
        let pieces: Vec<f64> = crate::par::map_range(cells, |i| gk15(&|x| g(x), nodes[i], nodes[i + 1]).map(|r| r.0))
            .into_iter()
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; cells + 1];
        for i in 0..cells {
            values[i + 1] = values[i] + pieces[i];
        }
        let k = ((anchor - lo) / h).round() as usize;
        let shift = values[k.min(cells)];
        values.iter_mut().for_each(|v| *v -= shift);
        Ok(Antiderivative {
            g,
            lo,
            h,
            values,
            cfg: QuadConfig::default().tightened(1e-2),
        })
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.h * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len() - 1;
        let hi = self.hi();
        if x < self.lo || x > hi || x.is_nan() {
            if x.is_nan() {
                return f64::NAN;
            }
            let (edge, base) = if x < self.lo {
                (self.lo, self.values[0])
            } else {
                (hi, self.values[n])
            };
            let g = &*self.g;
            return match integrate(g, edge, x, &self.cfg) {
                Ok(r) => base + r.value,
                Err(_) => f64::NAN,
            };
        }
        let i = (((x - self.lo) / self.h) as usize).min(n - 1);
        let x0 = self.lo + self.h * i as f64;
        if x == x0 {
            return self.values[i];
        }
        match gk15(&|u| (self.g)(u), x0, x) {
            Ok((v, _)) => self.values[i] + v,
            Err(_) => f64::NAN,
        }
    }
}

fn hermite(x0: f64, h: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * h * d1
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes; monotone
/// data give a monotone interpolant. Constant extrapolation outside the knots.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Pchip {
        assert!(xs.len() == ys.len() && xs.len() >= 2);
        let n = xs.len();
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut ds = vec![0.0; n];
        for i in 1..n - 1 {
            let (a, b) = (delta[i - 1], delta[i]);
            if a * b > 0.0 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                ds[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        ds[0] = end_slope(xs[1] - xs[0], xs.get(2).map_or(1.0, |x2| x2 - xs[1]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        ds[n - 1] = end_slope(
            xs[n - 1] - xs[n - 2],
            if n > 2 { xs[n - 2] - xs[n - 3] } else { 1.0 },
            delta[n - 2],
            if n > 2 { delta[n - 3] } else { delta[n - 2] },
        );
        Pchip { xs, ys, ds }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&k| k <= x) - 1;
        hermite(
            self.xs[i],
            self.xs[i + 1] - self.xs[i],
            self.ys[i],
            self.ys[i + 1],
            self.ds[i],
            self.ds[i + 1],
            x,
        )
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antiderivative_of_polynomial() {
        let g: Func = Arc::new(|x: f64| x.powi(3) - 0.5 * x);
        let a = Antiderivative::new(g, -8.0, 8.0, 512, 0.0).unwrap();
        for x in [-7.9f64, -1.3, 0.0, 0.77, 5.5] {
            let exact = x.powi(4) / 4.0 - x * x / 4.0;
            assert!((a.eval(x) - exact).abs() < 1e-13 * (1.0 + exact.abs()), "{x}");
        }
        // Outside the table.
        let x: f64 = 11.0;
        let exact = x.powi(4) / 4.0 - x * x / 4.0;
        assert!((a.eval(x) - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn pchip_preserves_monotonicity() {
        let xs: Vec<f64> = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.2, 3.0, 3.05];
        let p = Pchip::new(xs, ys);
        let mut prev = p.eval(0.0);
        for i in 1..=400 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert_eq!(p.eval(2.0), 0.2);
    }

    #[test]
    fn pchip_reproduces_smooth_function() {
        let xs: Vec<f64> = (0..=200).map(|i| -2.0 + i as f64 * 0.02).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.tanh()).collect();
        let p = Pchip::new(xs, ys);
        for x in [-1.555, 0.0123, 1.9] {
            assert!((p.eval(x) - f64::tanh(x)).abs() < 1e-6);
        }
    }
}
