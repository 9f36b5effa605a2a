//! Deterministic box-constrained maximization: grid scan, then Nelder-Mead.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptConfig {
    /// Scan points per parameter dimension.
    pub grid_points: usize,
    /// Cap on the total scan size; higher dimensions get fewer points per axis.
    pub max_grid_total: usize,
    pub max_iter: usize,
    /// Simplex diameter tolerance, relative to `1 + |θ|`.
    pub tol: f64,
}

impl Default for OptConfig {
    fn default() -> OptConfig {
        OptConfig {
            grid_points: 41,
            max_grid_total: 10_000,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub argmax: Vec<f64>,
    pub value: f64,
    /// Best value of the scan, where the polish started.
    pub grid_value: f64,
    pub evaluations: usize,
}

impl OptResult {
    /// Improvement from the polish phase.
    pub fn opt_gap(&self) -> f64 {
        self.value - self.grid_value
    }
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Maximizes `f` over the box; `NaN` and `-∞` mark inadmissible points.
/// `None` when no scanned point is admissible.
pub fn maximize<F>(f: F, bounds: &[(f64, f64)], cfg: &OptConfig) -> Option<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = bounds.len();
    if d == 0 {
        let v = score(f(&[]));
        return v.is_finite().then(|| OptResult {
            argmax: vec![],
            value: v,
            grid_value: v,
            evaluations: 1,
        });
    }
    let mut per_axis = cfg.grid_points.max(1);
    while per_axis > 2 && per_axis.saturating_pow(d as u32) > cfg.max_grid_total {
        per_axis -= 1;
    }
    let axes: Vec<Vec<f64>> = bounds.iter().map(|&(lo, hi)| axis(lo, hi, per_axis)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let point = |mut k: usize| -> Vec<f64> {
        axes.iter()
            .map(|a| {
                let v = a[k % a.len()];
                k /= a.len();
                v
            })
            .collect()
    };
    let values = crate::par::map_range(total, |k| score(f(&point(k))));
    // First maximum in index order keeps the result schedule-independent.
    let (best_k, grid_value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    if !grid_value.is_finite() {
        return None;
    }
    let start = point(best_k);
    let steps: Vec<f64> = bounds
        .iter()
        .zip(&axes)
        .map(|(&(lo, hi), a)| if a.len() > 1 { (hi - lo) / (a.len() - 1) as f64 } else { 0.0 })
        .collect();
    let (argmax, value, evals) = nelder_mead(|x| -score(f(x)), &start, -grid_value, &steps, bounds, cfg);
    Some(OptResult {
        argmax,
        value: -value,
        grid_value,
        evaluations: total + evals,
    })
}

fn clamp(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Minimizes `f` from `x0`; coordinates with a zero step stay fixed.
fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptConfig,
) -> (Vec<f64>, f64, usize) {
    let active: Vec<usize> = (0..x0.len()).filter(|&i| steps[i] > 0.0).collect();
    if active.is_empty() {
        return (x0.to_vec(), f0, 0);
    }
    let mut evals = 0;
    let mut eval = |x: &mut Vec<f64>| {
        clamp(x, bounds);
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for &i in &active {
        let mut x = x0.to_vec();
        // Step inward when the start sits on the upper face.
        x[i] = if x0[i] + steps[i] <= bounds[i].1 { x0[i] + steps[i] } else { x0[i] - steps[i] };
        let v = eval(&mut x);
        simplex.push((x, v));
    }
    let n = active.len();
    for _ in 0..cfg.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = active
            .iter()
            .map(|&i| {
                let (lo, hi) = simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0[i]), hi.max(p.0[i])));
                (hi - lo) / (1.0 + simplex[0].0[i].abs())
            })
            .fold(0.0, f64::max);
        if diameter < cfg.tol {
            break;
        }
        let centroid: Vec<f64> = (0..x0.len())
            .map(|i| simplex[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };
        let mut xr = along(1.0);
        let fr = eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(2.0);
            let fe = eval(&mut xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (mut xc, t) = if fr < worst.1 { (along(0.5), fr) } else { (along(-0.5), worst.1) };
            let fc = eval(&mut xc);
            if fc < t {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = best.iter().zip(&p.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let v = eval(&mut x);
                    *p = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, v, evals)
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + c.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
