use super::{Diffusion, DiffusionModel};
use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::quad::{integrate, QuadConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Diverging,
    Converging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideVerdict {
    pub verdict: Verdict,
    /// Truncated integrals at `R/4`, `R/2`, `R`.
    pub values: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub min_sigma: f64,
    pub argmin_sigma: f64,
    /// `∫ du/σ` toward `-∞` and `+∞`; diverging means complete.
    pub completeness: [SideVerdict; 2],
    /// Feller double integrals toward `-∞` and `+∞`; diverging means the
    /// boundary is not reached.
    pub non_explosion: [SideVerdict; 2],
}

impl AssumptionReport {
    pub fn elliptic(&self) -> bool {
        self.min_sigma > 0.0
    }

    pub fn non_explosive(&self) -> Verdict {
        let v = self.non_explosion.map(|s| s.verdict);
        if v.contains(&Verdict::Converging) {
            Verdict::Converging
        } else if v.iter().all(|&s| s == Verdict::Diverging) {
            Verdict::Diverging
        } else {
            Verdict::Inconclusive
        }
    }
}

fn classify(values: [f64; 3]) -> Verdict {
    let [i1, i2, i3] = values;
    if !i3.is_finite() {
        return if i3.is_nan() { Verdict::Inconclusive } else { Verdict::Diverging };
    }
    let inc1 = i2 - i1;
    let inc2 = i3 - i2;
    let scale = i3.abs().max(1e-300);
    if inc1 <= 1e-12 * scale && inc2 <= 1e-12 * scale {
        return Verdict::Converging;
    }
    if inc1 <= 0.0 {
        return Verdict::Inconclusive;
    }
    // The second increment covers twice the length of the first: linear growth
    // gives 2, logarithmic 1, a 1/x² integrand 1/2.
    let ratio = inc2 / inc1;
    if ratio >= 0.9 {
        Verdict::Diverging
    } else if ratio < 0.7 {
        Verdict::Converging
    } else {
        Verdict::Inconclusive
    }
}

fn loose() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-9,
        rel_tol: 1e-7,
        ..QuadConfig::default()
    }
}

/// `∫_0^{±y} du/σ`.
fn intrinsic_length(d: &dyn Diffusion, y: f64) -> f64 {
    integrate(|u| 1.0 / d.sigma(u), 0.0, y, &loose()).map_or(f64::NAN, |r| r.value.abs())
}

/// `∫_0^{y} s'(v) ∫_0^v m(z) dz dv` with `s' = e^U`, `m = e^{-U}/σ²`, computed as
/// `∫∫ e^{U(v) - U(z)}/σ(z)²` to avoid overflow; `+∞` once exponents exceed 700.
fn feller(d: &dyn Diffusion, y: f64) -> f64 {
    let cfg = loose();
    let outer = |v: f64| {
        let uv = d.potential(v);
        let inner = integrate(
            |z| {
                let e = uv - d.potential(z);
                if e > 700.0 {
                    f64::INFINITY
                } else {
                    let s = d.sigma(z);
                    e.exp() / (s * s)
                }
            },
            0.0,
            v,
            &cfg,
        );
        match inner {
            Ok(r) => r.value.abs(),
            Err(_) => f64::INFINITY,
        }
    };
    match integrate(outer, 0.0, y, &cfg) {
        Ok(r) => r.value.abs(),
        Err(_) => f64::INFINITY,
    }
}

/// Ellipticity on the probe grid, completeness and the non-explosion test on
/// `R/4, R/2, R` in each direction.
pub fn check_assumptions(d: &dyn Diffusion, r: f64, grid: usize) -> AssumptionReport {
    let (lo, hi) = d.domain().window(r);
    let pts = super::chebyshev_grid(lo, hi, grid.max(2));
    let (argmin_sigma, min_sigma) = pts
        .iter()
        .map(|&x| (x, d.sigma(x)))
        .fold((f64::NAN, f64::INFINITY), |acc, (x, s)| if s < acc.1 || s.is_nan() { (x, s) } else { acc });
    let radii = [r / 4.0, r / 2.0, r];
    let side = |sign: f64, f: &dyn Fn(f64) -> f64| {
        let values = radii.map(|y| f(sign * y));
        SideVerdict {
            verdict: classify(values),
            values,
        }
    };
    let completeness = [
        side(-1.0, &|y| intrinsic_length(d, y)),
        side(1.0, &|y| intrinsic_length(d, y)),
    ];
    let non_explosion = [side(-1.0, &|y| feller(d, y)), side(1.0, &|y| feller(d, y))];
    AssumptionReport {
        min_sigma,
        argmin_sigma,
        completeness,
        non_explosion,
    }
}

/// `d_a(x, y) = |∫_x^y du/a(u)|`.
pub fn distance(m: &DiffusionModel, a: &Expr, x: f64, y: f64) -> Result<f64> {
    let c = a.bind(m.params()).compile(&Params::new())?;
    let r = integrate(
        |u| {
            let v = c.eval(u);
            if v > 0.0 {
                1.0 / v
            } else {
                f64::NAN
            }
        },
        x.min(y),
        x.max(y),
        &QuadConfig::default().tightened(1e-3),
    )
    .map_err(|e| match e {
        Error::NanIntegrand { x } => Error::InadmissibleWeight(format!("a is not positive at x = {x}")),
        e => e,
    })?;
    Ok(r.require_converged()?.value)
}
