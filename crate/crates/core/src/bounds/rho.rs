use super::{BoundReport, ErrorBudget, Method, Side, Target};
use crate::error::{Error, Result};
use crate::model::{realize_weight, DiffusionModel, DualModel, WeightSpec};
use crate::optim::{golden_min, maximize, OptConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoConfig {
    /// Half-width of the scanned window.
    pub radius: f64,
    pub grid: usize,
}

impl Default for RhoConfig {
    fn default() -> RhoConfig {
        RhoConfig {
            radius: 12.0,
            grid: 4001,
        }
    }
}

/// `ρ_a = inf V_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rho {
    /// `-∞` when `V_a` is unbounded below.
    pub value: f64,
    pub argmin: f64,
    /// Set when `V_a` decreases outward at a window edge and the outward
    /// probes kept falling.
    pub unbounded: bool,
    /// Settling of the outward probes; zero when none were needed.
    pub truncation: f64,
}

fn va_at(d: &DualModel, x: f64) -> f64 {
    let v = d.va(x);
    if v.is_nan() {
        // Removable singularity of the symbolic form, as at a kink.
        let h = 1e-9 * (1.0 + x.abs());
        d.va(x - h).min(d.va(x + h))
    } else {
        v
    }
}

struct Window {
    xs: Vec<f64>,
    vs: Vec<f64>,
    lo: f64,
    hi: f64,
    best: f64,
    argmin: f64,
}

/// Grid scan of `[-R, R]` (clipped to the support) refined by golden-section
/// search around the three lowest grid points.
fn scan_window(d: &DualModel, cfg: &RhoConfig) -> Result<Window> {
    let (slo, shi) = d.support();
    let lo = slo.max(-cfg.radius);
    let hi = shi.min(cfg.radius);
    let n = cfg.grid.max(8);
    let h = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i + 1 == n { hi } else { lo + h * i as f64 }).collect();
    let vs = crate::par::map_slice(&xs, |&x| va_at(d, x));
    if let Some(i) = vs.iter().position(|v| v.is_nan()) {
        return Err(Error::InadmissibleWeight(format!("V_a is not defined at x = {}", xs[i])));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vs[i].total_cmp(&vs[j]).then(i.cmp(&j)));
    let (mut best, mut argmin) = (vs[order[0]], xs[order[0]]);
    if best.is_finite() {
        for &i in order.iter().take(3) {
            let a = xs[i.saturating_sub(1)];
            let b = xs[(i + 1).min(n - 1)];
            let (x, v) = golden_min(|x| va_at(d, x), a, b, 1e-10);
            if v < best {
                best = v;
                argmin = x;
            }
        }
    }
    Ok(Window {
        xs,
        vs,
        lo,
        hi,
        best,
        argmin,
    })
}

/// Infimum of `V_a` over `[-R, R]` only.
pub(crate) fn window_inf(d: &DualModel, cfg: &RhoConfig) -> Result<f64> {
    Ok(scan_window(d, cfg)?.best)
}

/// Infimum of `V_a`: a grid scan of `[-R, R]` refined by golden-section
/// search, extended by outward probes at `R·2^k` when `V_a` falls toward an
/// open edge by more than the rounding scale of the scan.
pub fn rho_of_weight(d: &DualModel, cfg: &RhoConfig) -> Result<Rho> {
    let (slo, shi) = d.support();
    let w = scan_window(d, cfg)?;
    let (mut best, mut argmin) = (w.best, w.argmin);
    if best == f64::NEG_INFINITY {
        return Ok(Rho {
            value: best,
            argmin,
            unbounded: true,
            truncation: 0.0,
        });
    }
    let n = w.xs.len();
    let scale = w.vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 1e-8 * (1.0 + scale);
    let mut truncation: f64 = 0.0;
    let edges = [(w.vs[0], w.vs[5], slo < w.lo, -1.0), (w.vs[n - 1], w.vs[n - 6], shi > w.hi, 1.0)];
    for (edge, inner, open, dir) in edges {
        if !open || !(edge < inner - noise) {
            continue;
        }
        let mut prev = f64::NAN;
        let mut last = f64::NAN;
        for k in 1..=30 {
            let x = dir * cfg.radius * 2f64.powi(k);
            if (dir < 0.0 && x < slo) || (dir > 0.0 && x > shi) {
                break;
            }
            prev = last;
            last = va_at(d, x);
            if !last.is_finite() || last < -1e6 * (1.0 + best.abs()) {
                return Ok(Rho {
                    value: f64::NEG_INFINITY,
                    argmin: x,
                    unbounded: true,
                    truncation: f64::INFINITY,
                });
            }
            if last < best {
                best = last;
                argmin = x;
            }
        }
        let settle = (last - prev).abs();
        if settle > 1e-6 * (1.0 + last.abs()) {
            return Ok(Rho {
                value: f64::NEG_INFINITY,
                argmin: dir * f64::INFINITY,
                unbounded: true,
                truncation: f64::INFINITY,
            });
        }
        if settle.is_finite() {
            truncation = truncation.max(settle);
        }
    }
    Ok(Rho {
        value: best,
        argmin,
        unbounded: false,
        truncation,
    })
}

/// `λ1 ≥ sup_θ ρ_{a_θ}` over the free parameters of `w`.
pub fn chen_wang_lower(m: &DiffusionModel, w: &WeightSpec, opt: &OptConfig, rho: &RhoConfig) -> Result<BoundReport> {
    let free = w.free();
    if free.len() > 3 {
        return Err(Error::Precondition(format!("{} free weight parameters; at most 3 are supported", free.len())));
    }
    let boxes: Vec<(f64, f64)> = free.iter().map(|(_, lo, hi)| (*lo, *hi)).collect();
    let objective = |theta: &[f64]| -> f64 {
        realize_weight(m, w, &w.assignment(theta))
            .and_then(|d| rho_of_weight(&d, rho))
            .map_or(f64::NEG_INFINITY, |r| r.value)
    };
    let Some(best) = maximize(objective, &boxes, opt) else {
        return Ok(BoundReport::infeasible(
            Method::ChenWang,
            Target::Lambda1,
            Side::Lower,
            "no admissible weight in the parameter box",
        ));
    };
    let params = w.assignment(&best.argmax);
    let d = realize_weight(m, w, &params)?;
    let r = rho_of_weight(&d, rho)?;
    if !(r.value > 0.0) {
        return Ok(BoundReport::infeasible(
            Method::ChenWang,
            Target::Lambda1,
            Side::Lower,
            format!("best ρ_a = {:.3e} is not positive", r.value),
        )
        .with_params(&params));
    }
    let mut report = BoundReport::new(Method::ChenWang, Target::Lambda1, Side::Lower, r.value).with_params(&params);
    report.params.insert("argmin_x".into(), r.argmin);
    report.error_budget = ErrorBudget {
        quad_err: 0.0,
        opt_gap: best.opt_gap(),
        truncation: r.truncation,
    };
    report.notes.push(format!("weight form {}", d.kind()));
    Ok(report)
}
