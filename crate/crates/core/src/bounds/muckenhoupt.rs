use super::{BoundReport, ErrorBudget, Method, Side, Target};
use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::optim::golden_min;
use crate::quad::{integrate, median, QuadConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuckenhouptConfig {
    /// Outer sup over `x ∈ m ± [1e-4, radius]`.
    pub radius: f64,
    pub points: usize,
}

impl Default for MuckenhouptConfig {
    fn default() -> MuckenhouptConfig {
        MuckenhouptConfig {
            radius: 40.0,
            points: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuckenhouptResult {
    pub median: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub argmax_plus: f64,
    pub argmax_minus: f64,
    pub b: f64,
    /// `1/(4B_m)`.
    pub lower: f64,
    /// `2/B_m`.
    pub upper: f64,
    /// `(∫_m^{±∞} e^{-(U-U(m))})²`, larger side; an upper bound on `B_m`
    /// when `U - U(m)` is superadditive on each side of the median.
    pub relaxed_b: f64,
    pub relaxed_lower: f64,
    pub err: f64,
    /// The outer product was still growing at the window edge.
    pub diverging: bool,
}

impl MuckenhouptResult {
    pub fn reports(&self) -> Vec<BoundReport> {
        if self.diverging {
            let reason = "B_m diverges numerically: no spectral gap";
            return vec![
                BoundReport::infeasible(Method::Muckenhoupt, Target::Lambda1, Side::Lower, reason),
                BoundReport::infeasible(Method::Muckenhoupt, Target::Lambda1, Side::Upper, reason),
            ];
        }
        let budget = |v: f64| ErrorBudget {
            quad_err: v * self.err / self.b,
            ..ErrorBudget::default()
        };
        let mut lo = BoundReport::new(Method::Muckenhoupt, Target::Lambda1, Side::Lower, self.lower);
        let mut up = BoundReport::new(Method::Muckenhoupt, Target::Lambda1, Side::Upper, self.upper);
        lo.error_budget = budget(self.lower);
        up.error_budget = budget(self.upper);
        for r in [&mut lo, &mut up] {
            r.params.insert("B_m".into(), self.b);
            r.params.insert("median".into(), self.median);
            r.params.insert("relaxed_lower".into(), self.relaxed_lower);
        }
        vec![lo, up]
    }
}

/// Tail times core at `x` on the side `dir = ±1`, with both factors scaled by
/// `e^{∓U(x)}` to keep the exponentials bounded.
fn product(m: &DiffusionModel, med: f64, x: f64, dir: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let ux = m.potential(x);
    let end = if dir > 0.0 { m.domain().bounds().1 } else { m.domain().bounds().0 };
    let tail = integrate(|y| (ux - m.potential(y)).exp(), x, end, cfg)?.require_converged()?;
    let core = integrate(|y| (m.potential(y) - ux).exp(), med, x, cfg)?.require_converged()?;
    let (t, c) = (tail.value.abs(), core.value.abs());
    Ok((t * c, t * core.err_est + c * tail.err_est))
}

fn side(m: &DiffusionModel, med: f64, dir: f64, mc: &MuckenhouptConfig, cfg: &QuadConfig) -> Result<(f64, f64, f64, bool)> {
    let (lo, hi) = m.domain().bounds();
    let reach = if dir > 0.0 { hi - med } else { med - lo };
    let r = mc.radius.min(reach * (1.0 - 1e-9));
    let s0 = (1e-4f64).min(r / 10.0);
    let n = mc.points.max(8);
    let offs: Vec<f64> = (0..n).map(|k| s0 * (r / s0).powf(k as f64 / (n - 1) as f64)).collect();
    let vals: Vec<Result<(f64, f64)>> = crate::par::map_slice(&offs, |&s| product(m, med, med + dir * s, dir, cfg));
    let vals: Vec<(f64, f64)> = vals.into_iter().collect::<Result<_>>()?;
    let k = (0..n).fold(0, |b, i| if vals[i].0 > vals[b].0 { i } else { b });
    let (mut best, mut err) = vals[k];
    let mut arg = offs[k];
    if k > 0 && k + 1 < n {
        let (s, v) = golden_min(
            |s| product(m, med, med + dir * s, dir, cfg).map_or(f64::INFINITY, |p| -p.0),
            offs[k - 1],
            offs[k + 1],
            1e-9,
        );
        if -v > best {
            best = -v;
            arg = s;
            err = product(m, med, med + dir * s, dir, cfg)?.1;
        }
    }
    // Still rising over the last decade of the window.
    let half = vals[(n - 1) * 9 / 10].0;
    let diverging = k == n - 1 && best > half * (1.0 + 1e-3) && reach.is_infinite();
    Ok((best, err, med + dir * arg, diverging))
}

/// Muckenhoupt's constant `B_m = max(B_m⁺, B_m⁻)` and the bracket
/// `1/(4B_m) ≤ λ1 ≤ 2/B_m`; requires `σ ≡ 1`.
pub fn muckenhoupt(m: &DiffusionModel, mc: &MuckenhouptConfig, cfg: &QuadConfig) -> Result<MuckenhouptResult> {
    if !m.has_unit_sigma() {
        return Err(Error::Precondition("the Muckenhoupt criterion is stated for σ ≡ 1".into()));
    }
    m.log_z()?;
    let med = median(m, cfg)?;
    let (bp, ep, ap, dp) = side(m, med, 1.0, mc, cfg)?;
    let (bm, em, am, dm) = side(m, med, -1.0, mc, cfg)?;
    let b = bp.max(bm);
    let err = if bp >= bm { ep } else { em };
    let um = m.potential(med);
    let (lo, hi) = m.domain().bounds();
    let half = |a: f64, z: f64| -> Result<f64> { Ok(integrate(|y| (um - m.potential(y)).exp(), a, z, cfg)?.require_converged()?.value) };
    let relaxed_b = half(med, hi)?.powi(2).max(half(lo, med)?.powi(2));
    let diverging = dp || dm;
    Ok(MuckenhouptResult {
        median: med,
        b_plus: bp,
        b_minus: bm,
        argmax_plus: ap,
        argmax_minus: am,
        b: if diverging { f64::INFINITY } else { b },
        lower: if diverging { 0.0 } else { 1.0 / (4.0 * b) },
        upper: if diverging { f64::INFINITY } else { 2.0 / b },
        relaxed_b,
        relaxed_lower: 1.0 / (4.0 * relaxed_b),
        err,
        diverging,
    })
}
