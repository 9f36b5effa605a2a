//! Euler-Maruyama simulation of `dX = √2 σ dB + b dt` and Feynman-Kac
//! estimators for the intertwining relations.
//!
//! Each path (or antithetic pair) draws from its own ChaCha stream keyed by
//! `(seed, component, index)`, and all reductions run in index order, so
//! results do not depend on scheduling.

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr, Params};
use crate::model::{realize_weight, Diffusion, DiffusionModel, DualModel, Domain, WeightSpec, PROBE_POINTS, PROBE_RADIUS};
use crate::par::{map_range, pairwise_sum};
use crate::quad::PhiSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MCConfig {
    /// Euler step `Δt`; the last step is shortened to land on the horizon.
    pub step: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub blow_up_radius: f64,
}

impl Default for MCConfig {
    fn default() -> MCConfig {
        MCConfig {
            step: 1e-3,
            horizon: 0.5,
            paths: 100_000,
            seed: 20_240_601,
            antithetic: true,
            blow_up_radius: 1e6,
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.horizon >= self.step) || self.paths == 0 || !(self.blow_up_radius > 0.0) {
            return Err(Error::Config(format!("invalid Monte-Carlo settings {self:?}")));
        }
        Ok(())
    }

    fn at(&self, t: f64) -> MCConfig {
        MCConfig { horizon: t, ..*self }
    }

    /// Independent sampling units: antithetic pairs or single paths.
    fn units(&self) -> usize {
        if self.antithetic {
            self.paths.div_ceil(2)
        } else {
            self.paths
        }
    }

    fn signs(&self) -> &'static [f64] {
        if self.antithetic {
            &[1.0, -1.0]
        } else {
            &[1.0]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightStats {
    pub min: f64,
    pub max: f64,
    /// `(Σw)²/Σw²` over the unflagged paths.
    pub effective_sample_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FKEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub paths_used: usize,
    pub weight_stats: WeightStats,
    pub flagged_fraction: f64,
    /// Smallest potential value met along any path.
    pub min_potential: f64,
}

/// Endpoints (`NaN` for flagged paths) and pathwise `∫V` in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub endpoints: Vec<f64>,
    pub integrals: Vec<f64>,
    pub flagged_fraction: f64,
}

/// Stream families, so that estimates combined in one check are independent.
const LHS: u64 = 0;
const RHS: u64 = 1;
const KILLED: u64 = 2;

fn rng(cfg: &MCConfig, component: u64, unit: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream((component << 48) | unit as u64);
    r
}

#[derive(Debug, Clone, Copy)]
struct Track {
    x: f64,
    int_v: f64,
    min_v: f64,
    flagged: bool,
}

/// One Euler-Maruyama path per start, all driven by the same increments.
fn walk(d: &dyn Diffusion, v: &dyn Fn(f64) -> f64, starts: &[f64], cfg: &MCConfig, rng: &mut ChaCha8Rng, sign: f64) -> Vec<Track> {
    let steps = (cfg.horizon / cfg.step).ceil().max(1.0) as usize;
    let dt = cfg.horizon / steps as f64;
    let sq = (2.0 * dt).sqrt();
    let mut tr: Vec<(Track, f64)> = starts
        .iter()
        .map(|&x| {
            let v0 = v(x);
            (
                Track {
                    x,
                    int_v: 0.0,
                    min_v: v0,
                    flagged: !v0.is_finite(),
                },
                v0,
            )
        })
        .collect();
    for _ in 0..steps {
        let z: f64 = rng.sample::<f64, _>(StandardNormal) * sign;
        for (t, vx) in tr.iter_mut() {
            if t.flagged {
                continue;
            }
            let x = t.x + d.drift(t.x) * dt + sq * d.sigma(t.x) * z;
            let vn = v(x);
            if !x.is_finite() || x.abs() > cfg.blow_up_radius || !vn.is_finite() {
                t.flagged = true;
                continue;
            }
            t.int_v += 0.5 * (*vx + vn) * dt;
            t.min_v = t.min_v.min(vn);
            t.x = x;
            *vx = vn;
        }
    }
    tr.into_iter().map(|(t, _)| t).collect()
}

fn require_line(d: &dyn Diffusion) -> Result<()> {
    match d.domain() {
        Domain::Line => Ok(()),
        Domain::Interval(..) => Err(Error::Precondition("path simulation is implemented on the whole line".into())),
    }
}

fn explosive(flagged: usize, total: usize) -> Result<f64> {
    let fraction = flagged as f64 / total.max(1) as f64;
    if fraction > 0.5 {
        return Err(Error::LikelyExplosive { fraction });
    }
    Ok(fraction)
}

/// Paths of `d` from `x0` with `∫_0^t v(X_s) ds` accumulated by the trapezoid rule.
pub fn simulate_with(d: &dyn Diffusion, v: &(dyn Fn(f64) -> f64 + Sync), x0: f64, cfg: &MCConfig) -> Result<Ensemble> {
    cfg.validate()?;
    require_line(d)?;
    let units = map_range(cfg.units(), |u| {
        cfg.signs()
            .iter()
            .map(|&s| walk(d, v, &[x0], cfg, &mut rng(cfg, LHS, u), s)[0])
            .collect::<Vec<_>>()
    });
    let tracks: Vec<Track> = units.into_iter().flatten().take(cfg.paths).collect();
    let flagged = tracks.iter().filter(|t| t.flagged).count();
    let flagged_fraction = explosive(flagged, tracks.len())?;
    Ok(Ensemble {
        endpoints: tracks.iter().map(|t| if t.flagged { f64::NAN } else { t.x }).collect(),
        integrals: tracks.iter().map(|t| if t.flagged { f64::NAN } else { t.int_v }).collect(),
        flagged_fraction,
    })
}

/// Paths of `d` from `x0`.
pub fn simulate(d: &dyn Diffusion, x0: f64, cfg: &MCConfig) -> Result<Ensemble> {
    simulate_with(d, &|_| 0.0, x0, cfg)
}

/// Mean and standard error over sampling units; `None` units are dropped.
fn mean_se(values: &[Option<f64>]) -> (f64, f64, usize) {
    let used: Vec<f64> = values.iter().flatten().copied().collect();
    let n = used.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = pairwise_sum(&used) / n as f64;
    let dev: Vec<f64> = used.iter().map(|v| (v - mean).powi(2)).collect();
    let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
    (mean, (var / n as f64).sqrt(), n)
}

fn fk_units(
    d: &dyn Diffusion,
    v: &(dyn Fn(f64) -> f64 + Sync),
    g: &(dyn Fn(f64) -> f64 + Sync),
    x0: f64,
    cfg: &MCConfig,
    component: u64,
) -> Result<FKEstimate> {
    cfg.validate()?;
    require_line(d)?;
    let per_unit = map_range(cfg.units(), |u| {
        cfg.signs()
            .iter()
            .map(|&s| walk(d, v, &[x0], cfg, &mut rng(cfg, component, u), s)[0])
            .collect::<Vec<_>>()
    });
    let paths = per_unit.len() * cfg.signs().len();
    let mut flagged = 0;
    let mut values = Vec::with_capacity(per_unit.len());
    let mut weights = Vec::with_capacity(paths);
    let mut min_potential = f64::INFINITY;
    for (u, tracks) in per_unit.iter().enumerate() {
        let mut sum = 0.0;
        let mut ok = true;
        for (k, t) in tracks.iter().enumerate() {
            if t.flagged {
                flagged += 1;
                ok = false;
                continue;
            }
            min_potential = min_potential.min(t.min_v);
            if -t.int_v > 700.0 {
                return Err(Error::WeightOverflow {
                    log_weight: -t.int_v,
                    path: u * tracks.len() + k,
                });
            }
            let w = (-t.int_v).exp();
            weights.push(w);
            sum += g(t.x) * w;
        }
        values.push(ok.then(|| sum / tracks.len() as f64));
    }
    let flagged_fraction = explosive(flagged, paths)?;
    let (mean, std_err, units) = mean_se(&values);
    let sw = pairwise_sum(&weights);
    let sw2 = pairwise_sum(&weights.iter().map(|w| w * w).collect::<Vec<_>>());
    Ok(FKEstimate {
        mean,
        std_err,
        paths_used: units * cfg.signs().len(),
        weight_stats: WeightStats {
            min: weights.iter().copied().fold(f64::INFINITY, f64::min),
            max: weights.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            effective_sample_size: if sw2 > 0.0 { sw * sw / sw2 } else { 0.0 },
        },
        flagged_fraction,
        min_potential,
    })
}

/// `E[g(X_t) exp(-∫_0^t v(X_s) ds)]` for any diffusion and potential.
pub fn feynman_kac_fn(
    d: &dyn Diffusion,
    v: &(dyn Fn(f64) -> f64 + Sync),
    g: &(dyn Fn(f64) -> f64 + Sync),
    x0: f64,
    cfg: &MCConfig,
) -> Result<FKEstimate> {
    fk_units(d, v, g, x0, cfg, RHS)
}

fn compile_x(e: &Expr, params: &Params) -> Result<Compiled> {
    e.bind(params).compile(&Params::new())
}

/// `P^{V_a}_{a,t} g(x0)` under the dual dynamics with potential `V_a`.
pub fn feynman_kac(d: &DualModel, g: &Expr, x0: f64, cfg: &MCConfig) -> Result<FKEstimate> {
    let g = compile_x(g, d.base().params())?;
    fk_units(d, &|x| d.va(x), &|x| g.eval(x), x0, cfg, RHS)
}

/// The same target as [`feynman_kac`] from the process killed at rate `V_a`:
/// `E[g(X_t); ∫_0^t V_a(X_s) ds < ε]`, `ε ~ Exp(1)`. Requires `V_a ≥ 0` along paths.
pub fn feynman_kac_killed(d: &DualModel, g: &Expr, x0: f64, cfg: &MCConfig) -> Result<FKEstimate> {
    cfg.validate()?;
    require_line(d)?;
    let g = compile_x(g, d.base().params())?;
    let v = |x: f64| d.va(x);
    let per_unit = map_range(cfg.units(), |u| {
        cfg.signs()
            .iter()
            .map(|&s| {
                let mut r = rng(cfg, KILLED, u);
                let clock: f64 = r.sample(Exp1);
                (walk(d, &v, &[x0], cfg, &mut r, s)[0], clock)
            })
            .collect::<Vec<_>>()
    });
    let paths = per_unit.len() * cfg.signs().len();
    let mut flagged = 0;
    let mut min_potential = f64::INFINITY;
    let mut alive = 0usize;
    let mut values = Vec::with_capacity(per_unit.len());
    for tracks in &per_unit {
        let mut sum = 0.0;
        let mut ok = true;
        for (t, clock) in tracks {
            if t.flagged {
                flagged += 1;
                ok = false;
                continue;
            }
            min_potential = min_potential.min(t.min_v);
            if t.int_v < *clock {
                alive += 1;
                sum += g.eval(t.x);
            }
        }
        values.push(ok.then(|| sum / tracks.len() as f64));
    }
    if min_potential < 0.0 {
        return Err(Error::Precondition(format!(
            "the killed estimator needs V_a ≥ 0; met V_a = {min_potential}"
        )));
    }
    let flagged_fraction = explosive(flagged, paths)?;
    let (mean, std_err, units) = mean_se(&values);
    Ok(FKEstimate {
        mean,
        std_err,
        paths_used: units * cfg.signs().len(),
        weight_stats: WeightStats {
            min: 0.0,
            max: 1.0,
            effective_sample_size: alive as f64,
        },
        flagged_fraction,
        min_potential,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Standard errors too large to resolve the comparison.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntertwiningCheck {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// `|lhs - rhs|` over the combined standard error.
    pub zscore: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubIntertwiningCheck {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// `(rhs - lhs)` over the combined standard error.
    pub margin_zscore: f64,
    pub verdict: Verdict,
}

/// Central-difference half-width for `∂_x P_t f`.
const DELTA: f64 = 1e-3;
/// Combined standard error above this fraction of the compared values is unresolved.
const RESOLUTION: f64 = 0.1;

fn resolved(se: f64, a: f64, b: f64) -> bool {
    se <= RESOLUTION * a.abs().max(b.abs())
}

/// Per-unit `(P_t f(x0), ∂_x P_t f(x0))` with common random numbers at `x0 ± δ`.
fn semigroup_and_gradient(m: &DiffusionModel, f: &Compiled, x0: f64, cfg: &MCConfig) -> Result<Vec<Option<(f64, f64)>>> {
    cfg.validate()?;
    require_line(m)?;
    let starts = [x0 - DELTA, x0, x0 + DELTA];
    let per_unit = map_range(cfg.units(), |u| {
        cfg.signs()
            .iter()
            .map(|&s| walk(m, &|_| 0.0, &starts, cfg, &mut rng(cfg, LHS, u), s))
            .collect::<Vec<_>>()
    });
    let paths = per_unit.len() * cfg.signs().len();
    let mut flagged = 0;
    let values = per_unit
        .iter()
        .map(|paths| {
            let mut acc = (0.0, 0.0);
            let mut ok = true;
            for t in paths {
                if t.iter().any(|t| t.flagged) {
                    flagged += 1;
                    ok = false;
                    continue;
                }
                acc.0 += f.eval(t[1].x);
                acc.1 += (f.eval(t[2].x) - f.eval(t[0].x)) / (2.0 * DELTA);
            }
            let k = paths.len() as f64;
            ok.then(|| (acc.0 / k, acc.1 / k))
        })
        .collect();
    explosive(flagged, paths)?;
    Ok(values)
}

/// `∇_a P_t f = P^{V_a}_{a,t} ∇_a f` at `x0`, with `∇_a f = a f'`.
pub fn check_intertwining(
    m: &DiffusionModel,
    w: &WeightSpec,
    params: &Params,
    f: &Expr,
    x0: f64,
    t: f64,
    cfg: &MCConfig,
) -> Result<IntertwiningCheck> {
    let d = realize_weight(m, w, params)?;
    let fc = compile_x(f, m.params())?;
    let df = compile_x(&f.bind(m.params()).differentiate(), &Params::new())?;
    let a0 = d.a(x0);
    if t == 0.0 {
        let v = a0 * df.eval(x0);
        return Ok(IntertwiningCheck {
            lhs: v,
            lhs_se: 0.0,
            rhs: v,
            rhs_se: 0.0,
            zscore: 0.0,
            verdict: Verdict::Pass,
        });
    }
    let cfg = cfg.at(t);
    let units = semigroup_and_gradient(m, &fc, x0, &cfg)?;
    let grads: Vec<Option<f64>> = units.iter().map(|u| u.map(|(_, g)| a0 * g)).collect();
    let (lhs, lhs_se, _) = mean_se(&grads);
    let rhs = fk_units(&d, &|x| d.va(x), &|x| d.a(x) * df.eval(x), x0, &cfg, RHS)?;
    let se = lhs_se.hypot(rhs.std_err);
    let zscore = (lhs - rhs.mean).abs() / se;
    let verdict = if !resolved(se, lhs, rhs.mean) {
        Verdict::Inconclusive
    } else if zscore < 3.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(IntertwiningCheck {
        lhs,
        lhs_se,
        rhs: rhs.mean,
        rhs_se: rhs.std_err,
        zscore,
        verdict,
    })
}

/// Checks `(σ/a)' φ'''(f) f' ≥ 0` and monotone `f` valued in the interval of `φ`.
fn subintertwining_precondition(d: &DualModel, phi: &PhiSpec, f: &Compiled, df: &Compiled) -> Result<()> {
    phi.validate()?;
    let (_, d3) = phi.derivatives();
    let p3 = d3.compile(&Params::new())?;
    let (lo, hi) = phi.interval();
    let grid = d.base().probe_grid(PROBE_RADIUS, PROBE_POINTS);
    let slopes: Vec<f64> = grid.iter().map(|&x| df.eval(x)).collect();
    let scale = slopes.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-12 * scale;
    if !(slopes.iter().all(|&s| s >= -tol) || slopes.iter().all(|&s| s <= tol)) {
        return Err(Error::Precondition("f must be monotone".into()));
    }
    for (&x, &fp) in grid.iter().zip(&slopes) {
        let y = f.eval(x);
        if !(y > lo && y < hi) {
            return Err(Error::Precondition(format!("f({x:.6}) = {y:.6e} lies outside the domain of φ")));
        }
        let prod = d.sigma_over_a_log_derivative(x) * p3.eval(y) * fp;
        if prod < -1e-9 * (1.0 + (p3.eval(y) * fp).abs()) {
            return Err(Error::Precondition(format!(
                "(σ/a)' φ'''(f) f' = {prod:.3e} < 0 at x = {x:.6}: choose a weight of the other monotone class"
            )));
        }
    }
    Ok(())
}

/// `φ''(P_t f)(∇_a P_t f)² ≤ P^{2V_a}_{a,t}[φ''(f)(∇_a f)²]` at `x0`.
#[allow(clippy::too_many_arguments)]
pub fn check_subintertwining(
    m: &DiffusionModel,
    w: &WeightSpec,
    params: &Params,
    phi: &PhiSpec,
    f: &Expr,
    x0: f64,
    t: f64,
    cfg: &MCConfig,
) -> Result<SubIntertwiningCheck> {
    let d = realize_weight(m, w, params)?;
    let fc = compile_x(f, m.params())?;
    let df = compile_x(&f.bind(m.params()).differentiate(), &Params::new())?;
    subintertwining_precondition(&d, phi, &fc, &df)?;
    let (d2, d3) = phi.derivatives();
    let (p2, p3) = (d2.compile(&Params::new())?, d3.compile(&Params::new())?);
    let a0 = d.a(x0);
    let cfg = cfg.at(t);
    let units = semigroup_and_gradient(m, &fc, x0, &cfg)?;
    let pairs: Vec<(f64, f64)> = units.iter().flatten().copied().collect();
    let n = pairs.len() as f64;
    let mp = pairwise_sum(&pairs.iter().map(|p| p.0).collect::<Vec<_>>()) / n;
    let mg = pairwise_sum(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()) / n;
    let cov = |f: &dyn Fn(&(f64, f64)) -> f64| pairwise_sum(&pairs.iter().map(f).collect::<Vec<_>>()) / ((n - 1.0) * n);
    let (vpp, vgg, vpg) = (
        cov(&|p| (p.0 - mp).powi(2)),
        cov(&|p| (p.1 - mg).powi(2)),
        cov(&|p| (p.0 - mp) * (p.1 - mg)),
    );
    let ag = a0 * mg;
    let lhs = p2.eval(mp) * ag * ag;
    // Delta method on (P_t f, ∂P_t f).
    let (jp, jg) = (p3.eval(mp) * ag * ag, 2.0 * p2.eval(mp) * a0 * ag);
    let lhs_se = (jp * jp * vpp + jg * jg * vgg + 2.0 * jp * jg * vpg).max(0.0).sqrt();
    let theta = |x: f64| {
        let g = d.a(x) * df.eval(x);
        p2.eval(fc.eval(x)) * g * g
    };
    let rhs = fk_units(&d, &|x| 2.0 * d.va(x), &theta, x0, &cfg, RHS)?;
    let se = lhs_se.hypot(rhs.std_err);
    let margin_zscore = (rhs.mean - lhs) / se;
    let verdict = if !resolved(se, lhs, rhs.mean) {
        Verdict::Inconclusive
    } else if margin_zscore > -3.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SubIntertwiningCheck {
        lhs,
        lhs_se,
        rhs: rhs.mean,
        rhs_se: rhs.std_err,
        margin_zscore,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::{build_model, DriftSpec, WeightForm};

    fn e(s: &str) -> Expr {
        parse(s, &["eps", "gamma"]).unwrap()
    }

    fn ou() -> DiffusionModel {
        build_model(e("1"), DriftSpec::Drift(e("-x")), &Params::new()).unwrap()
    }

    fn small(paths: usize, t: f64) -> MCConfig {
        MCConfig {
            paths,
            horizon: t,
            ..MCConfig::default()
        }
    }

    fn unit() -> WeightSpec {
        WeightSpec::new(WeightForm::Direct(e("1")))
    }

    #[test]
    fn ou_mean_decays() {
        let ens = simulate(&ou(), 2.0, &small(20_000, 3.0)).unwrap();
        let xs = &ens.endpoints;
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        // Antithetic pairs are dependent, so bound with the pair count.
        let se = sd / (n / 2.0).sqrt();
        assert!((mean - 2.0 * (-3.0f64).exp()).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn brownian_variance_is_two_t() {
        let bm = build_model(e("1"), DriftSpec::Drift(e("0")), &Params::new()).unwrap();
        let cfg = MCConfig {
            antithetic: false,
            ..small(20_000, 1.0)
        };
        let xs = simulate(&bm, 0.0, &cfg).unwrap().endpoints;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        // Var of the sample variance of N(0, 2) is 8/N.
        assert!((var - 2.0).abs() < 3.0 * (8.0 / 20_000.0f64).sqrt(), "{var}");
    }

    #[test]
    fn constant_potential_gives_deterministic_weight() {
        let d = realize_weight(&ou(), &unit(), &Params::new()).unwrap();
        let r = feynman_kac(&d, &e("1"), 0.3, &small(2000, 0.5)).unwrap();
        assert!((r.mean - (-0.5f64).exp()).abs() < 1e-12 && r.std_err < 1e-12);
        assert!((r.weight_stats.effective_sample_size - r.paths_used as f64).abs() < 1e-6);
        let half = feynman_kac(&d, &e("1"), 0.3, &small(2000, 0.25)).unwrap();
        assert!((half.mean * half.mean - r.mean).abs() < 1e-12);
    }

    #[test]
    fn seed_determinism() {
        let d = realize_weight(&ou(), &unit(), &Params::new()).unwrap();
        let cfg = small(4000, 0.5);
        let a = feynman_kac(&d, &e("tanh(x)"), 0.5, &cfg).unwrap();
        let b = feynman_kac(&d, &e("tanh(x)"), 0.5, &cfg).unwrap();
        assert_eq!(a, b);
        let c = feynman_kac(&d, &e("tanh(x)"), 0.5, &MCConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn antithetic_pairs_reduce_variance() {
        let d = realize_weight(&ou(), &unit(), &Params::new()).unwrap();
        let on = feynman_kac(&d, &e("tanh(x)"), 0.5, &small(20_000, 0.5)).unwrap();
        let off = feynman_kac(&d, &e("tanh(x)"), 0.5, &MCConfig { antithetic: false, ..small(20_000, 0.5) }).unwrap();
        assert!(on.std_err <= off.std_err, "{} vs {}", on.std_err, off.std_err);
    }

    #[test]
    fn explosive_drift_is_flagged() {
        let m = build_model(e("1"), DriftSpec::Drift(e("x^3")), &Params::new()).unwrap();
        let r = simulate(&m, 3.0, &small(200, 1.0));
        assert!(matches!(r, Err(Error::LikelyExplosive { .. })), "{r:?}");
    }

    #[test]
    fn very_negative_potential_overflows() {
        let d = realize_weight(&ou(), &unit(), &Params::new()).unwrap();
        let r = feynman_kac_fn(&d, &|_| -2000.0, &|_| 1.0, 0.0, &small(100, 0.5));
        assert!(matches!(r, Err(Error::WeightOverflow { .. })), "{r:?}");
    }

    #[test]
    fn intertwining_at_time_zero_is_exact() {
        let r = check_intertwining(&ou(), &unit(), &Params::new(), &e("tanh(x)"), 0.5, 0.0, &MCConfig::default()).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert_eq!(r.lhs, 1.0 - 0.5f64.tanh().powi(2));
    }

    #[test]
    fn ou_intertwining() {
        let r = check_intertwining(&ou(), &unit(), &Params::new(), &e("tanh(x)"), 0.5, 0.5, &small(20_000, 0.5)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn subintertwining_refuses_the_wrong_class() {
        let quartic = build_model(e("1"), DriftSpec::TargetPotential(e("x^4/4")), &Params::new()).unwrap();
        // a decreasing makes σ/a increasing, against φ''' < 0 and f' > 0.
        let dec = WeightSpec::new(WeightForm::ExpW(e("-tanh(x)")));
        let r = check_subintertwining(&quartic, &dec, &Params::new(), &PhiSpec::LogSobolev, &e("2+tanh(x)"), 0.0, 0.25, &small(1000, 0.25));
        assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
    }
}
