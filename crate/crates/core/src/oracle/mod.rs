//! Independent reference values: a finite-difference eigensolver for `λ1` on
//! truncated domains and image-sum heat kernels on `[0, 1]`.

mod fd;
mod kernels;

pub use fd::{discretize, heat_solve, Pencil};
pub use kernels::{apply_kernel, image_kernels, ImageKernels, KernelKind};

use crate::bounds::OracleValue;
use crate::error::{Error, Result};
use crate::model::{Boundary, DiffusionModel, DualModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Half-width of the window in the intrinsic coordinate; `None` picks
    /// [`default_radius`].
    pub radius: Option<f64>,
    pub n: usize,
    pub boundary: Boundary,
    pub extrapolate: bool,
}

impl Default for OracleConfig {
    fn default() -> OracleConfig {
        OracleConfig {
            radius: None,
            n: 4096,
            boundary: Boundary::Neumann,
            extrapolate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Smallest eigenvalue; zero up to rounding for Neumann boundaries.
    pub lambda0: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub n: usize,
    pub boundary: Boundary,
    pub extrapolated: bool,
    /// `|λ1(2n) - λ1(n)|/3`, or zero without extrapolation.
    pub discretization_err: f64,
    /// `λ1` on the window of radius `1.25R`.
    pub lambda1_wide: f64,
    /// `λ1(R) - λ1(1.25R)`.
    pub truncation: f64,
    /// Discretization plus truncation.
    pub err: f64,
    /// `λ1 - λ0 < 1e-12`.
    pub degenerate: bool,
    /// Cell centers in the intrinsic coordinate and in `x`.
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    /// First nontrivial eigenvector, max-norm 1, oriented to increase.
    pub eigvec: Vec<f64>,
    pub sign_changes: usize,
    /// The eigenvector is strictly increasing on the grid.
    pub gprime_positive: bool,
}

impl From<&EigenResult> for OracleValue {
    fn from(e: &EigenResult) -> OracleValue {
        OracleValue {
            lambda1: e.lambda1,
            err: e.err,
        }
    }
}

/// Radius in `s` where `e^{-U}/σ` falls below `1e-14` of its maximum, capped at 20.
pub fn default_radius(m: &DiffusionModel) -> Result<f64> {
    const CAP: f64 = 20.0;
    let (a, b) = fd::s_window(m, CAP)?;
    let n = 4001;
    let s: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    let lw: Vec<f64> = fd::map_to_x(m, &s).iter().map(|&x| -m.potential(x) - m.sigma(x).ln()).collect();
    let top = lw.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Underflow { x: 0.0 });
    }
    let cut = top - 14.0 * std::f64::consts::LN_10;
    let r = s
        .iter()
        .zip(&lw)
        .filter(|(_, &v)| v >= cut)
        .fold(0.0f64, |r, (&s, _)| r.max(s.abs()));
    Ok((r + (b - a) / (n - 1) as f64).min(CAP))
}

struct Solve {
    lambda0: f64,
    lambda1: f64,
    pencil: Pencil,
}

fn solve(m: &DiffusionModel, r: f64, n: usize, bc: Boundary) -> Result<Solve> {
    let pencil = discretize(m, r, n, bc)?;
    let (d, e) = pencil.symmetric();
    Ok(Solve {
        lambda0: fd::bisect_eigenvalue(&d, &e, 0),
        lambda1: fd::bisect_eigenvalue(&d, &e, 1),
        pencil,
    })
}

/// `λ1` of the truncated problem on the `s`-window of radius `r`, with
/// Richardson extrapolation in `1/n²` and a truncation estimate from `1.25r`.
pub fn spectral_gap_fd(m: &DiffusionModel, r: f64, cfg: &OracleConfig) -> Result<EigenResult> {
    let n = cfg.n;
    let wide_n = (1.25 * n as f64).round() as usize;
    let mut runs = vec![(r, n), (1.25 * r, wide_n)];
    if cfg.extrapolate {
        runs.extend([(r, 2 * n), (1.25 * r, 2 * wide_n)]);
    }
    let solved = crate::par::map_slice(&runs, |&(r, n)| solve(m, r, n, cfg.boundary));
    let solved: Vec<Solve> = solved.into_iter().collect::<Result<_>>()?;
    let extrapolate = |coarse: f64, fine: f64| fine + (fine - coarse) / 3.0;
    let (l0, l1, wide, disc, fine) = if cfg.extrapolate {
        (
            extrapolate(solved[0].lambda0, solved[2].lambda0),
            extrapolate(solved[0].lambda1, solved[2].lambda1),
            extrapolate(solved[1].lambda1, solved[3].lambda1),
            (solved[2].lambda1 - solved[0].lambda1).abs() / 3.0,
            &solved[2],
        )
    } else {
        (solved[0].lambda0, solved[0].lambda1, solved[1].lambda1, 0.0, &solved[0])
    };
    let p = &fine.pencil;
    let mean = p.s.iter().sum::<f64>() / p.len() as f64;
    let start: Vec<f64> = p.s.iter().map(|s| s - mean).collect();
    let mut g = fd::inverse_iteration(p, fine.lambda1, start);
    let orient: f64 = g.iter().zip(&p.s).map(|(g, s)| g * (s - mean)).sum();
    if orient < 0.0 {
        g.iter_mut().for_each(|v| *v = -*v);
    }
    let sign_changes = g.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    let gprime_positive = g.windows(2).all(|w| w[1] > w[0]);
    Ok(EigenResult {
        lambda1: l1,
        lambda0: l0,
        radius: r,
        n,
        boundary: cfg.boundary,
        extrapolated: cfg.extrapolate,
        discretization_err: disc,
        lambda1_wide: wide,
        truncation: l1 - wide,
        err: disc + (l1 - wide).abs(),
        degenerate: l1 - l0 < 1e-12,
        s: p.s.clone(),
        x: p.x.clone(),
        eigvec: g,
        sign_changes,
        gprime_positive,
    })
}

/// [`spectral_gap_fd`] at `cfg.radius`, or at [`default_radius`] when unset.
pub fn oracle(m: &DiffusionModel, cfg: &OracleConfig) -> Result<EigenResult> {
    let r = match cfg.radius {
        Some(r) => r,
        None => default_radius(m)?,
    };
    spectral_gap_fd(m, r, cfg)
}

/// The equality-case weight `a = 1/g'` from the oracle eigenvector, tabulated
/// with `log a`, `a'/a` and `V_a` from centered differences in `s`.
pub fn eigvec_weight(m: &DiffusionModel, e: &EigenResult) -> Result<DualModel> {
    if e.degenerate {
        return Err(Error::Degenerate("λ1 is not separated from λ0".into()));
    }
    if !e.gprime_positive {
        return Err(Error::Degenerate("the eigenvector is not strictly monotone on the grid".into()));
    }
    let n = e.s.len();
    let h2 = 2.0 * (e.s[1] - e.s[0]);
    let sigma: Vec<f64> = e.x.iter().map(|&x| m.sigma(x)).collect();
    let centered = |v: &[f64], i: usize| (v[i + 1] - v[i - 1]) / (h2 * sigma[i]);
    let mut log_a = vec![f64::NAN; n];
    for i in 1..n - 1 {
        let gx = centered(&e.eigvec, i);
        if !(gx > 0.0) {
            return Err(Error::Degenerate(format!("g' = {gx:.3e} at x = {:.6}", e.x[i])));
        }
        log_a[i] = -gx.ln();
    }
    let mut ell = vec![f64::NAN; n];
    for i in 2..n - 2 {
        ell[i] = centered(&log_a, i);
    }
    let (mut xs, mut la, mut ls, mut va) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 3..n - 3 {
        let x = e.x[i];
        let (s, l) = (sigma[i], ell[i]);
        let dl = centered(&ell, i);
        let v = s * s * dl - s * s * l * l + (m.drift(x) + 2.0 * s * m.dsigma(x)) * l - m.ddrift(x);
        xs.push(x);
        la.push(log_a[i]);
        ls.push(l);
        va.push(v);
    }
    Ok(DualModel::tabulated(m, xs, la, ls, va))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(max - min)/|mean|`.
    pub relative: f64,
}

/// Range of `V_a` over the central fraction `inner` of the oracle grid.
pub fn va_spread(d: &DualModel, e: &EigenResult, inner: f64) -> Spread {
    let n = e.x.len();
    let skip = ((1.0 - inner.clamp(0.0, 1.0)) * 0.5 * n as f64).ceil() as usize;
    let vals: Vec<f64> = e.x[skip..n - skip].iter().map(|&x| d.va(x)).collect();
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = crate::par::pairwise_sum(&vals) / vals.len() as f64;
    Spread {
        min,
        max,
        mean,
        relative: (max - min) / mean.abs(),
    }
}
