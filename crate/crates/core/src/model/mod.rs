//! The operator `L f = σ² f'' + b f'`, its reversible measure, and the dual
//! operators obtained by intertwining with a weight.
//!
//! The potential is normalized by `U(0) = 0` (or `U(α) = 0` on an interval not
//! containing the origin). The normalizing constant of `μ` is kept separately
//! in [`DiffusionModel::log_z`].

mod checks;
mod weight;

pub use checks::{check_assumptions, distance, AssumptionReport, SideVerdict, Verdict};
pub use weight::{feynman_kac_potential, realize_weight, DualModel, ParamRange, WeightForm, WeightSpec};

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr, Params};
use crate::interp::{Antiderivative, Func};
use crate::quad::{integrate, QuadConfig};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

/// State space of the diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Line,
    Interval(f64, f64),
}

impl Domain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Line => (f64::NEG_INFINITY, f64::INFINITY),
            Domain::Interval(a, b) => (a, b),
        }
    }

    /// Clips `[-r, r]` to the domain.
    pub fn window(&self, r: f64) -> (f64, f64) {
        let (a, b) = self.bounds();
        (a.max(-r), b.min(r))
    }

    pub(crate) fn anchor(&self) -> f64 {
        let (a, b) = self.bounds();
        if a <= 0.0 && 0.0 <= b {
            0.0
        } else {
            a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    None,
    Neumann,
    Dirichlet,
}

/// How the drift is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    /// `b` given directly; `U' = -b/σ²`.
    Drift(Expr),
    /// Target density `∝ e^{-Ũ}`; `b = 2σσ' - σ²Ũ'`.
    TargetPotential(Expr),
}

/// Anything simulated or discretized as `dX = √2 σ dB + b dt`.
pub trait Diffusion: Sync {
    fn sigma(&self, x: f64) -> f64;
    fn drift(&self, x: f64) -> f64;
    /// Potential `U` with reversible density `e^{-U}/σ²`.
    fn potential(&self, x: f64) -> f64;
    fn domain(&self) -> Domain;
}

struct Coefficients {
    sigma: Compiled,
    dsigma: Compiled,
    d2sigma: Compiled,
    drift: Compiled,
    ddrift: Compiled,
    du: Compiled,
    d2u: Compiled,
    potential: Option<Compiled>,
}

struct Inner {
    sigma: Expr,
    drift: Expr,
    du: Expr,
    potential: Option<Expr>,
    domain: Domain,
    boundary: Boundary,
    params: Params,
    c: Coefficients,
    table: OnceLock<Result<Antiderivative>>,
    log_z: OnceLock<Result<f64>>,
    quad: QuadConfig,
}

/// A one-dimensional diffusion operator. Cheap to clone.
#[derive(Clone)]
pub struct DiffusionModel(Arc<Inner>);

impl std::fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiffusionModel")
            .field("sigma", &self.0.sigma)
            .field("drift", &self.0.drift)
            .field("potential", &self.0.potential)
            .field("domain", &self.0.domain)
            .finish()
    }
}

/// Default probe grid half-width and size.
pub const PROBE_RADIUS: f64 = 12.0;
pub const PROBE_POINTS: usize = 2049;

const TABLE_HALF_WIDTH: f64 = 64.0;
const TABLE_CELLS: usize = 8192;

/// Builds a model on the whole line. Parameters in the expressions are bound
/// from `params`; any that remain are an error.
pub fn build_model(sigma: Expr, spec: DriftSpec, params: &Params) -> Result<DiffusionModel> {
    build_model_on(sigma, spec, params, Domain::Line, Boundary::None)
}

pub fn build_model_on(
    sigma: Expr,
    spec: DriftSpec,
    params: &Params,
    domain: Domain,
    boundary: Boundary,
) -> Result<DiffusionModel> {
    if let Domain::Interval(a, b) = domain {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!("invalid interval [{a}, {b}]")));
        }
    }
    let sigma = bind_all(&sigma, params)?;
    let dsigma = sigma.differentiate();
    let (drift, du, potential) = match spec {
        DriftSpec::Drift(b) => {
            let b = bind_all(&b, params)?;
            let du = (-(b.clone()) / sigma.powi(2)).simplify();
            (b, du, None)
        }
        DriftSpec::TargetPotential(ut) => {
            let ut = bind_all(&ut, params)?;
            let dut = ut.differentiate();
            let b = 2.0 * &sigma * &dsigma - sigma.powi(2) * &dut;
            let du = dut - 2.0 * &dsigma / &sigma;
            let raw = ut - 2.0 * sigma.log();
            let anchor = domain.anchor();
            let shift = raw.evaluate(anchor, &Params::new())?;
            if !shift.is_finite() {
                return Err(Error::Domain { op: "potential", x: anchor });
            }
            (b, du, Some(raw - shift))
        }
    };
    let none = Params::new();
    let c = Coefficients {
        sigma: sigma.compile(&none)?,
        dsigma: dsigma.compile(&none)?,
        d2sigma: dsigma.differentiate().compile(&none)?,
        drift: drift.compile(&none)?,
        ddrift: drift.differentiate().compile(&none)?,
        du: du.compile(&none)?,
        d2u: du.differentiate().compile(&none)?,
        potential: potential.as_ref().map(|p| p.compile(&none)).transpose()?,
    };
    let m = DiffusionModel(Arc::new(Inner {
        sigma,
        drift,
        du,
        potential,
        domain,
        boundary,
        params: params.clone(),
        c,
        table: OnceLock::new(),
        log_z: OnceLock::new(),
        quad: QuadConfig::default(),
    }));
    m.validate()?;
    Ok(m)
}

fn bind_all(e: &Expr, params: &Params) -> Result<Expr> {
    let bound = e.bind(params);
    match bound.params().into_iter().next() {
        Some(p) => Err(Error::UnboundParameter(p)),
        None => Ok(bound),
    }
}

/// Chebyshev-Lobatto points on `[lo, hi]`, ascending.
pub fn chebyshev_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    (0..n)
        .map(|k| {
            let t = std::f64::consts::PI * (n - 1 - k) as f64 / (n - 1) as f64;
            c + r * t.cos()
        })
        .collect()
}

impl DiffusionModel {
    fn validate(&self) -> Result<()> {
        for &x in &self.probe_grid(PROBE_RADIUS, PROBE_POINTS) {
            let s = self.sigma(x);
            if !(s > 0.0) {
                return Err(Error::NonPositiveSigma { x, value: s });
            }
            if !self.du(x).is_finite() {
                continue;
            }
            // U' = -b/σ² holds by construction; target mode stores it in a
            // different but equivalent form, so check it.
            let lhs = self.du(x);
            let rhs = -self.drift(x) / (s * s);
            if (lhs - rhs).abs() > 1e-9 * (1.0 + lhs.abs().max(rhs.abs())) {
                return Err(Error::Precondition(format!(
                    "U' = -b/σ² fails at x = {x}: {lhs} vs {rhs}"
                )));
            }
        }
        Ok(())
    }

    pub fn probe_grid(&self, r: f64, n: usize) -> Vec<f64> {
        let (lo, hi) = self.0.domain.window(r);
        chebyshev_grid(lo, hi, n)
    }

    pub fn sigma_expr(&self) -> &Expr {
        &self.0.sigma
    }

    pub fn drift_expr(&self) -> &Expr {
        &self.0.drift
    }

    /// `U' = -b/σ²`.
    pub fn du_expr(&self) -> &Expr {
        &self.0.du
    }

    /// Symbolic `U`, when the model was built from a target potential.
    pub fn potential_expr(&self) -> Option<&Expr> {
        self.0.potential.as_ref()
    }

    /// `V_σ = σσ'' + bσ'/σ - b'`.
    pub fn v_sigma_expr(&self) -> Expr {
        let s = &self.0.sigma;
        let ds = s.differentiate();
        let d2s = ds.differentiate();
        (s * &d2s + &self.0.drift * &ds / s - self.0.drift.differentiate()).simplify()
    }

    pub fn params(&self) -> &Params {
        &self.0.params
    }

    pub fn domain(&self) -> Domain {
        self.0.domain
    }

    pub fn boundary(&self) -> Boundary {
        self.0.boundary
    }

    pub fn quad_config(&self) -> &QuadConfig {
        &self.0.quad
    }

    /// Same operator with a different quadrature configuration for `log_z`.
    pub fn with_quad(&self, cfg: QuadConfig) -> DiffusionModel {
        let i = &self.0;
        DiffusionModel(Arc::new(Inner {
            sigma: i.sigma.clone(),
            drift: i.drift.clone(),
            du: i.du.clone(),
            potential: i.potential.clone(),
            domain: i.domain,
            boundary: i.boundary,
            params: i.params.clone(),
            c: Coefficients {
                sigma: i.c.sigma.clone(),
                dsigma: i.c.dsigma.clone(),
                d2sigma: i.c.d2sigma.clone(),
                drift: i.c.drift.clone(),
                ddrift: i.c.ddrift.clone(),
                du: i.c.du.clone(),
                d2u: i.c.d2u.clone(),
                potential: i.c.potential.clone(),
            },
            table: OnceLock::new(),
            log_z: OnceLock::new(),
            quad: cfg,
        }))
    }

    /// `σ ≡ 1` as an expression.
    pub fn has_unit_sigma(&self) -> bool {
        self.0.sigma.is_const(1.0)
    }

    #[inline]
    pub fn sigma(&self, x: f64) -> f64 {
        self.0.c.sigma.eval(x)
    }

    #[inline]
    pub fn dsigma(&self, x: f64) -> f64 {
        self.0.c.dsigma.eval(x)
    }

    #[inline]
    pub fn d2sigma(&self, x: f64) -> f64 {
        self.0.c.d2sigma.eval(x)
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        self.0.c.drift.eval(x)
    }

    #[inline]
    pub fn ddrift(&self, x: f64) -> f64 {
        self.0.c.ddrift.eval(x)
    }

    #[inline]
    pub fn du(&self, x: f64) -> f64 {
        self.0.c.du.eval(x)
    }

    #[inline]
    pub fn d2u(&self, x: f64) -> f64 {
        self.0.c.d2u.eval(x)
    }

    /// `U(x)`, symbolic when available, otherwise from a tabulated antiderivative of `U'`.
    pub fn potential(&self, x: f64) -> f64 {
        match &self.0.c.potential {
            Some(u) => u.eval(x),
            None => match self.table() {
                Ok(t) => t.eval(x),
                Err(_) => f64::NAN,
            },
        }
    }

    fn table(&self) -> &Result<Antiderivative> {
        self.0.table.get_or_init(|| {
            let du = self.0.c.du.clone();
            let g: Func = Arc::new(move |x| du.eval(x));
            let (lo, hi) = self.0.domain.window(TABLE_HALF_WIDTH);
            let cells = match self.0.domain {
                Domain::Line => TABLE_CELLS,
                Domain::Interval(..) => 2048,
            };
            Antiderivative::new(g, lo, hi, cells, self.0.domain.anchor())
        })
    }

    /// `log(e^{-U}/σ²)`, the unnormalized log-density of `μ`.
    #[inline]
    pub fn log_density(&self, x: f64) -> f64 {
        -self.potential(x) - 2.0 * self.sigma(x).ln()
    }

    /// `e^{-U}/σ²`, the unnormalized density of `μ`.
    #[inline]
    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `log ∫ e^{-U}/σ²`; an error when `μ` has infinite mass.
    pub fn log_z(&self) -> Result<f64> {
        self.0
            .log_z
            .get_or_init(|| {
                let (a, b) = self.0.domain.bounds();
                let r = integrate(|x| self.density(x), a, b, &self.0.quad)?;
                if !r.converged || !r.value.is_finite() || r.value <= 0.0 {
                    return Err(Error::NonNormalizable(format!(
                        "∫ e^{{-U}}/σ² = {} (error estimate {}, converged {})",
                        r.value, r.err_est, r.converged
                    )));
                }
                Ok(r.value.ln())
            })
            .clone()
    }

    pub fn is_normalizable(&self) -> bool {
        self.log_z().is_ok()
    }

    /// Normalized density of `μ`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok((self.log_density(x) - self.log_z()?).exp())
    }
}

impl Diffusion for DiffusionModel {
    fn sigma(&self, x: f64) -> f64 {
        DiffusionModel::sigma(self, x)
    }
    fn drift(&self, x: f64) -> f64 {
        DiffusionModel::drift(self, x)
    }
    fn potential(&self, x: f64) -> f64 {
        DiffusionModel::potential(self, x)
    }
    fn domain(&self) -> Domain {
        self.0.domain
    }
}
