use super::{Diffusion, DiffusionModel, Domain, PROBE_POINTS, PROBE_RADIUS};
use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr, Params};
use crate::interp::{Antiderivative, Func, Pchip};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

/// How a weight `a > 0` is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightForm {
    /// `a` itself.
    Direct(Expr),
    /// `a = e^W`.
    ExpW(Expr),
    /// `W' = Z - U'/2`; requires `σ ≡ 1`.
    ZForm(Expr),
    /// `W' = e^A`, so `a` is increasing.
    AForm(Expr),
}

impl WeightForm {
    pub fn expr(&self) -> &Expr {
        match self {
            WeightForm::Direct(e) | WeightForm::ExpW(e) | WeightForm::ZForm(e) | WeightForm::AForm(e) => e,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WeightForm::Direct(_) => "direct",
            WeightForm::ExpW(_) => "exp-w",
            WeightForm::ZForm(_) => "z-form",
            WeightForm::AForm(_) => "a-form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamRange {
    Fixed(f64),
    Range(f64, f64),
}

/// A weight family with its free parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub form: WeightForm,
    pub params: BTreeMap<String, ParamRange>,
}

impl WeightSpec {
    pub fn new(form: WeightForm) -> WeightSpec {
        WeightSpec {
            form,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: &str, range: ParamRange) -> WeightSpec {
        self.params.insert(name.to_string(), range);
        self
    }

    /// Names and boxes of the free parameters, in name order.
    pub fn free(&self) -> Vec<(String, f64, f64)> {
        self.params
            .iter()
            .filter_map(|(k, r)| match *r {
                ParamRange::Range(lo, hi) => Some((k.clone(), lo, hi)),
                ParamRange::Fixed(_) => None,
            })
            .collect()
    }

    /// Fixed parameters merged with values for the free ones (in [`WeightSpec::free`] order).
    pub fn assignment(&self, free: &[f64]) -> Params {
        let mut p = Params::new();
        let mut it = free.iter();
        for (k, r) in &self.params {
            let v = match *r {
                ParamRange::Fixed(v) => v,
                ParamRange::Range(..) => *it.next().expect("too few free values"),
            };
            p.insert(k.clone(), v);
        }
        p
    }
}

/// `V_a = σ²a''/a + (b + 2σσ')a'/a - 2σ²(a'/a)² - b'`.
pub fn feynman_kac_potential(m: &DiffusionModel, a: &Expr) -> Expr {
    let s = m.sigma_expr();
    let b = m.drift_expr();
    let da = a.differentiate();
    let d2a = da.differentiate();
    let ell = &da / a;
    let s2 = s.powi(2);
    (&s2 * &d2a / a + (b + 2.0 * s * s.differentiate()) * &ell - 2.0 * &s2 * ell.powi(2) - b.differentiate())
        .simplify()
}

/// `V_a` from the log-derivative `ℓ = a'/a`: `σ²ℓ' - σ²ℓ² + (b + 2σσ')ℓ - b'`.
fn potential_from_log_derivative(m: &DiffusionModel, ell: &Expr) -> Expr {
    let s = m.sigma_expr();
    let b = m.drift_expr();
    let s2 = s.powi(2);
    (&s2 * ell.differentiate() - &s2 * ell.powi(2) + (b + 2.0 * s * s.differentiate()) * ell - b.differentiate())
        .simplify()
}

struct Symbolic {
    ell: Compiled,
    va: Compiled,
    drift_a: Compiled,
    log_a: Option<Compiled>,
    table: OnceLock<Result<Antiderivative>>,
}

struct Tabulated {
    log_a: Pchip,
    ell: Pchip,
    va: Pchip,
}

enum Realization {
    Symbolic(Symbolic),
    Tabulated(Tabulated),
}

/// Symbolic pieces of a realized weight, parameters bound.
#[derive(Debug, Clone)]
pub struct DualExprs {
    pub log_derivative: Expr,
    pub va: Expr,
    pub drift_a: Expr,
    pub log_a: Option<Expr>,
}

/// The dual operator `L_a` with drift `b_a = 2σσ' + b - 2σ²a'/a`, measure
/// `μ_a = (σ/a)² μ` and Feynman-Kac potential `V_a`.
#[derive(Clone)]
pub struct DualModel {
    base: DiffusionModel,
    kind: &'static str,
    params: Params,
    exprs: Option<DualExprs>,
    eval: Arc<Realization>,
}

impl std::fmt::Debug for DualModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DualModel")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("exprs", &self.exprs)
            .finish()
    }
}

/// Realizes `w` at the parameter assignment `params`.
///
/// Weights given through a log-derivative are checked for a finite
/// log-derivative on the probe grid; a direct `a` must lie in `[1e-300, 1e300]`.
pub fn realize_weight(m: &DiffusionModel, w: &WeightSpec, params: &Params) -> Result<DualModel> {
    let mut all = Params::new();
    for (k, r) in &w.params {
        if let ParamRange::Fixed(v) = r {
            all.insert(k.clone(), *v);
        }
    }
    all.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
    let form = &w.form;
    let e = form.expr().bind(&all).simplify();
    if let Some(p) = e.params().into_iter().next() {
        return Err(Error::UnboundParameter(p));
    }
    let (ell, va, log_a) = match form {
        WeightForm::Direct(_) => {
            let ell = (e.differentiate() / &e).simplify();
            (ell, feynman_kac_potential(m, &e), Some(e.log()))
        }
        WeightForm::ExpW(_) => {
            let ell = e.differentiate();
            let va = potential_from_log_derivative(m, &ell);
            (ell, va, Some(e.clone()))
        }
        WeightForm::ZForm(_) => {
            if !m.has_unit_sigma() {
                return Err(Error::InadmissibleWeight(
                    "the Z-substitution requires a unit diffusion coefficient".into(),
                ));
            }
            let du = m.du_expr();
            let d2u = du.differentiate();
            let ell = (&e - du / 2.0).simplify();
            let va = (e.differentiate() - e.powi(2) + d2u / 2.0 + du.powi(2) / 4.0).simplify();
            (ell, va, None)
        }
        WeightForm::AForm(_) => {
            let ell = e.exp();
            let va = potential_from_log_derivative(m, &ell);
            (ell, va, None)
        }
    };
    let s = m.sigma_expr();
    let drift_a = (2.0 * s * s.differentiate() + m.drift_expr() - 2.0 * s.powi(2) * &ell).simplify();
    let none = Params::new();
    let sym = Symbolic {
        ell: ell.compile(&none)?,
        va: va.compile(&none)?,
        drift_a: drift_a.compile(&none)?,
        log_a: log_a.as_ref().map(|l| l.compile(&none)).transpose()?,
        table: OnceLock::new(),
    };
    let direct = match form {
        WeightForm::Direct(_) => Some(e.compile(&none)?),
        _ => None,
    };
    for &x in &m.probe_grid(PROBE_RADIUS, PROBE_POINTS) {
        if !sym.ell.eval(x).is_finite() && !near_kink(&sym.ell, x) {
            return Err(Error::InadmissibleWeight(format!("a'/a is not finite at x = {x}")));
        }
        if let Some(c) = &direct {
            let a = c.eval(x);
            if !(1e-300..=1e300).contains(&a) {
                return Err(Error::InadmissibleWeight(format!("a({x}) = {a} outside [1e-300, 1e300]")));
            }
        }
    }
    Ok(DualModel {
        base: m.clone(),
        kind: form.kind(),
        params: all,
        exprs: Some(DualExprs {
            log_derivative: ell,
            va,
            drift_a,
            log_a,
        }),
        eval: Arc::new(Realization::Symbolic(sym)),
    })
}

/// A removable non-finite value at a kink such as `sign(x)·|x|^{-1/2}` at 0.
fn near_kink(c: &Compiled, x: f64) -> bool {
    let h = 1e-9 * (1.0 + x.abs());
    c.eval(x - h).is_finite() && c.eval(x + h).is_finite()
}

impl DualModel {
    /// Dual model from tabulated `log a`, `a'/a` and `V_a` on ascending knots.
    pub fn tabulated(base: &DiffusionModel, xs: Vec<f64>, log_a: Vec<f64>, ell: Vec<f64>, va: Vec<f64>) -> DualModel {
        DualModel {
            base: base.clone(),
            kind: "tabulated",
            params: Params::new(),
            exprs: None,
            eval: Arc::new(Realization::Tabulated(Tabulated {
                log_a: Pchip::new(xs.clone(), log_a),
                ell: Pchip::new(xs.clone(), ell),
                va: Pchip::new(xs, va),
            })),
        }
    }

    pub fn base(&self) -> &DiffusionModel {
        &self.base
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn exprs(&self) -> Option<&DualExprs> {
        self.exprs.as_ref()
    }

    /// Knot range of a tabulated weight.
    pub fn support(&self) -> (f64, f64) {
        match &*self.eval {
            Realization::Symbolic(_) => self.base.domain().bounds(),
            Realization::Tabulated(t) => {
                let k = t.va.knots();
                (k[0], k[k.len() - 1])
            }
        }
    }

    #[inline]
    pub fn va(&self, x: f64) -> f64 {
        match &*self.eval {
            Realization::Symbolic(s) => s.va.eval(x),
            Realization::Tabulated(t) => t.va.eval(x),
        }
    }

    /// `a'/a`.
    #[inline]
    pub fn log_derivative(&self, x: f64) -> f64 {
        match &*self.eval {
            Realization::Symbolic(s) => s.ell.eval(x),
            Realization::Tabulated(t) => t.ell.eval(x),
        }
    }

    #[inline]
    pub fn drift_a(&self, x: f64) -> f64 {
        match &*self.eval {
            Realization::Symbolic(s) => s.drift_a.eval(x),
            Realization::Tabulated(t) => {
                let s = self.base.sigma(x);
                2.0 * s * self.base.dsigma(x) + self.base.drift(x) - 2.0 * s * s * t.ell.eval(x)
            }
        }
    }

    /// `log a`, normalized by `log a(0) = 0` when `a` is only known through `a'/a`.
    pub fn log_a(&self, x: f64) -> f64 {
        match &*self.eval {
            Realization::Symbolic(s) => match &s.log_a {
                Some(l) => l.eval(x),
                None => {
                    let t = s.table.get_or_init(|| {
                        let ell = s.ell.clone();
                        let g: Func = Arc::new(move |x| ell.eval(x));
                        let (lo, hi) = self.base.domain().window(super::TABLE_HALF_WIDTH);
                        Antiderivative::new(g, lo, hi, super::TABLE_CELLS, self.base.domain().anchor())
                    });
                    match t {
                        Ok(t) => t.eval(x),
                        Err(_) => f64::NAN,
                    }
                }
            },
            Realization::Tabulated(t) => t.log_a.eval(x),
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        self.log_a(x).exp()
    }

    /// `log` of the Lebesgue density of `μ_a = (σ/a)² μ`, unnormalized: `-U - 2 log a`.
    pub fn mu_a_log_density(&self, x: f64) -> f64 {
        -self.base.potential(x) - 2.0 * self.log_a(x)
    }

    /// `(σ/a)'/(σ/a) = σ'/σ - a'/a`; its sign is the monotonicity of `σ/a`.
    pub fn sigma_over_a_log_derivative(&self, x: f64) -> f64 {
        self.base.dsigma(x) / self.base.sigma(x) - self.log_derivative(x)
    }
}

impl Diffusion for DualModel {
    fn sigma(&self, x: f64) -> f64 {
        self.base.sigma(x)
    }
    fn drift(&self, x: f64) -> f64 {
        self.drift_a(x)
    }
    fn potential(&self, x: f64) -> f64 {
        // e^{-U_a}/σ² = e^{-U}/a².
        self.base.potential(x) + 2.0 * self.log_a(x) - 2.0 * self.base.sigma(x).ln()
    }
    fn domain(&self) -> Domain {
        self.base.domain()
    }
}
