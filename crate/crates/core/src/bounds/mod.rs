//! Lower and upper bounds on the spectral gap `λ1` and the log-Sobolev
//! constant `C_LS`.

mod lsi;
mod muckenhoupt;
mod plan;
mod report;
mod rho;
mod variational;

pub use lsi::{lsi_lower, monotone_class, MonotoneClass};
pub use muckenhoupt::{muckenhoupt, MuckenhouptConfig, MuckenhouptResult};
pub use plan::{run_plan, BoundsPlan, MethodError, PlanSettings, RayleighFamily};
pub use report::{assemble_report, Bracket, BoundsDocument, OracleValue, Violation};
pub use rho::{chen_wang_lower, rho_of_weight, Rho, RhoConfig};
pub use variational::{brascamp_lieb_var_bound, rayleigh_quotient, rayleigh_upper, veysseire_lower, BrascampLieb};

use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ChenWang,
    Muckenhoupt,
    Veysseire,
    Rayleigh,
    LogSobolev,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ChenWang => "chen-wang",
            Method::Muckenhoupt => "muckenhoupt",
            Method::Veysseire => "veysseire",
            Method::Rayleigh => "rayleigh",
            Method::LogSobolev => "log-sobolev",
        }
    }

    /// The theorem a report of this method instantiates.
    pub fn anchor(self) -> &'static str {
        match self {
            Method::ChenWang => "chen-wang: λ1 ≥ sup_a inf V_a",
            Method::Muckenhoupt => "muckenhoupt: 1/(4B_m) ≤ λ1 ≤ 2/B_m",
            Method::Veysseire => "veysseire: λ1 ≥ 1/∫(1/V_σ)dμ",
            Method::Rayleigh => "rayleigh: λ1 ≤ 𝓔(f,f)/Var(f)",
            Method::LogSobolev => "monotone-weight log-sobolev: C_LS ≥ 2 min over classes of sup ρ_a",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Lambda1,
    Cls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub quad_err: f64,
    /// Improvement of the polish phase over the parameter scan.
    pub opt_gap: f64,
    pub truncation: f64,
}

impl ErrorBudget {
    /// Absolute uncertainty of the value: quadrature plus truncation.
    pub fn total(&self) -> f64 {
        self.quad_err.abs() + self.truncation.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub method: Method,
    pub anchor: &'static str,
    pub target: Target,
    pub side: Side,
    /// `None` marks an infeasible method; the reason is the last note.
    pub value: Option<f64>,
    pub params: BTreeMap<String, f64>,
    pub error_budget: ErrorBudget,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(method: Method, target: Target, side: Side, value: f64) -> BoundReport {
        BoundReport {
            method,
            anchor: method.anchor(),
            target,
            side,
            value: Some(value),
            params: BTreeMap::new(),
            error_budget: ErrorBudget::default(),
            notes: Vec::new(),
        }
    }

    pub fn infeasible(method: Method, target: Target, side: Side, reason: impl Into<String>) -> BoundReport {
        BoundReport {
            value: None,
            notes: vec![reason.into()],
            ..BoundReport::new(method, target, side, 0.0)
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.value.is_some()
    }

    pub fn with_params<'a>(mut self, params: impl IntoIterator<Item = (&'a String, &'a f64)>) -> BoundReport {
        self.params.extend(params.into_iter().map(|(k, v)| (k.clone(), *v)));
        self
    }
}
