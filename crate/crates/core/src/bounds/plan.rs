use super::{chen_wang_lower, lsi_lower, muckenhoupt, rayleigh_upper, veysseire_lower};
use super::{BoundReport, Method, MuckenhouptConfig, RhoConfig, Side, Target};
use crate::error::Error;
use crate::expr::Expr;
use crate::model::{DiffusionModel, WeightSpec};
use crate::optim::OptConfig;
use crate::quad::QuadConfig;
use serde::{Deserialize, Serialize};

/// A test-function family for the Rayleigh upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighFamily {
    pub family: Expr,
    /// `(name, lo, hi)`.
    pub free: Vec<(String, f64, f64)>,
}

/// Which methods to run, and with which families.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundsPlan {
    pub methods: Vec<Method>,
    pub chen_wang: Vec<WeightSpec>,
    pub rayleigh: Vec<RayleighFamily>,
    /// Family searched for weights with `σ/a` increasing.
    pub lsi_increasing: Option<WeightSpec>,
    pub lsi_decreasing: Option<WeightSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSettings {
    pub quad: QuadConfig,
    pub opt: OptConfig,
    pub rho: RhoConfig,
    pub muckenhoupt: MuckenhouptConfig,
}

/// A bound method failed outright (as opposed to being infeasible).
#[derive(Debug, thiserror::Error)]
#[error("{method}: {source}")]
pub struct MethodError {
    pub method: &'static str,
    #[source]
    pub source: Error,
}

fn unconfigured(method: Method, target: Target, side: Side, what: &str) -> BoundReport {
    BoundReport::infeasible(method, target, side, format!("no {what} configured"))
}

/// Runs every method of the plan in order. Preconditions that a model does
/// not meet become infeasible reports; other failures abort with the method
/// name attached.
pub fn run_plan(m: &DiffusionModel, plan: &BoundsPlan, s: &PlanSettings) -> std::result::Result<Vec<BoundReport>, MethodError> {
    let mut out = Vec::new();
    for &method in &plan.methods {
        let fail = |source: Error| MethodError {
            method: method.name(),
            source,
        };
        match method {
            Method::ChenWang => {
                if plan.chen_wang.is_empty() {
                    out.push(unconfigured(method, Target::Lambda1, Side::Lower, "weight family"));
                }
                for w in &plan.chen_wang {
                    out.push(chen_wang_lower(m, w, &s.opt, &s.rho).map_err(fail)?);
                }
            }
            Method::Muckenhoupt => match muckenhoupt(m, &s.muckenhoupt, &s.quad) {
                Ok(r) => out.extend(r.reports()),
                Err(Error::Precondition(why)) => {
                    out.push(BoundReport::infeasible(method, Target::Lambda1, Side::Lower, why.clone()));
                    out.push(BoundReport::infeasible(method, Target::Lambda1, Side::Upper, why));
                }
                Err(e) => return Err(fail(e)),
            },
            Method::Veysseire => out.push(veysseire_lower(m, &s.quad).map_err(fail)?),
            Method::Rayleigh => {
                if plan.rayleigh.is_empty() {
                    out.push(unconfigured(method, Target::Lambda1, Side::Upper, "test-function family"));
                }
                for f in &plan.rayleigh {
                    out.push(rayleigh_upper(m, &f.family, &f.free, &s.quad, &s.opt).map_err(fail)?);
                }
            }
            Method::LogSobolev => {
                if plan.lsi_increasing.is_none() && plan.lsi_decreasing.is_none() {
                    out.push(unconfigured(method, Target::Cls, Side::Lower, "monotone weight family"));
                } else {
                    out.push(
                        lsi_lower(m, plan.lsi_increasing.as_ref(), plan.lsi_decreasing.as_ref(), &s.opt, &s.rho).map_err(fail)?,
                    );
                }
            }
        }
    }
    Ok(out)
}
