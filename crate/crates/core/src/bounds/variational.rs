use super::rho::window_inf;
use super::{BoundReport, ErrorBudget, Method, RhoConfig, Side, Target};
use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::model::{DiffusionModel, DualModel, PROBE_POINTS, PROBE_RADIUS};
use crate::optim::{maximize, OptConfig};
use crate::quad::{expectation, QuadConfig};
use serde::Serialize;

/// `λ1 ≥ 1/∫(1/V_σ) dμ`; infeasible unless `V_σ > 1e-12` on the probe grid.
pub fn veysseire_lower(m: &DiffusionModel, cfg: &QuadConfig) -> Result<BoundReport> {
    let vs = m.v_sigma_expr().compile(&Params::new())?;
    let v = |x: f64| {
        let y = vs.eval(x);
        if y.is_nan() {
            let h = 1e-9 * (1.0 + x.abs());
            vs.eval(x - h).min(vs.eval(x + h))
        } else {
            y
        }
    };
    let grid = m.probe_grid(PROBE_RADIUS, PROBE_POINTS);
    let (argmin, min) = grid
        .iter()
        .map(|&x| (x, v(x)))
        .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 || p.1.is_nan() { p } else { acc });
    if !(min > 1e-12) {
        return Ok(BoundReport::infeasible(
            Method::Veysseire,
            Target::Lambda1,
            Side::Lower,
            format!("V_σ = {min:.3e} at x = {argmin:.3e} is not positive"),
        ));
    }
    let r = match expectation(m, |x| 1.0 / vs.eval(x), cfg) {
        Ok(r) if r.value.is_finite() && r.value > 0.0 => r,
        Ok(r) => {
            return Ok(BoundReport::infeasible(
                Method::Veysseire,
                Target::Lambda1,
                Side::Lower,
                format!("∫(1/V_σ)dμ = {}", r.value),
            ))
        }
        Err(Error::NotConverged { value, .. }) => {
            return Ok(BoundReport::infeasible(
                Method::Veysseire,
                Target::Lambda1,
                Side::Lower,
                format!("1/V_σ is not μ-integrable (quadrature stalled at {value})"),
            ))
        }
        Err(e) => return Err(e),
    };
    let value = 1.0 / r.value;
    let mut rep = BoundReport::new(Method::Veysseire, Target::Lambda1, Side::Lower, value);
    rep.error_budget = ErrorBudget {
        quad_err: value * value * r.err,
        ..ErrorBudget::default()
    };
    rep.params.insert("integral".into(), r.value);
    rep.params.insert("min_v_sigma".into(), min);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrascampLieb {
    /// `∫ σ² f'² / V_a dμ`.
    pub bound: f64,
    pub variance: f64,
    /// `bound - variance`.
    pub slack: f64,
    pub err: f64,
}

/// `Var_μ(f) ≤ ∫ σ² f'² / V_a dμ`; requires `inf V_a > 0` on `[-R, R]`, the
/// condition on each compact Neumann truncation.
pub fn brascamp_lieb_var_bound(
    m: &DiffusionModel,
    d: &DualModel,
    f: &Expr,
    cfg: &QuadConfig,
    rho: &RhoConfig,
) -> Result<BrascampLieb> {
    let inf = window_inf(d, rho)?;
    if !(inf > 0.0) {
        return Err(Error::Precondition(format!("inf V_a = {inf:.3e} on [-{r}, {r}] is not positive", r = rho.radius)));
    }
    let fc = f.bind(m.params()).compile(&Params::new())?;
    let df = f.bind(m.params()).differentiate().compile(&Params::new())?;
    let bound = expectation(
        m,
        |x| {
            let g = df.eval(x);
            if g == 0.0 {
                0.0
            } else {
                let s = m.sigma(x);
                s * s * g * g / d.va(x)
            }
        },
        cfg,
    )?;
    let mean = expectation(m, |x| fc.eval(x), cfg)?;
    let var = expectation(m, |x| (fc.eval(x) - mean.value).powi(2), cfg)?;
    Ok(BrascampLieb {
        bound: bound.value,
        variance: var.value,
        slack: bound.value - var.value,
        err: bound.err + var.err,
    })
}

/// `𝓔(f, f)/Var_μ(f)` with its propagated quadrature error.
pub fn rayleigh_quotient(m: &DiffusionModel, f: &Expr, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let f = f.bind(m.params());
    let fc = f.compile(&Params::new())?;
    let df = f.differentiate().compile(&Params::new())?;
    let mean = expectation(m, |x| fc.eval(x), cfg)?;
    let var = expectation(m, |x| (fc.eval(x) - mean.value).powi(2), cfg)?;
    if !(var.value > 1e-14) {
        return Err(Error::Degenerate(format!("Var_μ(f) = {}", var.value)));
    }
    let energy = expectation(
        m,
        |x| {
            let g = df.eval(x);
            if g == 0.0 {
                0.0
            } else {
                let s = m.sigma(x);
                s * s * g * g
            }
        },
        cfg,
    )?;
    let q = energy.value / var.value;
    Ok((q, q * (energy.err / energy.value.abs().max(1e-300) + var.err / var.value)))
}

/// `λ1 ≤ min_θ 𝓔(f_θ, f_θ)/Var_μ(f_θ)` over a family with free parameters
/// `(name, lo, hi)`.
pub fn rayleigh_upper(
    m: &DiffusionModel,
    family: &Expr,
    free: &[(String, f64, f64)],
    cfg: &QuadConfig,
    opt: &OptConfig,
) -> Result<BoundReport> {
    let assign = |theta: &[f64]| -> Params { free.iter().zip(theta).map(|((k, _, _), v)| (k.clone(), *v)).collect() };
    let boxes: Vec<(f64, f64)> = free.iter().map(|(_, lo, hi)| (*lo, *hi)).collect();
    let objective = |theta: &[f64]| -> f64 {
        rayleigh_quotient(m, &family.bind(&assign(theta)), cfg).map_or(f64::NEG_INFINITY, |(q, _)| -q)
    };
    let Some(best) = maximize(objective, &boxes, opt) else {
        return Ok(BoundReport::infeasible(
            Method::Rayleigh,
            Target::Lambda1,
            Side::Upper,
            "every family member is degenerate or not square-integrable",
        ));
    };
    let params = assign(&best.argmax);
    let (q, err) = rayleigh_quotient(m, &family.bind(&params), cfg)?;
    let mut rep = BoundReport::new(Method::Rayleigh, Target::Lambda1, Side::Upper, q).with_params(&params);
    rep.error_budget = ErrorBudget {
        quad_err: err,
        opt_gap: best.opt_gap(),
        truncation: 0.0,
    };
    rep.notes.push(format!("test function {family}"));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{cauchy_integrated_lower, power_integrated_lower, power_rayleigh};
    use crate::expr::parse;
    use crate::model::{build_model, realize_weight, DriftSpec, WeightForm, WeightSpec};

    fn e(s: &str) -> Expr {
        parse(s, &["eps"]).unwrap()
    }

    fn power(alpha: f64) -> DiffusionModel {
        build_model(e("1"), DriftSpec::TargetPotential(e(&format!("abs(x)^{alpha}/{alpha}"))), &Params::new()).unwrap()
    }

    #[test]
    fn integrated_bound_for_power_potentials() {
        let v = veysseire_lower(&power(1.5), &QuadConfig::default()).unwrap().value.unwrap();
        let want = power_integrated_lower(1.5);
        assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
    }

    #[test]
    fn integrated_bound_for_ou_is_one() {
        let v = veysseire_lower(&power(2.0), &QuadConfig::default()).unwrap().value.unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrated_bound_for_cauchy() {
        let m = build_model(parse("sqrt(1+x^2)", &[]).unwrap(), DriftSpec::TargetPotential(e("2.5*log(1+x^2)")), &Params::new()).unwrap();
        let v = veysseire_lower(&m, &QuadConfig::default()).unwrap().value.unwrap();
        assert!((v - cauchy_integrated_lower(2.5)).abs() < 1e-9);
    }

    #[test]
    fn integrated_bound_needs_positive_v_sigma() {
        let r = veysseire_lower(&power(4.0), &QuadConfig::default()).unwrap();
        assert!(!r.is_feasible());
    }

    #[test]
    fn brascamp_lieb_cases() {
        let ou = power(2.0);
        let d = realize_weight(&ou, &WeightSpec::new(WeightForm::Direct(e("1"))), &Params::new()).unwrap();
        let b = brascamp_lieb_var_bound(&ou, &d, &e("x"), &QuadConfig::default(), &RhoConfig::default()).unwrap();
        assert!((b.bound - 1.0).abs() < 1e-10 && b.slack.abs() < 1e-9);

        let m = build_model(parse("sqrt(1+x^2)", &[]).unwrap(), DriftSpec::TargetPotential(e("2.5*log(1+x^2)")), &Params::new()).unwrap();
        let d = realize_weight(&m, &WeightSpec::new(WeightForm::Direct(m.sigma_expr().clone())), &Params::new()).unwrap();
        // σf' = 1, so the bound is the integrated-criterion integral 3/8.
        let b = brascamp_lieb_var_bound(&m, &d, &e("asinh(x)"), &QuadConfig::default(), &RhoConfig::default()).unwrap();
        assert!((b.bound - 0.375).abs() < 1e-9, "{b:?}");
        let v = veysseire_lower(&m, &QuadConfig::default()).unwrap();
        assert!((b.bound * v.value.unwrap() - 1.0).abs() < 1e-9);
        assert!(b.slack >= 0.0);

        let bad = realize_weight(&ou, &WeightSpec::new(WeightForm::ExpW(e("-x^2/2"))), &Params::new()).unwrap();
        let r = brascamp_lieb_var_bound(&ou, &bad, &e("x"), &QuadConfig::default(), &RhoConfig::default());
        assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
    }

    #[test]
    fn rayleigh_matches_closed_form() {
        let m = power(4.0);
        for eps in [0.7, 0.854, 1.3] {
            let (q, err) = rayleigh_quotient(&m, &e(&format!("sign(x)*abs(x)^{eps}")), &QuadConfig::default()).unwrap();
            let want = power_rayleigh(4.0, eps);
            assert!((q - want).abs() < 1e-7 * want && err < 1e-6, "{eps}: {q} vs {want}");
        }
    }

    #[test]
    fn rayleigh_upper_ou_is_tight() {
        let r = rayleigh_upper(&power(2.0), &e("x"), &[], &QuadConfig::default(), &OptConfig::default()).unwrap();
        assert!((r.value.unwrap() - 1.0).abs() < 1e-10);
    }
}
