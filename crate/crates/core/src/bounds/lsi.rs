use super::{rho_of_weight, BoundReport, ErrorBudget, Method, RhoConfig, Side, Target};
use crate::error::{Error, Result};
use crate::model::{chebyshev_grid, realize_weight, DiffusionModel, DualModel, WeightSpec, PROBE_POINTS};
use crate::optim::{maximize, OptConfig};
use crate::quad::{median, QuadConfig};
use serde::Serialize;

/// Monotonicity of `σ/a` on a probe grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotoneClass {
    /// `σ/a` constant: member of both classes.
    Constant,
    Increasing,
    Decreasing,
    Neither,
}

impl MonotoneClass {
    fn admits(self, want: MonotoneClass) -> bool {
        self == MonotoneClass::Constant || self == want
    }
}

fn sigma_over_a_slope(d: &DualModel, x: f64) -> f64 {
    let g = d.sigma_over_a_log_derivative(x);
    if g.is_nan() {
        let h = 1e-9 * (1.0 + x.abs());
        let (l, r) = (d.sigma_over_a_log_derivative(x - h), d.sigma_over_a_log_derivative(x + h));
        if l.signum() == r.signum() {
            return 0.5 * (l + r);
        }
    }
    g
}

/// Class of `σ/a` from the sign of `(σ/a)'/(σ/a)` on `[-r, r]`.
pub fn monotone_class(d: &DualModel, r: f64, grid: usize) -> MonotoneClass {
    let (lo, hi) = d.base().domain().window(r);
    let g: Vec<f64> = chebyshev_grid(lo, hi, grid).iter().map(|&x| sigma_over_a_slope(d, x)).collect();
    if g.iter().any(|v| v.is_nan()) {
        return MonotoneClass::Neither;
    }
    let tol = 1e-12;
    let up = g.iter().all(|&v| v >= -tol);
    let down = g.iter().all(|&v| v <= tol);
    match (up, down) {
        (true, true) => MonotoneClass::Constant,
        (true, false) => MonotoneClass::Increasing,
        (false, true) => MonotoneClass::Decreasing,
        (false, false) => MonotoneClass::Neither,
    }
}

/// Even density about the median: `|h(m+x)/h(m-x) - 1| < 1e-9` on the probe grid.
fn is_symmetric(m: &DiffusionModel, r: f64) -> Result<(bool, f64)> {
    let med = median(m, &QuadConfig::default())?;
    let check = |c: f64| {
        let top = m.log_density(c);
        (0..PROBE_POINTS).all(|k| {
            let x = r * k as f64 / (PROBE_POINTS - 1) as f64;
            let (a, b) = (m.log_density(c + x), m.log_density(c - x));
            // Points where the density has underflowed carry no information.
            a < top - 700.0 || ((a - b).exp() - 1.0).abs() < 1e-9
        })
    };
    // A median of a symmetric law is located to ~1e-12; snap before testing.
    let snapped = (med * 1e6).round() / 1e6;
    Ok(if check(med) {
        (true, med)
    } else if (snapped - med).abs() < 1e-8 && check(snapped) {
        (true, snapped)
    } else {
        (false, med)
    })
}

struct ClassBest {
    rho: f64,
    class: MonotoneClass,
    dual: DualModel,
    opt_gap: f64,
}

fn best_in_class(
    m: &DiffusionModel,
    w: &WeightSpec,
    want: MonotoneClass,
    opt: &OptConfig,
    rho: &RhoConfig,
) -> Result<Option<ClassBest>> {
    let boxes: Vec<(f64, f64)> = w.free().iter().map(|(_, lo, hi)| (*lo, *hi)).collect();
    let objective = |theta: &[f64]| -> f64 {
        let Ok(d) = realize_weight(m, w, &w.assignment(theta)) else {
            return f64::NEG_INFINITY;
        };
        if !monotone_class(&d, rho.radius, PROBE_POINTS).admits(want) {
            return f64::NEG_INFINITY;
        }
        rho_of_weight(&d, rho).map_or(f64::NEG_INFINITY, |r| r.value)
    };
    let Some(best) = maximize(objective, &boxes, opt) else {
        return Ok(None);
    };
    let dual = realize_weight(m, w, &w.assignment(&best.argmax))?;
    Ok(Some(ClassBest {
        rho: best.value,
        class: monotone_class(&dual, rho.radius, PROBE_POINTS),
        dual,
        opt_gap: best.opt_gap(),
    }))
}

/// `C_LS ≥ 2 min(sup ρ_a over σ/a increasing, sup ρ_a over σ/a decreasing)`;
/// for an even density one class suffices.
pub fn lsi_lower(
    m: &DiffusionModel,
    increasing: Option<&WeightSpec>,
    decreasing: Option<&WeightSpec>,
    opt: &OptConfig,
    rho: &RhoConfig,
) -> Result<BoundReport> {
    let (symmetric, center) = is_symmetric(m, rho.radius)?;
    let mut found = Vec::new();
    for (w, want) in [(increasing, MonotoneClass::Increasing), (decreasing, MonotoneClass::Decreasing)] {
        if let Some(w) = w {
            found.push((want, best_in_class(m, w, want, opt, rho)?));
        }
    }
    if found.is_empty() {
        return Err(Error::Precondition("no weight family supplied".into()));
    }
    let feasible: Vec<&(MonotoneClass, Option<ClassBest>)> = found.iter().filter(|f| f.1.is_some()).collect();
    let covers = |c: MonotoneClass| feasible.iter().any(|f| f.0 == c || f.1.as_ref().is_some_and(|b| b.class == MonotoneClass::Constant));
    let both = covers(MonotoneClass::Increasing) && covers(MonotoneClass::Decreasing);
    if feasible.is_empty() || (!symmetric && !both) {
        return Ok(BoundReport::infeasible(
            Method::LogSobolev,
            Target::Cls,
            Side::Lower,
            if feasible.is_empty() {
                "no family member has σ/a monotone in its class".to_string()
            } else {
                "the density is not even, and only one monotone class has an admissible weight".to_string()
            },
        ));
    }
    let pick = |a: &ClassBest, b: &ClassBest| if symmetric { a.rho >= b.rho } else { a.rho <= b.rho };
    let chosen = feasible
        .iter()
        .map(|f| (f.0, f.1.as_ref().unwrap()))
        .reduce(|a, b| if pick(a.1, b.1) { a } else { b })
        .unwrap();
    let best = chosen.1;
    let rho_value = best.rho;
    if !(rho_value > 0.0) {
        return Ok(BoundReport::infeasible(
            Method::LogSobolev,
            Target::Cls,
            Side::Lower,
            format!("best ρ_a = {rho_value:.3e} is not positive"),
        ));
    }
    let mut rep = BoundReport::new(Method::LogSobolev, Target::Cls, Side::Lower, 2.0 * rho_value).with_params(best.dual.params());
    rep.params.insert("rho".into(), rho_value);
    for f in &feasible {
        let b = f.1.as_ref().unwrap();
        let key = match f.0 {
            MonotoneClass::Increasing => "rho_sigma_over_a_increasing",
            _ => "rho_sigma_over_a_decreasing",
        };
        rep.params.insert(key.into(), b.rho);
    }
    rep.error_budget = ErrorBudget {
        opt_gap: best.opt_gap,
        ..ErrorBudget::default()
    };
    rep.notes.push(format!(
        "σ/a {} on [-{r}, {r}]",
        match best.class {
            MonotoneClass::Constant => "constant",
            MonotoneClass::Increasing => "increasing",
            _ => "decreasing",
        },
        r = rho.radius
    ));
    if symmetric {
        rep.notes.push(format!("density even about {center}; one monotone class suffices"));
    }
    rep.notes.push(ratio_note(&best.dual, rho.radius));
    Ok(rep)
}

/// Range of `a/σ` on the probe grid, with `a` normalized at the anchor.
fn ratio_note(d: &DualModel, r: f64) -> String {
    let (lo, hi) = d.base().domain().window(r);
    let (mn, mx) = chebyshev_grid(lo, hi, PROBE_POINTS)
        .iter()
        .map(|&x| d.log_a(x) - d.base().sigma(x).ln())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mn, mx) = (mn.exp(), mx.exp());
    if mn >= 1e-6 && mx <= 1e6 {
        format!("a ≍ σ verified on grid: a/σ ∈ [{mn:.6e}, {mx:.6e}]")
    } else {
        format!("a ≍ σ not verified on grid: a/σ ∈ [{mn:.6e}, {mx:.6e}]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr, Params};
    use crate::model::{build_model, DriftSpec, ParamRange, WeightForm};

    fn e(s: &str) -> Expr {
        parse(s, &["eps", "gamma"]).unwrap()
    }

    fn target(u: &str) -> DiffusionModel {
        build_model(e("1"), DriftSpec::TargetPotential(e(u)), &Params::new()).unwrap()
    }

    fn aform(eps: f64, gamma: f64) -> WeightSpec {
        WeightSpec::new(WeightForm::AForm(e("-(eps*x - gamma)^2")))
            .with_param("eps", ParamRange::Fixed(eps))
            .with_param("gamma", ParamRange::Fixed(gamma))
    }

    #[test]
    fn ou_constant_weight_gives_two() {
        let m = target("x^2/2");
        let one = WeightSpec::new(WeightForm::Direct(e("1")));
        let r = lsi_lower(&m, Some(&one), None, &OptConfig::default(), &RhoConfig::default()).unwrap();
        assert_eq!(r.value, Some(2.0));
        assert!(r.notes.iter().any(|n| n.contains("constant")));
    }

    #[test]
    fn a_form_makes_sigma_over_a_decreasing() {
        let m = target("x^4/4");
        let d = realize_weight(&m, &aform(1.0, 1.0), &Params::new()).unwrap();
        assert_eq!(monotone_class(&d, 12.0, 257), MonotoneClass::Decreasing);
        let r = lsi_lower(&m, None, Some(&aform(1.0, 1.0)), &OptConfig::default(), &RhoConfig::default()).unwrap();
        assert!(r.value.unwrap() > 1.0, "{r:?}");
        assert!(r.notes.iter().any(|n| n.contains("verified on grid")), "{r:?}");
        // Wrong class: no admissible member.
        let r = lsi_lower(&m, Some(&aform(1.0, 1.0)), None, &OptConfig::default(), &RhoConfig::default()).unwrap();
        assert!(!r.is_feasible());
    }

    #[test]
    fn asymmetric_density_needs_both_classes() {
        let m = target("x^2/2 + x^4/4 + x^3/10");
        let r = lsi_lower(&m, None, Some(&aform(1.0, 1.0)), &OptConfig::default(), &RhoConfig::default()).unwrap();
        assert!(!r.is_feasible(), "{r:?}");
    }

    #[test]
    fn symmetry_detection() {
        assert!(is_symmetric(&target("x^4/4 - x^2/4"), 12.0).unwrap().0);
        assert!(!is_symmetric(&target("x^2/2 + x^3/10 + x^4/4"), 12.0).unwrap().0);
        assert!(is_symmetric(&target("(x-1)^2/2"), 12.0).unwrap().0);
    }
}
