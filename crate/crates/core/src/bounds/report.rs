use super::{BoundReport, Side, Target};
use serde::Serialize;

/// A reference value for `λ1`, typically from the eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub lambda1: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub target: Target,
    pub lower: Option<f64>,
    pub lower_method: Option<String>,
    pub upper: Option<f64>,
    pub upper_method: Option<String>,
}

impl Bracket {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lower.map_or(true, |l| l <= v + tol) && self.upper.map_or(true, |u| v <= u + tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub lower: String,
    pub upper: String,
    /// `lower - upper`.
    pub excess: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsDocument {
    /// Sorted by target, side, then value.
    pub reports: Vec<BoundReport>,
    pub brackets: Vec<Bracket>,
    pub oracle: Option<OracleValue>,
    /// `2λ1` from the oracle, a non-rigorous check on the `C_LS` bracket.
    pub oracle_cls_upper: Option<f64>,
    pub violations: Vec<Violation>,
}

impl BoundsDocument {
    pub fn bracket(&self, target: Target) -> Option<&Bracket> {
        self.brackets.iter().find(|b| b.target == target)
    }
}

/// Absolute floor added to every budget.
const BUDGET_FLOOR: f64 = 1e-9;

fn label(r: &BoundReport) -> String {
    r.method.name().to_string()
}

/// Merges reports into per-target brackets `[max lower, min upper]`. Upper
/// bounds on `λ1` induce `C_LS ≤ 2λ1`. Every lower/upper pair (and the oracle)
/// is checked for ordering within the combined budgets.
pub fn assemble_report(reports: Vec<BoundReport>, oracle: Option<OracleValue>) -> BoundsDocument {
    let mut reports = reports;
    reports.sort_by(|a, b| {
        (a.target, a.side)
            .cmp(&(b.target, b.side))
            .then(a.value.unwrap_or(f64::NAN).total_cmp(&b.value.unwrap_or(f64::NAN)))
            .then(a.method.cmp(&b.method))
    });
    // (label, value, budget) per target and side.
    let mut entries: Vec<(Target, Side, String, f64, f64)> = reports
        .iter()
        .filter_map(|r| r.value.map(|v| (r.target, r.side, label(r), v, r.error_budget.total() + BUDGET_FLOOR)))
        .collect();
    let lambda_uppers: Vec<(String, f64, f64)> = entries
        .iter()
        .filter(|e| e.0 == Target::Lambda1 && e.1 == Side::Upper)
        .map(|e| (format!("2×{}", e.2), 2.0 * e.3, 2.0 * e.4))
        .collect();
    let has_cls = entries.iter().any(|e| e.0 == Target::Cls);
    if has_cls {
        for (l, v, b) in lambda_uppers {
            entries.push((Target::Cls, Side::Upper, l, v, b));
        }
    }
    let mut brackets = Vec::new();
    let mut violations = Vec::new();
    for target in [Target::Lambda1, Target::Cls] {
        let lows: Vec<_> = entries.iter().filter(|e| e.0 == target && e.1 == Side::Lower).collect();
        let ups: Vec<_> = entries.iter().filter(|e| e.0 == target && e.1 == Side::Upper).collect();
        if lows.is_empty() && ups.is_empty() {
            continue;
        }
        let lo = lows.iter().copied().reduce(|a, b| if b.3 > a.3 { b } else { a });
        let up = ups.iter().copied().reduce(|a, b| if b.3 < a.3 { b } else { a });
        brackets.push(Bracket {
            target,
            lower: lo.map(|e| e.3),
            lower_method: lo.map(|e| e.2.clone()),
            upper: up.map(|e| e.3),
            upper_method: up.map(|e| e.2.clone()),
        });
        for l in &lows {
            for u in &ups {
                if l.3 > u.3 + l.4 + u.4 {
                    violations.push(Violation {
                        lower: l.2.clone(),
                        upper: u.2.clone(),
                        excess: l.3 - u.3,
                        budget: l.4 + u.4,
                    });
                }
            }
        }
        if let Some(o) = oracle {
            let (ov, ob) = match target {
                Target::Lambda1 => (o.lambda1, o.err + BUDGET_FLOOR),
                Target::Cls => (2.0 * o.lambda1, 2.0 * o.err + BUDGET_FLOOR),
            };
            let name = if target == Target::Lambda1 { "oracle" } else { "2×oracle" };
            for l in &lows {
                if l.3 > ov + l.4 + ob {
                    violations.push(Violation {
                        lower: l.2.clone(),
                        upper: name.into(),
                        excess: l.3 - ov,
                        budget: l.4 + ob,
                    });
                }
            }
            if target == Target::Lambda1 {
                for u in &ups {
                    if ov > u.3 + u.4 + ob {
                        violations.push(Violation {
                            lower: name.into(),
                            upper: u.2.clone(),
                            excess: ov - u.3,
                            budget: u.4 + ob,
                        });
                    }
                }
            }
        }
    }
    let oracle_cls_upper = oracle.filter(|_| has_cls).map(|o| 2.0 * o.lambda1);
    BoundsDocument {
        reports,
        brackets,
        oracle,
        oracle_cls_upper,
        violations,
    }
}
