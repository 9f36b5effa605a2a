use crate::config::{check_weight, parse_phi, parse_test_fn, RunConfig};
use crate::fail::{Failure, EXIT_CHECK};
use crate::render::{fix, kv, num, opt_fix, sci, table, Doc};
use fkgap::bounds::{assemble_report, run_plan, BoundReport, OracleValue, Side, Target};
use fkgap::expr::{Expr, Params};
use fkgap::gallery::Gallery;
use fkgap::mcsim::{check_intertwining, check_subintertwining, Verdict};
use fkgap::model::{realize_weight, ParamRange, WeightForm, WeightSpec};
use fkgap::oracle::{eigvec_weight, oracle, va_spread};
use fkgap::quad::PhiSpec;
use serde_json::{json, Value};
use std::collections::BTreeMap;

fn target_name(t: Target) -> &'static str {
    match t {
        Target::Lambda1 => "lambda1",
        Target::Cls => "cls",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Lower => "lower",
        Side::Upper => "upper",
    }
}

pub fn params_str(p: &BTreeMap<String, f64>) -> String {
    p.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect::<Vec<_>>().join(",")
}

fn with_model(label: &str, command: &str, body: Value) -> Value {
    let mut v = json!({ "command": command, "model": label });
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, body) {
        dst.extend(src);
    }
    v
}

pub fn bounds(cfg: &RunConfig) -> Result<Doc, Failure> {
    let m = cfg.build_model()?;
    let plan = cfg.plan()?;
    let reports = run_plan(&m, &plan, &cfg.plan_settings())?;
    let reference = if cfg.bounds.with_oracle && !plan.methods.is_empty() {
        Some(OracleValue::from(&oracle(&m, &cfg.oracle_config()?)?))
    } else {
        None
    };
    let doc = assemble_report(reports, reference);
    let label = cfg.model_label();

    let rows: Vec<Vec<String>> = doc
        .reports
        .iter()
        .map(|r| {
            vec![
                r.method.name().to_string(),
                target_name(r.target).to_string(),
                side_name(r.side).to_string(),
                opt_fix(r.value),
                params_str(&r.params),
                sci(r.error_budget.total()),
                r.notes.join("; "),
            ]
        })
        .collect();
    let mut t = format!("model: {label}\n\n");
    t += &table(&["method", "target", "side", "value", "params", "budget", "notes"], &rows);
    t += "\nbrackets\n";
    let brackets: Vec<Vec<String>> = doc
        .brackets
        .iter()
        .map(|b| {
            let end = |v: Option<f64>, m: &Option<String>| match (v, m) {
                (Some(v), Some(m)) => format!("{} ({m})", fix(v)),
                _ => "-".to_string(),
            };
            vec![target_name(b.target).to_string(), end(b.lower, &b.lower_method), end(b.upper, &b.upper_method)]
        })
        .collect();
    t += &table(&["target", "lower", "upper"], &brackets);
    if let Some(o) = doc.oracle {
        t += &format!("\noracle lambda1 = {} ± {}\n", fix(o.lambda1), sci(o.err));
    }
    if let Some(c) = doc.oracle_cls_upper {
        t += &format!("2 × oracle lambda1 = {} (not rigorous)\n", fix(c));
    }
    if doc.violations.is_empty() {
        t += "violations: none\n";
    } else {
        t += "violations\n";
        for v in &doc.violations {
            t += &format!("  {} > {} by {} (budget {})\n", v.lower, v.upper, sci(v.excess), sci(v.budget));
        }
    }
    let mut anchors: Vec<&str> = doc.reports.iter().map(|r| r.anchor).collect();
    anchors.sort_unstable();
    anchors.dedup();
    if !anchors.is_empty() {
        t += "\nanchors\n";
        for a in anchors {
            t += &format!("  {a}\n");
        }
    }

    let mut csv = vec![["method", "target", "side", "value", "params", "quad_err", "opt_gap", "truncation", "anchor", "notes"]
        .map(String::from)
        .to_vec()];
    csv.extend(doc.reports.iter().map(report_csv));
    Ok(Doc {
        json: with_model(&label, "bounds", serde_json::to_value(&doc).expect("reports serialize")),
        table: t,
        csv,
    })
}

fn report_csv(r: &BoundReport) -> Vec<String> {
    let b = &r.error_budget;
    vec![
        r.method.name().to_string(),
        target_name(r.target).to_string(),
        side_name(r.side).to_string(),
        r.value.map_or_else(String::new, num),
        params_str(&r.params),
        num(b.quad_err),
        num(b.opt_gap),
        num(b.truncation),
        r.anchor.to_string(),
        r.notes.join("; "),
    ]
}

pub fn oracle_cmd(cfg: &RunConfig) -> Result<Doc, Failure> {
    let m = cfg.build_model()?;
    let o = oracle(&m, &cfg.oracle_config()?)?;
    let label = cfg.model_label();
    // The flatness diagnostic is optional: a degenerate eigenvector has no weight.
    let weight = eigvec_weight(&m, &o);
    let spread = weight.as_ref().ok().map(|d| va_spread(d, &o, 0.5));

    let mut pairs = vec![
        ("model", label.clone()),
        ("lambda1", fix(o.lambda1)),
        ("err", sci(o.err)),
        ("lambda0", sci(o.lambda0)),
        ("discretization_err", sci(o.discretization_err)),
        ("truncation", sci(o.truncation)),
        ("R", o.radius.to_string()),
        ("n", o.n.to_string()),
        ("boundary", format!("{:?}", o.boundary).to_lowercase()),
        ("extrapolated", o.extrapolated.to_string()),
        ("sign_changes", o.sign_changes.to_string()),
        ("gprime_positive", o.gprime_positive.to_string()),
        ("degenerate", o.degenerate.to_string()),
    ];
    match (&spread, &weight) {
        (Some(s), _) => {
            pairs.push(("V_a flatness", format!("[{}, {}], mean {}, spread {}", fix(s.min), fix(s.max), fix(s.mean), sci(s.relative))));
        }
        (None, Err(e)) => pairs.push(("V_a flatness", format!("unavailable: {e}"))),
        (None, Ok(_)) => {}
    }

    let mut csv = vec![vec!["s".to_string(), "x".into(), "eigvec".into(), "va".into()]];
    for i in 0..o.x.len() {
        let x = o.x[i];
        let va = match &weight {
            Ok(d) if d.support().0 <= x && x <= d.support().1 => num(d.va(x)),
            _ => String::new(),
        };
        csv.push(vec![num(o.s[i]), num(x), num(o.eigvec[i]), va]);
    }
    let body = json!({
        "result": o,
        "va_flatness": spread,
        "va_flatness_error": weight.as_ref().err().map(|e| e.to_string()),
    });
    Ok(Doc {
        json: with_model(&label, "oracle", body),
        table: kv(&pairs),
        csv,
    })
}

struct Case {
    name: String,
    weight: WeightSpec,
    /// `None` for the intertwining identity.
    phi: Option<PhiSpec>,
    f: Expr,
    x0: f64,
    t: Option<f64>,
}

fn weight_label(w: &WeightSpec) -> String {
    let fixed: BTreeMap<String, f64> = w
        .params
        .iter()
        .filter_map(|(k, r)| match *r {
            ParamRange::Fixed(v) => Some((k.clone(), v)),
            ParamRange::Range(..) => None,
        })
        .collect();
    let p = params_str(&fixed);
    let base = format!("{} {}", w.form.kind(), w.form.expr());
    if p.is_empty() {
        base
    } else {
        format!("{base} [{p}]")
    }
}

fn a_form_unit() -> WeightSpec {
    let e = fkgap::parse("-(eps*x-gamma)^2", &["eps", "gamma"]).expect("literal parses");
    WeightSpec::new(WeightForm::AForm(e))
        .with_param("eps", ParamRange::Fixed(1.0))
        .with_param("gamma", ParamRange::Fixed(1.0))
}

fn default_suite(g: Option<Gallery>) -> Vec<Case> {
    let unit = WeightSpec::new(WeightForm::Direct(Expr::constant(1.0)));
    let f = |s: &str| s.parse::<Expr>().expect("literal parses");
    let mut cases = vec![
        Case {
            name: String::new(),
            weight: unit.clone(),
            phi: None,
            f: f("tanh(x)"),
            x0: 0.5,
            t: None,
        },
        Case {
            name: String::new(),
            weight: unit,
            phi: Some(PhiSpec::Poincare),
            f: f("tanh(x)"),
            x0: 0.5,
            t: None,
        },
    ];
    if matches!(g, Some(Gallery::Quartic | Gallery::DoubleWell { .. })) {
        cases.push(Case {
            name: String::new(),
            weight: a_form_unit(),
            phi: None,
            f: f("tanh(x)"),
            x0: 0.5,
            t: None,
        });
        cases.push(Case {
            name: String::new(),
            weight: a_form_unit(),
            phi: Some(PhiSpec::LogSobolev),
            f: f("2+tanh(x)"),
            x0: 0.5,
            t: None,
        });
    }
    cases
}

fn configured_suite(cfg: &RunConfig) -> Result<Vec<Case>, Failure> {
    let mc = &cfg.mc;
    if mc.intertwining.is_none() && mc.subintertwining.is_none() {
        return Ok(default_suite(cfg.gallery()?));
    }
    let mut cases = Vec::new();
    for (i, b) in mc.intertwining.iter().flatten().enumerate() {
        let at = format!("mc.intertwining[{i}]");
        cases.push(Case {
            name: String::new(),
            weight: check_weight(b.weight.as_ref(), &at)?,
            phi: None,
            f: parse_test_fn(&b.f, &at)?,
            x0: b.x0,
            t: b.t,
        });
    }
    for (i, b) in mc.subintertwining.iter().flatten().enumerate() {
        let at = format!("mc.subintertwining[{i}]");
        cases.push(Case {
            name: String::new(),
            weight: check_weight(b.weight.as_ref(), &at)?,
            phi: Some(parse_phi(&b.phi, b.p)?),
            f: parse_test_fn(&b.f, &at)?,
            x0: b.x0,
            t: b.t,
        });
    }
    Ok(cases)
}

/// Equalities fail beyond `|z| > 5`, inequalities below a margin of `-5σ`;
/// between 3 and 5 standard errors a check is only marginal.
fn status(verdict: Verdict, deviation: f64) -> &'static str {
    if verdict == Verdict::Inconclusive {
        "inconclusive"
    } else if deviation < 3.0 {
        "pass"
    } else if deviation <= 5.0 {
        "marginal"
    } else {
        "fail"
    }
}

/// Returns the report and whether any check failed conclusively.
pub fn check(cfg: &RunConfig) -> Result<(Doc, u8), Failure> {
    let m = cfg.build_model()?;
    let mc = cfg.mc_config()?;
    let mut cases = configured_suite(cfg)?;
    for c in &mut cases {
        let kind = c.phi.as_ref().map_or_else(|| "intertwining".to_string(), |p| format!("sub-intertwining {}", p.name()));
        c.name = format!("{kind}: a = {}, f = {}", weight_label(&c.weight), c.f);
    }
    let label = cfg.model_label();
    let mut rows = Vec::new();
    let mut items = Vec::new();
    let mut failed = false;
    for c in &cases {
        let t = c.t.unwrap_or(mc.horizon);
        if !(t >= 0.0) {
            return Err(Failure::config(format!("{}: t must be nonnegative", c.name)));
        }
        let (lhs, lhs_se, rhs, rhs_se, z, st) = match &c.phi {
            None => {
                let r = check_intertwining(&m, &c.weight, &Params::new(), &c.f, c.x0, t, &mc)?;
                (r.lhs, r.lhs_se, r.rhs, r.rhs_se, r.zscore, status(r.verdict, r.zscore))
            }
            Some(phi) => {
                let r = check_subintertwining(&m, &c.weight, &Params::new(), phi, &c.f, c.x0, t, &mc)?;
                (r.lhs, r.lhs_se, r.rhs, r.rhs_se, r.margin_zscore, status(r.verdict, -r.margin_zscore))
            }
        };
        failed |= st == "fail";
        rows.push(vec![c.name.clone(), fix(lhs), sci(lhs_se), fix(rhs), sci(rhs_se), format!("{z:.2}"), st.to_string()]);
        items.push(json!({
            "name": c.name,
            "x0": c.x0,
            "t": t,
            "lhs": lhs,
            "lhs_se": lhs_se,
            "rhs": rhs,
            "rhs_se": rhs_se,
            "zscore": z,
            "status": st,
        }));
    }
    let headers = ["check", "lhs", "lhs_se", "rhs", "rhs_se", "z", "status"];
    let mut t = format!("model: {label}\npaths: {}, step: {}, seed: {}\n\n", mc.paths, mc.step, mc.seed);
    t += &table(&headers, &rows);
    t += "\nz is |lhs - rhs|/se for identities and (rhs - lhs)/se for inequalities\n";
    let mut csv = vec![headers.map(String::from).to_vec()];
    csv.extend(items.iter().map(|v| {
        ["name", "lhs", "lhs_se", "rhs", "rhs_se", "zscore", "status"]
            .iter()
            .map(|k| match &v[*k] {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), num),
                other => other.to_string(),
            })
            .collect()
    }));
    let body = json!({ "mc": mc, "checks": items });
    let code = if failed { EXIT_CHECK } else { 0 };
    Ok((
        Doc {
            json: with_model(&label, "check", body),
            table: t,
            csv,
        },
        code,
    ))
}

pub fn inspect(cfg: &RunConfig) -> Result<Doc, Failure> {
    let m = cfg.build_model()?;
    let plan = cfg.plan()?;
    let label = cfg.model_label();
    let mut entries: Vec<(String, String)> = vec![
        ("sigma".into(), m.sigma_expr().to_string()),
        ("drift b".into(), m.drift_expr().to_string()),
        (
            "U".into(),
            m.potential_expr().map_or_else(|| "(drift given directly; see U')".to_string(), Expr::to_string),
        ),
        ("U'".into(), m.du_expr().to_string()),
        ("V_sigma".into(), m.v_sigma_expr().simplify().to_string()),
    ];
    let mut weights: Vec<(String, &WeightSpec)> = plan.chen_wang.iter().enumerate().map(|(i, w)| (format!("chen_wang[{i}]"), w)).collect();
    weights.extend(plan.lsi_increasing.iter().map(|w| ("lsi_increasing".to_string(), w)));
    weights.extend(plan.lsi_decreasing.iter().map(|w| ("lsi_decreasing".to_string(), w)));
    for (name, w) in weights {
        // Free parameters are shown at the center of their box.
        let free = w.free();
        let mid: Vec<f64> = free.iter().map(|(_, lo, hi)| 0.5 * (lo + hi)).collect();
        let at = w.assignment(&mid);
        let d = realize_weight(&m, w, &at)?;
        let exprs = d.exprs().expect("symbolic weights have expressions");
        let shown = format!("{} {}", w.form.kind(), w.form.expr());
        let shown = if at.is_empty() { shown } else { format!("{shown} at {}", params_str(&at)) };
        entries.push((format!("{name} weight"), shown));
        entries.push((format!("{name} V_a"), exprs.va.to_string()));
        entries.push((format!("{name} b_a"), exprs.drift_a.to_string()));
    }
    let pairs: Vec<(&str, String)> = entries.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    let mut t = format!("model: {label}\n\n");
    t += &kv(&pairs);
    let mut csv = vec![vec!["name".to_string(), "expr".into()]];
    csv.extend(entries.iter().map(|(k, v)| vec![k.clone(), v.clone()]));
    let obj: serde_json::Map<String, Value> = entries.into_iter().map(|(k, v)| (k, Value::String(v))).collect();
    Ok(Doc {
        json: with_model(&label, "inspect", json!({ "expressions": obj })),
        table: t,
        csv,
    })
}
