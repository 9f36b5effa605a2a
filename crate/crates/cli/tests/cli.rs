use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fkgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkgap")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = fkgap(&all);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn report<'a>(doc: &'a Value, method: &str, side: &str) -> &'a Value {
    doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["method"] == method && r["side"] == side)
        .unwrap_or_else(|| panic!("no {method} {side} report"))
}

#[test]
fn quartic_bracket_encloses_the_oracle() {
    let doc = json(&["bounds", "--gallery", "quartic"]);
    let b = &doc["brackets"][0];
    assert_eq!(b["target"], "lambda1");
    let (lo, hi) = (f(&b["lower"]), f(&b["upper"]));
    assert!(lo >= 1.224 && (hi - 1.426).abs() < 5e-4, "[{lo}, {hi}]");
    let o = f(&doc["oracle"]["lambda1"]);
    assert!(lo <= o && o <= hi);
    assert!(doc["violations"].as_array().unwrap().is_empty());
    for r in doc["reports"].as_array().unwrap() {
        assert!(r["anchor"].as_str().is_some_and(|a| !a.is_empty()));
        assert!(r["error_budget"].is_object() && r["params"].is_object());
    }
}

#[test]
fn cauchy_integrated_bound_is_eight_thirds() {
    let doc = json(&["bounds", "--gallery", "cauchy beta=2.5"]);
    let v = f(&report(&doc, "veysseire", "lower")["value"]);
    // (2β-1)(β-3/2)/(β-1) at β = 5/2.
    assert!((v - 8.0 / 3.0).abs() < 1e-4, "{v}");
}

#[test]
fn empty_method_list_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[model]\ngallery = \"quartic\"\n[bounds]\nmethods = []\n");
    let doc = json(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert!(doc["reports"].as_array().unwrap().is_empty());
    assert!(doc["oracle"].is_null());
}

#[test]
fn oracle_values() {
    let ou = json(&["oracle", "--gallery", "ou"]);
    assert!((f(&ou["result"]["lambda1"]) - 1.0).abs() < 1e-4);
    assert!(f(&ou["va_flatness"]["relative"]) < 1e-3);
    let q = f(&json(&["oracle", "--gallery", "quartic"])["result"]["lambda1"]);
    assert!((1.224..=1.426).contains(&q), "{q}");
    let dw = &json(&["oracle", "--gallery", "double-well beta=0.5"])["result"];
    assert!(f(&dw["lambda1"]) >= 1.5f64.sqrt() - 0.5 - f(&dw["err"]));
}

#[test]
fn oracle_csv_is_an_increasing_eigenvector() {
    let out = fkgap(&["oracle", "--gallery", "quartic", "--format", "csv", "--grid", "512", "--radius", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,x,eigvec,va"));
    let g: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    // Extrapolation keeps the eigenvector of the refined 2n grid.
    assert_eq!(g.len(), 1024);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    let doc = json(&["oracle", "--gallery", "quartic", "--grid", "512", "--radius", "3"]);
    assert_eq!(doc["result"]["n"], 512);
    assert_eq!(f(&doc["result"]["R"]), 3.0);
}

const SMALL: &str = "[mc]\npaths = 20000\n";

#[test]
fn ou_intertwining_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("[model]\ngallery = \"ou\"\n{SMALL}"));
    let doc = json(&["check", "--config", cfg.to_str().unwrap()]);
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    let (identity, inequality) = (&checks[0], &checks[1]);
    assert!(f(&identity["zscore"]).abs() < 3.0 && identity["status"] == "pass", "{identity}");
    // Inequalities report the margin z-score, positive when the bound holds.
    assert!(f(&inequality["zscore"]) > 3.0 && inequality["status"] == "pass", "{inequality}");
}

#[test]
fn quartic_log_sobolev_margin_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "[model]\ngallery = \"quartic\"\n{SMALL}\n[[mc.subintertwining]]\nphi = \"log-sobolev\"\nf = \"2+tanh(x)\"\n\
         weight = {{ form = \"a-form\", expr = \"-(eps*x-gamma)^2\", params = {{ eps = 1.0, gamma = 1.0 }} }}\n"
    );
    let cfg = write(dir.path(), "c.toml", &text);
    let doc = json(&["check", "--config", cfg.to_str().unwrap()]);
    let c = &doc["checks"][0];
    assert!(f(&c["zscore"]) > -3.0, "{c}");
}

#[test]
fn biased_euler_scheme_fails_the_check() {
    // At Δt = 1/4 the Euler derivative decays like (3/4)^2 instead of e^{-1/2}.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[model]\ngallery = \"ou\"\n[mc]\nstep = 0.25\npaths = 20000\n[[mc.intertwining]]\nf = \"tanh(x)\"\n",
    );
    let out = fkgap(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fail"));
}

#[test]
fn monotonicity_violation_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[model]\ngallery = \"ou\"\n[mc]\npaths = 1000\n[[mc.subintertwining]]\nphi = \"log-sobolev\"\nf = \"2+tanh(x)\"\n\
         weight = { form = \"direct\", expr = \"exp(-x/4)\" }\n",
    );
    let out = fkgap(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "[model]\ngallery = \"ou\"\nshape = 1\n",
        "[model]\ngallery = \"quintic\"\n",
        "[model]\nsigma = \"1\"\n",
        "[model]\ntarget_potential = \"x^2/2 + foo\"\n",
        "[model]\ngallery = \"ou\"\n[bounds]\nmethods = [\"hardy\"]\n",
        "[model]\ngallery = \"ou\"\n[oracle]\nwidth = 2\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.toml"), text);
        let out = fkgap(&["bounds", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&out), 2, "{text}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(code(&fkgap(&["bounds"])), 2);
    assert_eq!(code(&fkgap(&["bounds", "--gallery", "ou", "--format", "xml"])), 2);
    assert_eq!(code(&fkgap(&["oracle", "--config", "/nonexistent/run.toml"])), 2);
}

#[test]
fn custom_model_matches_its_gallery_twin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[model]\nsigma = \"1\"\ndrift = \"-x^3+beta*x\"\nparams = { beta = 0.5 }\n",
    );
    let custom = f(&json(&["oracle", "--config", cfg.to_str().unwrap()])["result"]["lambda1"]);
    let gallery = f(&json(&["oracle", "--gallery", "double-well beta=0.5"])["result"]["lambda1"]);
    assert!((custom - gallery).abs() < 1e-8, "{custom} vs {gallery}");
}

/// `sup_ε ρ(ε)` for `Z = εx` on the quartic: `ρ = ε` up to `√(3/2)`, then
/// `ε - (4/(3√3))(ε² - 3/2)^{3/2}`, the minimum of `ε - (ε² - 3/2)y + y³/4` over `y ≥ 0`.
fn quartic_z_form_sup() -> f64 {
    let rho = |e: f64| {
        let k = e * e - 1.5;
        if k <= 0.0 {
            e
        } else {
            e - 4.0 / (3.0 * 3f64.sqrt()) * k.powf(1.5)
        }
    };
    (0..=200_000).map(|i| rho(1.2 + 0.2 * i as f64 / 200_000.0)).fold(f64::MIN, f64::max)
}

#[test]
fn reproduce_table_rows() {
    let doc = json(&["reproduce"]);
    let rows = doc["rows"].as_array().unwrap();
    let row = |name: &str| rows.iter().find(|r| r["row"] == name).unwrap_or_else(|| panic!("no row {name}"));
    for r in rows {
        let consistent = r["error"].is_null() && f(&r["delta"]) <= f(&r["tol"]);
        assert_eq!(r["pass"].as_bool().unwrap(), consistent, "{r}");
    }
    let m = row("alpha=4 muckenhoupt");
    assert_eq!(m["reference"], "0.152000");
    assert!(m["pass"].as_bool().unwrap() && f(&m["tol"]) == 5e-3);
    let l = row("LSI quartic");
    assert_eq!(l["reference"], "1.188000");
    assert!(l["pass"].as_bool().unwrap() && f(&l["tol"]) == 2e-2);
    let cw = row("quartic chen-wang");
    assert_eq!(cw["reference"], "1.224745");
    assert_eq!(f(&cw["tol"]), 1e-3);
    // The unrestricted search over ε finds more than √(3/2).
    assert!((f(&cw["computed"]) - quartic_z_form_sup()).abs() < 1e-6, "{cw}");
}

#[test]
fn inspect_prints_the_cauchy_potential() {
    let doc = json(&["inspect", "--gallery", "cauchy beta=2.5"]);
    let vs = fkgap::parse(doc["expressions"]["V_sigma"].as_str().unwrap(), &[]).unwrap();
    let u = fkgap::parse(doc["expressions"]["U"].as_str().unwrap(), &[]).unwrap();
    for x in [-3.0, -0.5, 0.0, 1.0, 7.0] {
        let want = 4.0 / (1.0 + x * x);
        assert!((vs.evaluate(x, &Default::default()).unwrap() - want).abs() < 1e-12);
        // U absorbs the -log σ² of the speed measure.
        assert!((u.evaluate(x, &Default::default()).unwrap() - 1.5 * (1.0 + x * x).ln()).abs() < 1e-12);
    }
    let table = String::from_utf8(fkgap(&["inspect", "--gallery", "quartic"]).stdout).unwrap();
    assert!(table.contains("chen_wang[0] V_a") && table.contains("lsi_decreasing V_a"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("[model]\ngallery = \"double-well beta=0.5\"\n{SMALL}"));
    let cfg = cfg.to_str().unwrap();
    for args in [
        vec!["bounds", "--config", cfg, "--format", "json"],
        vec!["check", "--config", cfg, "--format", "csv"],
        vec!["oracle", "--config", cfg, "--format", "csv"],
        vec!["reproduce", "--format", "table"],
    ] {
        let (a, b) = (fkgap(&args), fkgap(&args));
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let seeded = |s: &str| fkgap(&["check", "--config", cfg, "--format", "csv", "--seed", s]).stdout;
    assert_ne!(seeded("1"), seeded("2"));
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bounds.csv");
    let out = fkgap(&["bounds", "--gallery", "ou", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("method,target,side,value,params,quad_err,opt_gap,truncation,anchor,notes\n"));
    assert!(text.contains("chen-wang,lambda1,lower,1,"));
}
