use super::{integrate, QuadConfig};
use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr, Params};
use crate::model::{DiffusionModel, PROBE_POINTS, PROBE_RADIUS};
use serde::Serialize;

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Value {
    pub value: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Functionals {
    pub mean: Value,
    pub variance: Value,
    /// `None` unless `f > 0` on the probe grid.
    pub entropy: Option<Value>,
    /// `∫ σ² f'² dμ`.
    pub dirichlet: Value,
}

fn compile(m: &DiffusionModel, f: &Expr) -> Result<Compiled> {
    f.bind(m.params()).compile(&Params::new())
}

/// `∫ g dμ` for the normalized `μ`.
pub(crate) fn expectation(m: &DiffusionModel, g: impl Fn(f64) -> f64, cfg: &QuadConfig) -> Result<Value> {
    let log_z = m.log_z()?;
    let (a, b) = m.domain().bounds();
    let r = integrate(
        |x| {
            let w = (m.log_density(x) - log_z).exp();
            if w == 0.0 {
                0.0
            } else {
                g(x) * w
            }
        },
        a,
        b,
        cfg,
    )?
    .require_converged()?;
    Ok(Value {
        value: r.value,
        err: r.err_est,
    })
}

/// Mean, variance, entropy and Dirichlet form of `f` under `μ`.
pub fn functionals(m: &DiffusionModel, f: &Expr, cfg: &QuadConfig) -> Result<Functionals> {
    let fc = compile(m, f)?;
    let df = compile(m, &f.differentiate())?;
    let mean = expectation(m, |x| fc.eval(x), cfg)?;
    let mu = mean.value;
    let variance = expectation(m, |x| (fc.eval(x) - mu).powi(2), cfg)?;
    let dirichlet = expectation(
        m,
        |x| {
            let d = df.eval(x);
            if d == 0.0 {
                0.0
            } else {
                let s = m.sigma(x);
                s * s * d * d
            }
        },
        cfg,
    )?;
    let positive = m.probe_grid(PROBE_RADIUS, PROBE_POINTS).iter().all(|&x| fc.eval(x) > 0.0);
    let entropy = if positive {
        Some(entropy_of(m, &fc, mean, cfg)?)
    } else {
        None
    };
    Ok(Functionals {
        mean,
        variance,
        entropy,
        dirichlet,
    })
}

/// `Ent_μ(f) = μ(f log f) - μ(f) log μ(f)`; requires `f > 0`.
pub fn entropy(m: &DiffusionModel, f: &Expr, cfg: &QuadConfig) -> Result<Value> {
    let fc = compile(m, f)?;
    if let Some(&x) = m.probe_grid(PROBE_RADIUS, PROBE_POINTS).iter().find(|&&x| !(fc.eval(x) > 0.0)) {
        return Err(Error::Domain { op: "entropy", x });
    }
    let mean = expectation(m, |x| fc.eval(x), cfg)?;
    entropy_of(m, &fc, mean, cfg)
}

fn entropy_of(m: &DiffusionModel, fc: &Compiled, mean: Value, cfg: &QuadConfig) -> Result<Value> {
    let mu = mean.value;
    // Centered form μ(f log(f/μf)) avoids cancellation for nearly constant f.
    let e = expectation(
        m,
        |x| {
            let v = fc.eval(x);
            v * (v / mu).ln()
        },
        cfg,
    )?;
    Ok(Value {
        value: e.value,
        err: e.err + mean.err * (1.0 + mu.ln().abs()),
    })
}

/// A convex `φ` from the class used by φ-entropy inequalities.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    /// `φ(x) = x²` on ℝ.
    Poincare,
    /// `φ(x) = x log x` on `(0, ∞)`.
    LogSobolev,
    /// `φ(x) = x^p` on `(0, ∞)`, `p ∈ (1, 2)`.
    Beckner(f64),
    Custom { phi: Expr, interval: (f64, f64) },
}

impl PhiSpec {
    pub fn name(&self) -> String {
        match self {
            PhiSpec::Poincare => "poincare".into(),
            PhiSpec::LogSobolev => "log-sobolev".into(),
            PhiSpec::Beckner(p) => format!("beckner({p})"),
            PhiSpec::Custom { phi, .. } => format!("custom({phi})"),
        }
    }

    pub fn phi(&self) -> Expr {
        let x = Expr::x();
        match self {
            PhiSpec::Poincare => x.powi(2),
            PhiSpec::LogSobolev => &x * x.log(),
            PhiSpec::Beckner(p) => x.powf(*p),
            PhiSpec::Custom { phi, .. } => phi.clone(),
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        match self {
            PhiSpec::Poincare => (f64::NEG_INFINITY, f64::INFINITY),
            PhiSpec::LogSobolev | PhiSpec::Beckner(_) => (0.0, f64::INFINITY),
            PhiSpec::Custom { interval, .. } => *interval,
        }
    }

    /// `(φ'', φ''')` as expressions.
    pub fn derivatives(&self) -> (Expr, Expr) {
        let d2 = self.phi().differentiate().differentiate().simplify();
        let d3 = d2.differentiate().simplify();
        (d2, d3)
    }

    /// Sign of `φ'''` on the interval: `0` when it vanishes identically.
    pub fn third_derivative_sign(&self) -> Result<i8> {
        let (_, d3) = self.derivatives();
        let c = d3.compile(&Params::new())?;
        let pts = interval_probe(self.interval());
        let scale = pts.iter().map(|&x| c.eval(x).abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(0);
        }
        Ok(if pts.iter().any(|&x| c.eval(x) > 1e-12 * scale) { 1 } else { -1 })
    }

    /// Class membership on a probe grid of the interval.
    pub fn validate(&self) -> Result<()> {
        if let PhiSpec::Beckner(p) = self {
            if !(*p > 1.0 && *p < 2.0) {
                return Err(Error::Precondition(format!("Beckner exponent {p} outside (1, 2)")));
            }
        }
        let (d2, d3) = self.derivatives();
        let c2 = d2.compile(&Params::new())?;
        let c3 = d3.compile(&Params::new())?;
        validate_phi_class(|x| c2.eval(x), |x| c3.eval(x), self.interval())
    }
}

/// Probe points strictly inside `I`.
fn interval_probe((lo, hi): (f64, f64)) -> Vec<f64> {
    const N: usize = 801;
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let g = crate::model::chebyshev_grid(lo, hi, N + 2);
            g[1..=N].to_vec()
        }
        (true, false) => (0..N).map(|k| lo + 10f64.powf(-3.0 + 6.0 * k as f64 / (N - 1) as f64)).collect(),
        (false, true) => (0..N).rev().map(|k| hi - 10f64.powf(-3.0 + 6.0 * k as f64 / (N - 1) as f64)).collect(),
        (false, false) => (0..N).map(|k| (-7.6 + 15.2 * k as f64 / (N - 1) as f64).sinh()).collect(),
    }
}

/// Checks `φ'' > 0`, `φ'''` of constant sign and `-1/φ''` convex on a probe
/// grid of `interval`.
pub fn validate_phi_class(
    phi2: impl Fn(f64) -> f64,
    phi3: impl Fn(f64) -> f64,
    interval: (f64, f64),
) -> Result<()> {
    let pts = interval_probe(interval);
    let d2: Vec<f64> = pts.iter().map(|&x| phi2(x)).collect();
    if let Some(i) = d2.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Precondition(format!("φ'' = {} ≤ 0 at {}", d2[i], pts[i])));
    }
    let d3: Vec<f64> = pts.iter().map(|&x| phi3(x)).collect();
    let scale = d3.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let pos = d3.iter().position(|&v| v > 1e-12 * scale);
    let neg = d3.iter().position(|&v| v < -1e-12 * scale);
    if let (Some(i), Some(j)) = (pos, neg) {
        return Err(Error::Precondition(format!(
            "φ''' changes sign: {} at {}, {} at {}",
            d3[i], pts[i], d3[j], pts[j]
        )));
    }
    let g: Vec<f64> = d2.iter().map(|v| -1.0 / v).collect();
    for k in 1..pts.len() - 1 {
        let (x0, x1, x2) = (pts[k - 1], pts[k], pts[k + 1]);
        let s1 = (g[k] - g[k - 1]) / (x1 - x0);
        let s2 = (g[k + 1] - g[k]) / (x2 - x1);
        let dd = 2.0 * (s2 - s1) / (x2 - x0);
        // Rounding in the three values, amplified by the divided difference.
        let noise = 8.0 * f64::EPSILON * g[k - 1].abs().max(g[k].abs()).max(g[k + 1].abs())
            / ((x1 - x0).min(x2 - x1) * (x2 - x0));
        if dd < -1e-9 - noise {
            return Err(Error::Precondition(format!("-1/φ'' is not convex near {x1} (second difference {dd})")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiEntropy {
    /// `μ(φ(f)) - φ(μ(f))`.
    pub ent_phi: f64,
    /// `𝓔(f, φ'(f)) = ∫ φ''(f) σ² f'² dμ`.
    pub rhs: f64,
    pub err: f64,
}

/// φ-entropy of `f` and the matching energy term.
pub fn phi_entropy(m: &DiffusionModel, phi: &PhiSpec, f: &Expr, cfg: &QuadConfig) -> Result<PhiEntropy> {
    phi.validate()?;
    let (lo, hi) = phi.interval();
    let fc = compile(m, f)?;
    let df = compile(m, &f.differentiate())?;
    if let Some(&x) = m
        .probe_grid(PROBE_RADIUS, PROBE_POINTS)
        .iter()
        .find(|&&x| !matches!(fc.eval(x), v if v > lo && v < hi || (v == lo && lo.is_infinite())))
    {
        return Err(Error::Domain { op: "phi", x });
    }
    let none = Params::new();
    let phi_c = phi.phi().compile(&none)?;
    let phi2 = phi.derivatives().0.compile(&none)?;
    let mean = expectation(m, |x| fc.eval(x), cfg)?;
    let (ent_phi, err) = match phi {
        PhiSpec::Poincare => {
            let v = expectation(m, |x| (fc.eval(x) - mean.value).powi(2), cfg)?;
            (v.value, v.err + 2.0 * mean.value.abs() * mean.err)
        }
        PhiSpec::LogSobolev => {
            let e = entropy_of(m, &fc, mean, cfg)?;
            (e.value, e.err)
        }
        _ => {
            let a = expectation(m, |x| phi_c.eval(fc.eval(x)), cfg)?;
            (a.value - phi_c.eval(mean.value), a.err + mean.err)
        }
    };
    let rhs = expectation(
        m,
        |x| {
            let d = df.eval(x);
            if d == 0.0 {
                0.0
            } else {
                let s = m.sigma(x);
                phi2.eval(fc.eval(x)) * s * s * d * d
            }
        },
        cfg,
    )?;
    Ok(PhiEntropy {
        ent_phi,
        rhs: rhs.value,
        err: err + rhs.err,
    })
}

/// A median of `μ`: `|μ((-∞, m]) - 1/2| < 1e-10`.
pub fn median(m: &DiffusionModel, cfg: &QuadConfig) -> Result<f64> {
    let tight = QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_subdivisions: cfg.max_subdivisions.max(4000),
        ..*cfg
    };
    let log_z = m.log_z()?;
    let (lo, hi) = m.domain().bounds();
    let pdf = |x: f64| (m.log_density(x) - log_z).exp();
    let cdf = |x: f64| -> Result<f64> { Ok(integrate(pdf, lo, x, &tight)?.require_converged()?.value) };
    let mut a = lo.max(-cfg.truncation_r);
    let mut b = hi.min(cfg.truncation_r);
    let mut fa = cdf(a)? - 0.5;
    let mut fb = cdf(b)? - 0.5;
    let mut grow = 0;
    while fa > 0.0 && a > lo && grow < 60 {
        a = if lo.is_finite() { lo } else { 2.0 * a - 1.0 };
        fa = cdf(a)? - 0.5;
        grow += 1;
    }
    while fb < 0.0 && b < hi && grow < 120 {
        b = if hi.is_finite() { hi } else { 2.0 * b + 1.0 };
        fb = cdf(b)? - 0.5;
        grow += 1;
    }
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::Degenerate("median not bracketed".into()));
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = cdf(x)? - 0.5;
        if fx.abs() < 1e-12 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        // Newton step from x, kept inside the bracket.
        let p = pdf(x);
        let newton = x - fx / p;
        x = if p > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a < 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    let fx = cdf(x)? - 0.5;
    if fx.abs() < 1e-10 {
        Ok(x)
    } else {
        Err(Error::NotConverged { value: x, err: fx.abs() })
    }
}
