//! Built-in example models, each with a default bounds plan.
//!
//! Models are named by strings such as `quartic`, `power alpha=1.5` or
//! `double-well beta=0.5`.

use crate::bounds::{BoundsPlan, Method, RayleighFamily};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Params};
use crate::model::{build_model, DiffusionModel, DriftSpec, ParamRange, WeightForm, WeightSpec};
use crate::oracle::OracleConfig;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Gallery {
    /// `σ = 1`, `U = x²/2`.
    Ou,
    /// `U = |x|^α/α`, or `(δ² + x²)^{α/2}/α` when `δ > 0`.
    Power { alpha: f64, delta: f64 },
    /// `U = √(δ² + x²)`.
    ExponentialSmoothed { delta: f64 },
    /// `U = x⁴/4`.
    Quartic,
    /// `U = x⁴/4 - βx²/2`.
    DoubleWell { beta: f64 },
    /// `σ = √(1 + x²)`, target density `∝ (1 + x²)^{-β}`.
    Cauchy { beta: f64 },
}

pub const DEFAULT_SMOOTHING: f64 = 1e-3;

/// The whole cast with the parameters used throughout the examples.
pub fn default_gallery() -> Vec<Gallery> {
    vec![
        Gallery::Ou,
        Gallery::Power { alpha: 1.5, delta: 0.0 },
        Gallery::ExponentialSmoothed { delta: DEFAULT_SMOOTHING },
        Gallery::Quartic,
        Gallery::DoubleWell { beta: 0.25 },
        Gallery::DoubleWell { beta: 0.5 },
        Gallery::DoubleWell { beta: 1.0 },
        Gallery::Cauchy { beta: 2.5 },
    ]
}

fn e(s: &str) -> Expr {
    parse(s, &["alpha", "beta", "delta", "eps", "gamma"]).expect("gallery expressions are well formed")
}

fn power_family(hi: f64) -> RayleighFamily {
    RayleighFamily {
        family: e("sign(x)*abs(x)^eps"),
        free: vec![("eps".into(), 0.3, hi)],
    }
}

fn all_methods() -> Vec<Method> {
    vec![Method::ChenWang, Method::Muckenhoupt, Method::Veysseire, Method::Rayleigh, Method::LogSobolev]
}

impl Gallery {
    pub fn build(&self) -> Result<DiffusionModel> {
        let mut p = Params::new();
        let (sigma, target) = match *self {
            Gallery::Ou => ("1", "x^2/2"),
            Gallery::Power { alpha, delta } => {
                p.insert("alpha".into(), alpha);
                if delta > 0.0 {
                    p.insert("delta".into(), delta);
                    ("1", "(delta^2+x^2)^(alpha/2)/alpha")
                } else {
                    ("1", "abs(x)^alpha/alpha")
                }
            }
            Gallery::ExponentialSmoothed { delta } => {
                p.insert("delta".into(), delta);
                ("1", "sqrt(delta^2+x^2)")
            }
            Gallery::Quartic => ("1", "x^4/4"),
            Gallery::DoubleWell { beta } => {
                p.insert("beta".into(), beta);
                ("1", "x^4/4-beta*x^2/2")
            }
            Gallery::Cauchy { beta } => {
                p.insert("beta".into(), beta);
                ("sqrt(1+x^2)", "beta*log(1+x^2)")
            }
        };
        build_model(e(sigma), DriftSpec::TargetPotential(e(target)), &p)
    }

    pub fn default_plan(&self) -> BoundsPlan {
        let unit = WeightSpec::new(WeightForm::Direct(e("1")));
        let zform = WeightSpec::new(WeightForm::ZForm(e("eps*x"))).with_param("eps", ParamRange::Range(0.5, 2.0));
        let aform = |eps: ParamRange| {
            WeightSpec::new(WeightForm::AForm(e("-(eps*x-gamma)^2")))
                .with_param("eps", eps)
                .with_param("gamma", ParamRange::Fixed(1.0))
        };
        match *self {
            Gallery::Ou => BoundsPlan {
                methods: all_methods(),
                chen_wang: vec![unit.clone()],
                rayleigh: vec![RayleighFamily {
                    family: e("x"),
                    free: vec![],
                }],
                lsi_increasing: Some(unit),
                lsi_decreasing: None,
            },
            Gallery::Power { .. } | Gallery::ExponentialSmoothed { .. } => BoundsPlan {
                methods: vec![Method::Muckenhoupt, Method::Veysseire, Method::Rayleigh],
                rayleigh: vec![power_family(1.5)],
                ..BoundsPlan::default()
            },
            Gallery::Quartic => BoundsPlan {
                methods: all_methods(),
                chen_wang: vec![zform],
                rayleigh: vec![power_family(1.5)],
                lsi_increasing: None,
                lsi_decreasing: Some(aform(ParamRange::Fixed(1.0))),
            },
            Gallery::DoubleWell { .. } => BoundsPlan {
                methods: all_methods(),
                chen_wang: vec![zform],
                rayleigh: vec![power_family(1.5)],
                lsi_increasing: None,
                lsi_decreasing: Some(aform(ParamRange::Range(0.5, 2.0))),
            },
            Gallery::Cauchy { beta } => BoundsPlan {
                methods: vec![Method::ChenWang, Method::Veysseire, Method::Rayleigh],
                chen_wang: vec![WeightSpec::new(WeightForm::Direct(e("sqrt(1+x^2)")))],
                // `|x|^ε` has finite energy and variance only for `ε < β - 1/2`.
                rayleigh: vec![power_family(1.5_f64.min(beta - 0.6))],
                ..BoundsPlan::default()
            },
        }
    }

    /// Eigensolver settings; the heavy-tailed exponential needs a wide window.
    pub fn oracle_config(&self) -> OracleConfig {
        match *self {
            Gallery::ExponentialSmoothed { .. } => OracleConfig {
                radius: Some(80.0),
                ..OracleConfig::default()
            },
            _ => OracleConfig::default(),
        }
    }
}

impl fmt::Display for Gallery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gallery::Ou => write!(f, "ou"),
            Gallery::Power { alpha, delta } if delta == 0.0 => write!(f, "power alpha={alpha}"),
            Gallery::Power { alpha, delta } => write!(f, "power alpha={alpha} delta={delta}"),
            Gallery::ExponentialSmoothed { delta } => write!(f, "exponential-smoothed delta={delta}"),
            Gallery::Quartic => write!(f, "quartic"),
            Gallery::DoubleWell { beta } => write!(f, "double-well beta={beta}"),
            Gallery::Cauchy { beta } => write!(f, "cauchy beta={beta}"),
        }
    }
}

impl FromStr for Gallery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Gallery> {
        let mut words = s.split_whitespace();
        let name = words.next().ok_or_else(|| Error::Config("empty gallery name".into()))?;
        let mut kv = Params::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{w}`")))?;
            let v: f64 = v.parse().map_err(|_| Error::Config(format!("`{v}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::Config(format!("{k} must be finite")));
            }
            kv.insert(k.to_string(), v);
        }
        let mut take = |k: &str, default: Option<f64>| -> Result<f64> {
            kv.remove(k)
                .or(default)
                .ok_or_else(|| Error::Config(format!("gallery model `{name}` needs {k}=...")))
        };
        let g = match name {
            "ou" => Gallery::Ou,
            "quartic" => Gallery::Quartic,
            "power" => {
                let alpha = take("alpha", None)?;
                let delta = take("delta", Some(0.0))?;
                if !(alpha > 1.0 || (alpha > 0.0 && delta > 0.0)) || delta < 0.0 {
                    return Err(Error::Config(format!("power needs α > 1 (or α > 0 with δ > 0), δ ≥ 0; got α = {alpha}, δ = {delta}")));
                }
                Gallery::Power { alpha, delta }
            }
            "exponential-smoothed" => {
                let delta = take("delta", Some(DEFAULT_SMOOTHING))?;
                if !(delta > 0.0) {
                    return Err(Error::Config(format!("δ must be positive, got {delta}")));
                }
                Gallery::ExponentialSmoothed { delta }
            }
            "double-well" => Gallery::DoubleWell {
                beta: take("beta", None)?,
            },
            "cauchy" => {
                let beta = take("beta", None)?;
                if !(beta > 1.0) {
                    return Err(Error::Config(format!("cauchy needs β > 1 for a spectral gap, got {beta}")));
                }
                Gallery::Cauchy { beta }
            }
            other => return Err(Error::Config(format!("unknown gallery model `{other}`"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unexpected parameter `{k}` for `{name}`")));
        }
        Ok(g)
    }
}

impl TryFrom<String> for Gallery {
    type Error = Error;

    fn try_from(s: String) -> Result<Gallery> {
        s.parse()
    }
}

impl From<Gallery> for String {
    fn from(g: Gallery) -> String {
        g.to_string()
    }
}
