//! Run configuration: a TOML file with one section per module.
//!
//! Every section rejects unknown keys, and expressions are parsed and models
//! built before any computation starts.

use crate::fail::Failure;
use fkgap::bounds::{BoundsPlan, Method, MuckenhouptConfig, PlanSettings, RayleighFamily, RhoConfig};
use fkgap::expr::{parse, Expr, Params};
use fkgap::gallery::Gallery;
use fkgap::mcsim::MCConfig;
use fkgap::model::{build_model_on, Boundary, DiffusionModel, Domain, DriftSpec, ParamRange, WeightForm, WeightSpec};
use fkgap::optim::OptConfig;
use fkgap::oracle::OracleConfig;
use fkgap::quad::{PhiSpec, QuadConfig};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Table,
    #[serde(alias = "json-like")]
    #[value(alias = "json-like")]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub quad: QuadConfig,
    pub bounds: BoundsBlock,
    /// Absent means the gallery's eigensolver settings (or the defaults).
    pub oracle: Option<OracleConfig>,
    pub mc: McBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    /// A gallery name such as `double-well beta=0.5`; excludes the other keys.
    pub gallery: Option<String>,
    pub sigma: Option<String>,
    pub drift: Option<String>,
    pub target_potential: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub domain: Option<Domain>,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    Direct,
    ExpW,
    ZForm,
    AForm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightBlock {
    pub form: FormKind,
    pub expr: String,
    /// A number fixes a parameter; `[lo, hi]` makes it free.
    #[serde(default)]
    pub params: BTreeMap<String, ParamRange>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayleighBlock {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamRange>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsBlock {
    /// Absent means the gallery plan's methods, or all of them.
    pub methods: Option<Vec<String>>,
    pub chen_wang: Option<Vec<WeightBlock>>,
    pub rayleigh: Option<Vec<RayleighBlock>>,
    pub lsi_increasing: Option<WeightBlock>,
    pub lsi_decreasing: Option<WeightBlock>,
    /// Run the eigensolver and check the bounds against it.
    pub with_oracle: bool,
    pub opt: OptConfig,
    pub rho: RhoConfig,
    pub muckenhoupt: MuckenhouptConfig,
}

impl Default for BoundsBlock {
    fn default() -> BoundsBlock {
        BoundsBlock {
            methods: None,
            chen_wang: None,
            rayleigh: None,
            lsi_increasing: None,
            lsi_decreasing: None,
            with_oracle: true,
            opt: OptConfig::default(),
            rho: RhoConfig::default(),
            muckenhoupt: MuckenhouptConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McBlock {
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub antithetic: Option<bool>,
    pub blow_up_radius: Option<f64>,
    /// Absent (with `subintertwining`) means the gallery's default suite.
    pub intertwining: Option<Vec<IntertwiningBlock>>,
    pub subintertwining: Option<Vec<SubIntertwiningBlock>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntertwiningBlock {
    /// Absent means `a = 1`.
    pub weight: Option<WeightBlock>,
    pub f: String,
    #[serde(default = "half")]
    pub x0: f64,
    /// Absent means the horizon.
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubIntertwiningBlock {
    pub weight: Option<WeightBlock>,
    /// `poincare`, `log-sobolev` or `beckner` (with `p`).
    pub phi: String,
    pub p: Option<f64>,
    pub f: String,
    #[serde(default = "half")]
    pub x0: f64,
    pub t: Option<f64>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|f| Failure::config(format!("{}: {}", path.display(), f.message)))
    }

    pub fn parse(text: &str) -> Result<RunConfig, Failure> {
        toml::from_str(text).map_err(|e| Failure::config(e.to_string()))
    }

    pub fn for_gallery(name: &str) -> RunConfig {
        RunConfig {
            model: ModelBlock {
                gallery: Some(name.to_string()),
                ..ModelBlock::default()
            },
            ..RunConfig::default()
        }
    }

    pub fn gallery(&self) -> Result<Option<Gallery>, Failure> {
        self.model.gallery.as_deref().map(|s| s.parse().map_err(Failure::from)).transpose()
    }

    /// Human-readable model label used in report headers.
    pub fn model_label(&self) -> String {
        let m = &self.model;
        if let Some(g) = &m.gallery {
            return g.clone();
        }
        let sigma = m.sigma.as_deref().unwrap_or("1");
        match (&m.drift, &m.target_potential) {
            (Some(b), _) => format!("sigma={sigma} drift={b}"),
            (_, Some(u)) => format!("sigma={sigma} target={u}"),
            _ => format!("sigma={sigma}"),
        }
    }

    pub fn build_model(&self) -> Result<DiffusionModel, Failure> {
        let m = &self.model;
        let model = if let Some(g) = self.gallery()? {
            let custom = m.sigma.is_some()
                || m.drift.is_some()
                || m.target_potential.is_some()
                || !m.params.is_empty()
                || m.domain.is_some()
                || m.boundary.is_some();
            if custom {
                return Err(Failure::config("model: `gallery` excludes sigma, drift, target_potential, params, domain and boundary"));
            }
            g.build()?
        } else {
            let names: Vec<&str> = m.params.keys().map(String::as_str).collect();
            let ex = |what: &str, s: &str| parse(s, &names).map_err(|e| Failure::config(format!("model.{what}: {e}")));
            let sigma = ex("sigma", m.sigma.as_deref().unwrap_or("1"))?;
            let spec = match (&m.drift, &m.target_potential) {
                (Some(b), None) => DriftSpec::Drift(ex("drift", b)?),
                (None, Some(u)) => DriftSpec::TargetPotential(ex("target_potential", u)?),
                _ => return Err(Failure::config("model: give exactly one of `gallery`, `drift` or `target_potential`")),
            };
            let params: Params = m.params.clone().into_iter().collect();
            let domain = m.domain.unwrap_or(Domain::Line);
            let boundary = m.boundary.unwrap_or(match domain {
                Domain::Line => Boundary::None,
                Domain::Interval(..) => Boundary::Neumann,
            });
            build_model_on(sigma, spec, &params, domain, boundary)?
        };
        self.quad.validate()?;
        Ok(model.with_quad(self.quad))
    }

    pub fn oracle_config(&self) -> Result<OracleConfig, Failure> {
        Ok(match (self.oracle, self.gallery()?) {
            (Some(o), _) => o,
            (None, Some(g)) => g.oracle_config(),
            (None, None) => OracleConfig::default(),
        })
    }

    pub fn plan_settings(&self) -> PlanSettings {
        PlanSettings {
            quad: self.quad,
            opt: self.bounds.opt,
            rho: self.bounds.rho,
            muckenhoupt: self.bounds.muckenhoupt,
        }
    }

    /// The gallery plan with configured methods and families substituted.
    pub fn plan(&self) -> Result<BoundsPlan, Failure> {
        let b = &self.bounds;
        let mut plan = match self.gallery()? {
            Some(g) => g.default_plan(),
            None => BoundsPlan {
                methods: ALL_METHODS.to_vec(),
                ..BoundsPlan::default()
            },
        };
        if let Some(ms) = &b.methods {
            plan.methods = ms.iter().map(|s| parse_method(s)).collect::<Result<_, _>>()?;
        }
        if let Some(ws) = &b.chen_wang {
            plan.chen_wang = ws.iter().map(|w| w.spec("bounds.chen_wang")).collect::<Result<_, _>>()?;
        }
        if let Some(rs) = &b.rayleigh {
            plan.rayleigh = rs.iter().map(RayleighBlock::family).collect::<Result<_, _>>()?;
        }
        if let Some(w) = &b.lsi_increasing {
            plan.lsi_increasing = Some(w.spec("bounds.lsi_increasing")?);
        }
        if let Some(w) = &b.lsi_decreasing {
            plan.lsi_decreasing = Some(w.spec("bounds.lsi_decreasing")?);
        }
        Ok(plan)
    }

    pub fn mc_config(&self) -> Result<MCConfig, Failure> {
        let d = MCConfig::default();
        let m = &self.mc;
        let cfg = MCConfig {
            step: m.step.unwrap_or(d.step),
            horizon: m.horizon.unwrap_or(d.horizon),
            paths: m.paths.unwrap_or(d.paths),
            seed: m.seed.unwrap_or(d.seed),
            antithetic: m.antithetic.unwrap_or(d.antithetic),
            blow_up_radius: m.blow_up_radius.unwrap_or(d.blow_up_radius),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

const ALL_METHODS: [Method; 5] = [Method::ChenWang, Method::Muckenhoupt, Method::Veysseire, Method::Rayleigh, Method::LogSobolev];

pub fn parse_method(s: &str) -> Result<Method, Failure> {
    ALL_METHODS
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Failure::config(format!("bounds.methods: unknown method `{s}` (expected chen-wang, muckenhoupt, veysseire, rayleigh or log-sobolev)")))
}

impl WeightBlock {
    pub fn spec(&self, at: &str) -> Result<WeightSpec, Failure> {
        let names: Vec<&str> = self.params.keys().map(String::as_str).collect();
        let e = parse(&self.expr, &names).map_err(|e| Failure::config(format!("{at}: {e}")))?;
        let form = match self.form {
            FormKind::Direct => WeightForm::Direct(e),
            FormKind::ExpW => WeightForm::ExpW(e),
            FormKind::ZForm => WeightForm::ZForm(e),
            FormKind::AForm => WeightForm::AForm(e),
        };
        let mut w = WeightSpec::new(form);
        for (k, r) in &self.params {
            check_range(at, k, *r)?;
            w = w.with_param(k, *r);
        }
        Ok(w)
    }
}

impl RayleighBlock {
    fn family(&self) -> Result<RayleighFamily, Failure> {
        let names: Vec<&str> = self.params.keys().map(String::as_str).collect();
        let e = parse(&self.family, &names).map_err(|e| Failure::config(format!("bounds.rayleigh: {e}")))?;
        let mut fixed = Params::new();
        let mut free = Vec::new();
        for (k, r) in &self.params {
            check_range("bounds.rayleigh", k, *r)?;
            match *r {
                ParamRange::Fixed(v) => {
                    fixed.insert(k.clone(), v);
                }
                ParamRange::Range(lo, hi) => free.push((k.clone(), lo, hi)),
            }
        }
        Ok(RayleighFamily {
            family: e.bind(&fixed),
            free,
        })
    }
}

fn check_range(at: &str, k: &str, r: ParamRange) -> Result<(), Failure> {
    let ok = match r {
        ParamRange::Fixed(v) => v.is_finite(),
        ParamRange::Range(lo, hi) => lo.is_finite() && hi.is_finite() && lo <= hi,
    };
    if ok {
        Ok(())
    } else {
        Err(Failure::config(format!("{at}: bad range for `{k}`: {r:?}")))
    }
}

/// Weight for a Monte-Carlo check; every parameter must be fixed.
pub fn check_weight(w: Option<&WeightBlock>, at: &str) -> Result<WeightSpec, Failure> {
    let Some(w) = w else {
        return Ok(WeightSpec::new(WeightForm::Direct(Expr::constant(1.0))));
    };
    let spec = w.spec(at)?;
    if let Some((k, ..)) = spec.free().first() {
        return Err(Failure::config(format!("{at}: Monte-Carlo checks need fixed weight parameters, `{k}` is a range")));
    }
    Ok(spec)
}

pub fn parse_phi(name: &str, p: Option<f64>) -> Result<PhiSpec, Failure> {
    let phi = match (name, p) {
        ("poincare", None) => PhiSpec::Poincare,
        ("log-sobolev", None) => PhiSpec::LogSobolev,
        ("beckner", Some(p)) => PhiSpec::Beckner(p),
        ("beckner", None) => return Err(Failure::config("mc.subintertwining: beckner needs `p`")),
        (_, Some(_)) => return Err(Failure::config(format!("mc.subintertwining: `p` only applies to beckner, not `{name}`"))),
        _ => {
            return Err(Failure::config(format!(
                "mc.subintertwining: unknown phi `{name}` (expected poincare, log-sobolev or beckner)"
            )))
        }
    };
    phi.validate()?;
    Ok(phi)
}

pub fn parse_test_fn(s: &str, at: &str) -> Result<Expr, Failure> {
    parse(s, &[]).map_err(|e| Failure::config(format!("{at}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["[model]\ngallery = \"ou\"\ncolour = 1", "[oracle]\nn = 10\nwidth = 3", "[bogus]\nx = 1"] {
            assert_eq!(RunConfig::parse(text).unwrap_err().code, 2, "{text}");
        }
    }

    #[test]
    fn custom_model_round_trip() {
        let c = RunConfig::parse(
            "[model]\nsigma = \"1\"\ntarget_potential = \"x^4/4-beta*x^2/2\"\nparams = { beta = 0.5 }\n\
             [[bounds.chen_wang]]\nform = \"z-form\"\nexpr = \"eps*x\"\nparams = { eps = [0.5, 2.0] }\n",
        )
        .unwrap();
        let m = c.build_model().unwrap();
        assert_eq!(m.du(1.0), 0.5);
        let plan = c.plan().unwrap();
        assert_eq!(plan.methods.len(), 5);
        assert_eq!(plan.chen_wang[0].free(), vec![("eps".to_string(), 0.5, 2.0)]);
    }

    #[test]
    fn gallery_excludes_custom_keys() {
        let c = RunConfig::parse("[model]\ngallery = \"ou\"\nsigma = \"2\"").unwrap();
        assert_eq!(c.build_model().unwrap_err().code, 2);
    }

    #[test]
    fn method_names() {
        assert_eq!(parse_method("chen-wang").unwrap(), Method::ChenWang);
        assert!(parse_method("chen_wang").is_err());
    }
}
