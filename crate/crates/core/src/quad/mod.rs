//! Adaptive Gauss-Kronrod integration on finite and infinite intervals, and
//! the measure functionals built on it.

mod measure;

pub(crate) use measure::expectation;
pub use measure::{entropy, functionals, median, phi_entropy, validate_phi_class, Functionals, PhiEntropy, PhiSpec, Value};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Truncation radius for infinite ends.
    pub truncation_r: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            truncation_r: 12.0,
            max_subdivisions: 2000,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.truncation_r > 0.0
            && self.truncation_r.is_finite()
            && self.max_subdivisions > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid quadrature settings {self:?}")))
        }
    }

    pub fn tightened(&self, factor: f64) -> QuadConfig {
        QuadConfig {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_subdivisions: self.max_subdivisions * 4,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    /// Includes the tail estimate.
    pub value: f64,
    pub err_est: f64,
    pub converged: bool,
    pub subdivisions: usize,
    /// Contribution credited beyond the truncation radius.
    pub tail: f64,
}

impl QuadResult {
    pub fn require_converged(self) -> Result<QuadResult> {
        if self.converged && self.value.is_finite() {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                value: self.value,
                err: self.err_est,
            })
        }
    }

    fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            err_est: self.err_est + other.err_est,
            converged: self.converged && other.converged,
            subdivisions: self.subdivisions + other.subdivisions,
            tail: self.tail + other.tail,
        }
    }

    fn negate(self) -> QuadResult {
        QuadResult {
            value: -self.value,
            tail: -self.tail,
            ..self
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn checked(f: &impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NanIntegrand { x })
    }
}

/// One 15-point Kronrod panel with the embedded 7-point Gauss error estimate.
pub fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = checked(f, c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kron.abs();
    let mut fv = [(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = checked(f, c - dx)?;
        let f2 = checked(f, c + dx)?;
        fv[j] = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kron * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let hh = h.abs();
    let value = kron * h;
    let res_abs = res_abs * hh;
    let res_asc = res_asc * hh;
    let mut err = ((kron - gauss) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

/// Globally adaptive bisection on a finite interval, starting from the panels
/// delimited by `breaks` (points outside `(a, b)` are ignored).
fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], cfg: &QuadConfig) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            err_est: 0.0,
            converged: true,
            subdivisions: 0,
            tail: 0.0,
        });
    }
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in cuts.windows(2) {
        let (value, err) = gk15(f, w[0], w[1])?;
        total += value;
        total_err += err;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }
    let mut subdivisions = 0;
    let mut stuck = Vec::new();
    let tol = |v: f64| cfg.abs_tol.max(cfg.rel_tol * v.abs());
    while total_err > tol(total) && subdivisions < cfg.max_subdivisions {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b || (p.b - p.a) < 4.0 * f64::EPSILON * p.a.abs().max(p.b.abs()) {
            // Cannot bisect further at double precision.
            stuck.push(p);
            continue;
        }
        let (v1, e1) = gk15(f, p.a, m)?;
        let (v2, e2) = gk15(f, m, p.b)?;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
        subdivisions += 1;
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(stuck);
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
    let errs: Vec<f64> = panels.iter().map(|p| p.err).collect();
    let value = crate::par::pairwise_sum(&values);
    let err_est = crate::par::pairwise_sum(&errs);
    Ok(QuadResult {
        value,
        err_est,
        converged: err_est <= tol(value),
        subdivisions,
        tail: 0.0,
    })
}

/// `∫_a^b f`. Either end may be infinite. The origin is always a panel break.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_with_breaks(f, a, b, &[], cfg)
}

/// Like [`integrate`] with extra initial panel breaks.
pub fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::Precondition("integration limits are NaN".into()));
    }
    if a > b {
        return Ok(integrate_with_breaks(f, b, a, breaks, cfg)?.negate());
    }
    let mut pts = breaks.to_vec();
    pts.push(0.0);
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, &pts, cfg),
        (true, false) => upper_tail(&f, a, &pts, cfg),
        (false, true) => {
            let g = |y: f64| f(-y);
            let mirrored: Vec<f64> = pts.iter().map(|p| -p).collect();
            upper_tail(&g, -b, &mirrored, cfg)
        }
        (false, false) => {
            let split = 0.0;
            let right = upper_tail(&f, split, &pts, cfg)?;
            let g = |y: f64| f(-y);
            let mirrored: Vec<f64> = pts.iter().map(|p| -p).collect();
            let left = upper_tail(&g, -split, &mirrored, cfg)?;
            Ok(left.combine(right))
        }
    }
}

/// `∫_a^∞ f`: adaptive on `[a, T]` plus an exponential tail fit, or a
/// `x = a + tan θ` map when the tail decays too slowly for the fit.
fn upper_tail(f: &impl Fn(f64) -> f64, a: f64, breaks: &[f64], cfg: &QuadConfig) -> Result<QuadResult> {
    let r = cfg.truncation_r;
    let t = if a < r { r } else { a + r };
    match fit_tail(f, t) {
        Some(tail) => {
            let body = adaptive(f, a, t, breaks, cfg)?;
            let tol = cfg.abs_tol.max(cfg.rel_tol * body.value.abs());
            if tail.abs() <= 1e-3 * body.value.abs().max(tol) {
                return Ok(QuadResult {
                    value: body.value + tail,
                    tail,
                    ..body
                });
            }
            tan_map(f, a, breaks, cfg)
        }
        None => tan_map(f, a, breaks, cfg),
    }
}

/// Tail beyond `t` from a fitted exponential envelope, or `None` if the decay
/// looks sub-exponential.
fn fit_tail(f: &impl Fn(f64) -> f64, t: f64) -> Option<f64> {
    let f0 = f(t);
    if f0 == 0.0 {
        return Some(0.0);
    }
    let f1 = f(t + 1.0);
    if !f0.is_finite() || !f1.is_finite() {
        return None;
    }
    if f1 == 0.0 || (f1 / f0).abs() < 1e-300 {
        return Some(0.0);
    }
    let k1 = (f0.abs() / f1.abs()).ln();
    if k1 <= 0.0 || f1.signum() != f0.signum() {
        return None;
    }
    let g0 = f(2.0 * t);
    let g1 = f(2.0 * t + 1.0);
    if g0 != 0.0 && g1 != 0.0 && g0.is_finite() && g1.is_finite() {
        let k2 = (g0.abs() / g1.abs()).ln();
        if k2 < 0.8 * k1 {
            return None;
        }
    }
    Some(f0 / k1)
}

fn tan_map(f: &impl Fn(f64) -> f64, a: f64, breaks: &[f64], cfg: &QuadConfig) -> Result<QuadResult> {
    let g = |th: f64| {
        let x = a + th.tan();
        let fx = f(x);
        if fx == 0.0 {
            return 0.0;
        }
        let c = th.cos();
        fx / (c * c)
    };
    let mapped: Vec<f64> = breaks.iter().filter(|&&p| p > a).map(|&p| (p - a).atan()).collect();
    adaptive(&g, 0.0, std::f64::consts::FRAC_PI_2, &mapped, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn gaussian_on_the_line() {
        let r = integrate(|x| (-x * x / 2.0).exp(), f64::NEG_INFINITY, f64::INFINITY, &cfg()).unwrap();
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-10, "{r:?}");
        assert!(r.converged);
    }

    #[test]
    fn cauchy_type_normalization() {
        // ∫(1+x²)^{-2} = Γ(1/2)Γ(3/2)/Γ(2) = π/2.
        let r = integrate(|x| (1.0 + x * x).powi(-2), f64::NEG_INFINITY, f64::INFINITY, &cfg()).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn unit_interval() {
        let r = integrate(|x| x, 0.0, 1.0, &cfg()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn reversed_limits_negate() {
        let r = integrate(|x| x * x, 1.0, 0.0, &cfg()).unwrap();
        assert!((r.value + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_tail_is_credited() {
        let r = integrate(|x: f64| (-x.abs()).exp(), f64::NEG_INFINITY, f64::INFINITY, &cfg()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
        assert!(r.tail > 0.0);
    }

    #[test]
    fn semi_infinite_with_shifted_start() {
        let r = integrate(|x: f64| (-(x - 20.0)).exp(), 20.0, f64::INFINITY, &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{r:?}");
        let r = integrate(|x: f64| 1.0 / (1.0 + x * x), f64::NEG_INFINITY, 0.0, &cfg()).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &cfg()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn kink_at_origin() {
        let r = integrate(|x: f64| x.abs(), -1.0, SQRT_2, &cfg()).unwrap();
        assert!((r.value - 1.5).abs() < 1e-14);
    }

    #[test]
    fn nan_is_an_error() {
        let r = integrate(|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &cfg());
        assert!(matches!(r, Err(Error::NanIntegrand { .. })));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let tight = QuadConfig {
            max_subdivisions: 3,
            ..cfg()
        };
        let r = integrate(|x: f64| (1.0 / x).sin() * x.powf(-0.7), 0.0, 1.0, &tight).unwrap();
        assert!(!r.converged);
        assert!(r.require_converged().is_err());
    }

    #[test]
    fn lebesgue_mass_on_the_line_does_not_converge() {
        let r = integrate(|_| 1.0, f64::NEG_INFINITY, f64::INFINITY, &cfg()).unwrap();
        assert!(!r.converged || !r.value.is_finite() || r.value > 1e10);
    }

    #[test]
    fn linearity_within_error_estimates() {
        let f = |x: f64| (-x * x).exp() * (1.0 + x.sin());
        let g = |x: f64| 1.0 / (1.0 + x.powi(4));
        let c = cfg();
        let i_f = integrate(f, f64::NEG_INFINITY, f64::INFINITY, &c).unwrap();
        let i_g = integrate(g, f64::NEG_INFINITY, f64::INFINITY, &c).unwrap();
        let i_fg = integrate(|x| f(x) + g(x), f64::NEG_INFINITY, f64::INFINITY, &c).unwrap();
        let slack = i_f.err_est + i_g.err_est + i_fg.err_est + 1e-14;
        assert!((i_fg.value - i_f.value - i_g.value).abs() <= slack);
    }
}
