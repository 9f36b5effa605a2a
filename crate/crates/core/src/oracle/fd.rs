//! Flux-form finite differences in the intrinsic coordinate `s = ∫ dx/σ`.
//!
//! In `s` the Dirichlet form is `∫ f_s² e^{-U}/σ ds` and the measure is
//! `e^{-U}/σ ds`, so both weights are the same function `w(s)`. Cells are
//! uniform in `s`; all weights are kept as logarithms so that far tails never
//! underflow.

use crate::error::{Error, Result};
use crate::model::{Boundary, DiffusionModel};
use crate::quad::{integrate, QuadConfig};

/// The generalized eigenproblem `A g = λ M g` for `-L` on a truncated domain.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub boundary: Boundary,
    /// Cell width in `s`.
    pub ds: f64,
    /// Cell centers in `s` and `x`.
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    /// `log(w(s_i) Δs)`, the diagonal of `M`.
    pub log_mass: Vec<f64>,
    /// `log(w(s_{i+1/2})/Δs)` on the `n + 1` faces, boundary faces included.
    pub log_flux: Vec<f64>,
}

impl Pencil {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Flux weight of face `j` as it enters the stiffness matrix; zero on a
    /// Neumann boundary face, doubled on a Dirichlet one (mirrored ghost).
    fn face_log(&self, j: usize) -> Option<f64> {
        let n = self.len();
        if j == 0 || j == n {
            match self.boundary {
                Boundary::Dirichlet => Some(self.log_flux[j] + std::f64::consts::LN_2),
                _ => None,
            }
        } else {
            Some(self.log_flux[j])
        }
    }

    /// `A_ii / M_i` and `A_{i,i+1} / M_i`, `A_{i+1,i} / M_{i+1}`: the row-scaled
    /// operator `M^{-1} A` as (lower, diag, upper).
    pub fn row_scaled(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut diag = vec![0.0; n];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut upper = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            for j in [i, i + 1] {
                if let Some(f) = self.face_log(j) {
                    diag[i] += (f - self.log_mass[i]).exp();
                }
            }
            if i + 1 < n {
                upper[i] = -(self.log_flux[i + 1] - self.log_mass[i]).exp();
                lower[i] = -(self.log_flux[i + 1] - self.log_mass[i + 1]).exp();
            }
        }
        (lower, diag, upper)
    }

    /// `M^{-1/2} A M^{-1/2}` as (diag, off-diagonal).
    pub fn symmetric(&self) -> (Vec<f64>, Vec<f64>) {
        let (_, diag, _) = self.row_scaled();
        let off = (0..self.len().saturating_sub(1))
            .map(|i| -(self.log_flux[i + 1] - 0.5 * (self.log_mass[i] + self.log_mass[i + 1])).exp())
            .collect();
        (diag, off)
    }
}

/// `s(x)` relative to the domain anchor, for the ends of the domain.
fn s_extent(m: &DiffusionModel) -> Result<(f64, f64)> {
    let (lo, hi) = m.domain().bounds();
    let c = m.domain().anchor();
    if m.has_unit_sigma() {
        return Ok((lo - c, hi - c));
    }
    let cfg = QuadConfig::default();
    let side = |a: f64, b: f64| -> Result<f64> {
        let r = integrate(|y| 1.0 / m.sigma(y), a, b, &cfg)?;
        // A divergent ∫1/σ means the end is infinitely far in `s`.
        Ok(if r.converged && r.value.is_finite() { r.value } else { f64::INFINITY })
    };
    let left = if lo < c { -side(lo, c)? } else { 0.0 };
    let right = if hi > c { side(c, hi)? } else { 0.0 };
    Ok((left, right))
}

/// `x(s)` for ascending `s`, by RK4 on `dx/ds = σ(x)` from the anchor.
pub(crate) fn map_to_x(m: &DiffusionModel, s: &[f64]) -> Vec<f64> {
    let c = m.domain().anchor();
    let (lo, hi) = m.domain().bounds();
    if m.has_unit_sigma() {
        return s.iter().map(|&v| (c + v).clamp(lo, hi)).collect();
    }
    let rk4 = |x: f64, h: f64| {
        let k1 = m.sigma(x);
        let k2 = m.sigma((x + 0.5 * h * k1).clamp(lo, hi));
        let k3 = m.sigma((x + 0.5 * h * k2).clamp(lo, hi));
        let k4 = m.sigma((x + h * k3).clamp(lo, hi));
        (x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(lo, hi)
    };
    let march = |x: f64, from: f64, to: f64| {
        let steps = ((to - from).abs() / 2e-3).ceil().max(1.0) as usize;
        let h = (to - from) / steps as f64;
        (0..steps).fold(x, |x, _| rk4(x, h))
    };
    let mut out = vec![0.0; s.len()];
    let split = s.partition_point(|&v| v < 0.0);
    let (mut x, mut at) = (c, 0.0);
    for i in split..s.len() {
        x = march(x, at, s[i]);
        at = s[i];
        out[i] = x;
    }
    let (mut x, mut at) = (c, 0.0);
    for i in (0..split).rev() {
        x = march(x, at, s[i]);
        at = s[i];
        out[i] = x;
    }
    out
}

/// `log w = -U - log σ` at `x`.
fn log_weight(m: &DiffusionModel, x: f64) -> f64 {
    -m.potential(x) - m.sigma(x).ln()
}

/// The `s`-interval `[-r, r]` clipped to the domain.
pub(crate) fn s_window(m: &DiffusionModel, r: f64) -> Result<(f64, f64)> {
    let (a, b) = s_extent(m)?;
    Ok((a.max(-r), b.min(r)))
}

/// Builds the pencil on `n` uniform cells of the `s`-window of radius `r`.
pub fn discretize(m: &DiffusionModel, r: f64, n: usize, bc: Boundary) -> Result<Pencil> {
    if n < 64 {
        return Err(Error::Config(format!("at least 64 cells are required, got {n}")));
    }
    if bc == Boundary::None {
        return Err(Error::Config("the eigensolver needs a Neumann or Dirichlet boundary".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {r}")));
    }
    let (a, b) = s_window(m, r)?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Config(format!("empty or unbounded window [{a}, {b}]")));
    }
    let ds = (b - a) / n as f64;
    // Faces at even, centers at odd indices.
    let half: Vec<f64> = (0..=2 * n).map(|k| a + 0.5 * ds * k as f64).collect();
    let xs = map_to_x(m, &half);
    let lw: Vec<f64> = xs.iter().map(|&x| log_weight(m, x)).collect();
    if let Some(k) = lw.iter().position(|v| !v.is_finite()) {
        return Err(Error::Underflow { x: xs[k] });
    }
    let ln_ds = ds.ln();
    Ok(Pencil {
        boundary: bc,
        ds,
        s: (0..n).map(|i| half[2 * i + 1]).collect(),
        x: (0..n).map(|i| xs[2 * i + 1]).collect(),
        log_mass: (0..n).map(|i| lw[2 * i + 1] + ln_ds).collect(),
        log_flux: (0..=n).map(|j| lw[2 * j] - ln_ds).collect(),
    })
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `mu`.
pub(crate) fn sturm_count(d: &[f64], e: &[f64], mu: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let prev = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - mu - prev;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + mu.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) by bisection to working precision.
pub(crate) fn bisect_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let n = d.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = 1e-12 * (hi - lo).abs().max(1.0);
    let (mut lo, mut hi) = (lo - pad, hi + pad);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves a general tridiagonal system by Gaussian elimination with partial
/// pivoting; exact zero pivots are replaced by a tiny multiple of the scale.
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (mut dl, mut d, mut du, mut b) = (lower.to_vec(), diag.to_vec(), upper.to_vec(), rhs.to_vec());
    let scale = d.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    let guard = |v: f64| if v == 0.0 { f64::EPSILON * scale } else { v };
    // `du2[i]` is the fill-in on the second superdiagonal.
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            d[i] = guard(d[i]);
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let t = d[i + 1];
            d[i + 1] = du[i] - f * t;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            du[i] = t;
            b.swap(i, i + 1);
            b[i + 1] -= f * b[i];
        }
        dl[i] = 0.0;
    }
    d[n - 1] = guard(d[n - 1]);
    b[n - 1] /= d[n - 1];
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    b
}

/// Eigenvector of `M^{-1} A` for the eigenvalue `lambda`, by inverse iteration
/// from `start`; normalized to unit max norm.
pub(crate) fn inverse_iteration(p: &Pencil, lambda: f64, start: Vec<f64>) -> Vec<f64> {
    let (lower, diag, upper) = p.row_scaled();
    let shifted: Vec<f64> = diag.iter().map(|v| v - lambda).collect();
    let mut g = start;
    for _ in 0..4 {
        g = solve_tridiagonal(&lower, &shifted, &upper, &g);
        let norm = g.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        g.iter_mut().for_each(|v| *v /= norm);
    }
    g
}

/// `u(t)` for `∂_t u = L u`, `u(0) = f`, by Crank-Nicolson on the pencil.
pub fn heat_solve(p: &Pencil, f: impl Fn(f64) -> f64, t: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t > 0.0) || steps == 0 {
        return Err(Error::Config(format!("heat solve needs t > 0 and steps ≥ 1 (t = {t}, steps = {steps})")));
    }
    let dt = t / steps as f64;
    let (lower, diag, upper) = p.row_scaled();
    let n = p.len();
    let l: Vec<f64> = lower.iter().map(|v| 0.5 * dt * v).collect();
    let u: Vec<f64> = upper.iter().map(|v| 0.5 * dt * v).collect();
    let d: Vec<f64> = diag.iter().map(|v| 1.0 + 0.5 * dt * v).collect();
    let mut v: Vec<f64> = p.x.iter().map(|&x| f(x)).collect();
    for _ in 0..steps {
        // (I - dt/2 N) v.
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = (2.0 - d[i]) * v[i];
                if i > 0 {
                    r -= l[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    r -= u[i] * v[i + 1];
                }
                r
            })
            .collect();
        v = solve_tridiagonal(&l, &d, &u, &rhs);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Params};
    use crate::model::{build_model, build_model_on, DriftSpec, Domain};

    fn brownian_unit_interval() -> DiffusionModel {
        let e = |s: &str| parse(s, &[]).unwrap();
        build_model_on(e("1"), DriftSpec::Drift(e("0")), &Params::new(), Domain::Interval(0.0, 1.0), Boundary::Neumann).unwrap()
    }

    #[test]
    fn tridiagonal_solver_matches_dense_elimination() {
        let lower = [1.0, -2.0, 0.5, 3.0];
        let diag = [1e-3, 4.0, -1.0, 2.0, 5.0];
        let upper = [2.0, 1.0, -3.0, 0.25];
        let x = [1.0, -1.0, 2.0, 0.5, -0.25];
        let rhs: Vec<f64> = (0..5)
            .map(|i| {
                diag[i] * x[i] + if i > 0 { lower[i - 1] * x[i - 1] } else { 0.0 } + if i < 4 { upper[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let got = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        for (g, w) in got.iter().zip(x) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn sturm_count_of_a_diagonal_matrix() {
        let d = [3.0, 1.0, 2.0];
        let e = [0.0, 0.0];
        assert_eq!(sturm_count(&d, &e, 1.5), 1);
        assert_eq!(sturm_count(&d, &e, 10.0), 3);
        assert!((bisect_eigenvalue(&d, &e, 1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn neumann_laplacian_on_the_unit_interval() {
        let p = discretize(&brownian_unit_interval(), 1.0, 1000, Boundary::Neumann).unwrap();
        let (d, e) = p.symmetric();
        let l0 = bisect_eigenvalue(&d, &e, 0);
        let l1 = bisect_eigenvalue(&d, &e, 1);
        assert!(l0.abs() < 1e-8, "{l0}");
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((l1 - pi2).abs() < 1e-4, "{l1}");
    }

    #[test]
    fn symmetric_form_is_exactly_symmetric() {
        let e = |s: &str| parse(s, &[]).unwrap();
        let m = build_model(e("sqrt(1+x^2)"), DriftSpec::TargetPotential(e("2.5*log(1+x^2)")), &Params::new()).unwrap();
        let p = discretize(&m, 6.0, 256, Boundary::Neumann).unwrap();
        let (lower, diag, upper) = p.row_scaled();
        let (d, off) = p.symmetric();
        assert_eq!(d, diag);
        // Similarity by M^{1/2} maps the row-scaled form onto the symmetric one.
        for i in 0..off.len() {
            let up = upper[i] * (0.5 * (p.log_mass[i] - p.log_mass[i + 1])).exp();
            let lo = lower[i] * (0.5 * (p.log_mass[i + 1] - p.log_mass[i])).exp();
            assert!((up - off[i]).abs() <= 1e-12 * off[i].abs());
            assert!((lo - off[i]).abs() <= 1e-12 * off[i].abs());
        }
    }

    #[test]
    fn intrinsic_coordinate_for_linear_growth() {
        // σ = √(1+x²) gives x = sinh(s).
        let e = |s: &str| parse(s, &[]).unwrap();
        let m = build_model(e("sqrt(1+x^2)"), DriftSpec::Drift(e("-x")), &Params::new()).unwrap();
        let s = [-3.0, -0.5, 0.0, 1.0, 4.0];
        for (x, s) in map_to_x(&m, &s).iter().zip(s) {
            assert!((x - s.sinh()).abs() < 1e-9 * (1.0 + x.abs()), "{x} vs {}", s.sinh());
        }
    }

    #[test]
    fn dirichlet_laplacian_on_the_unit_interval() {
        let p = discretize(&brownian_unit_interval(), 1.0, 1000, Boundary::Dirichlet).unwrap();
        let (d, e) = p.symmetric();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((bisect_eigenvalue(&d, &e, 0) - pi2).abs() < 1e-3);
        assert!((bisect_eigenvalue(&d, &e, 1) - 4.0 * pi2).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = brownian_unit_interval();
        assert!(matches!(discretize(&m, 1.0, 32, Boundary::Neumann), Err(Error::Config(_))));
        assert!(matches!(discretize(&m, 1.0, 128, Boundary::None), Err(Error::Config(_))));
    }
}
