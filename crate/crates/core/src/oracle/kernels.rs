//! Heat kernels of `∂_t = ∂_x²` on `[0, 1]` by the method of images.

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageKernels {
    /// Reflecting boundary: `Σ_k q(x, y+2k) + q(x, -y+2k)`.
    pub neumann: f64,
    /// Absorbing boundary: `Σ_k q(x, y+2k) - q(x, -y+2k)`.
    pub dirichlet: f64,
    /// `∂_x` of the Neumann kernel.
    pub neumann_dx: f64,
    /// Bound on the omitted terms `|k| > K` of either sum.
    pub tail_bound: f64,
}

/// `q_t(x, y) = e^{-(x-y)²/4t}/√(4πt)`.
fn q(x: f64, y: f64, t: f64) -> f64 {
    (-(x - y).powi(2) / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
}

fn check(x: f64, y: f64, t: f64, k: usize) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t must be positive, got {t}")));
    }
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Precondition(format!("x = {x} and y = {y} must lie in [0, 1]")));
    }
    if k == 0 {
        return Err(Error::Precondition("at least one image on each side is required".into()));
    }
    Ok(())
}

/// Image sums over `|k| ≤ K` at `(x, y, t)`.
pub fn image_kernels(x: f64, y: f64, t: f64, k: usize) -> Result<ImageKernels> {
    check(x, y, t, k)?;
    Ok(sums(x, y, t, k))
}

fn sums(x: f64, y: f64, t: f64, k: usize) -> ImageKernels {
    let (mut n, mut d, mut ndx) = (0.0, 0.0, 0.0);
    let kk = k as i64;
    for j in -kk..=kk {
        let shift = 2.0 * j as f64;
        let (a, b) = (q(x, y + shift, t), q(x, -y + shift, t));
        n += a + b;
        d += a - b;
        ndx -= (x - y - shift) / (2.0 * t) * a + (x + y - shift) / (2.0 * t) * b;
    }
    // Omitted images lie at distance ≥ 2K + 2j from x, j ≥ 0; four per level.
    let kf = k as f64;
    let tail = 4.0 * (-kf * kf / t).exp() / (1.0 - (-2.0 * kf / t).exp()) / (4.0 * std::f64::consts::PI * t).sqrt();
    ImageKernels {
        neumann: n,
        dirichlet: d,
        neumann_dx: ndx,
        tail_bound: tail,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Neumann,
    Dirichlet,
    NeumannDx,
}

/// `∫_0^1 p_t(x, y) f(y) dy` for the chosen kernel.
pub fn apply_kernel(f: impl Fn(f64) -> f64, x: f64, t: f64, k: usize, kind: KernelKind) -> Result<f64> {
    check(x, 0.0, t, k)?;
    let cfg = QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        ..QuadConfig::default()
    };
    let r = integrate(
        |y| {
            let p = sums(x, y, t, k);
            f(y) * match kind {
                KernelKind::Neumann => p.neumann,
                KernelKind::Dirichlet => p.dirichlet,
                KernelKind::NeumannDx => p.neumann_dx,
            }
        },
        0.0,
        1.0,
        &cfg,
    )?;
    Ok(r.require_converged()?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn neumann_kernel_is_markov() {
        let mass = apply_kernel(|_| 1.0, 0.3, 0.1, 20, KernelKind::Neumann).unwrap();
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
        let killed = apply_kernel(|_| 1.0, 0.3, 0.1, 20, KernelKind::Dirichlet).unwrap();
        assert!(killed < 1.0 && killed > 0.0);
    }

    #[test]
    fn dirichlet_kernel_vanishes_on_the_boundary() {
        for x in [0.1, 0.5, 0.9] {
            assert!(image_kernels(x, 0.0, 0.2, 20).unwrap().dirichlet.abs() < 1e-12);
            assert!(image_kernels(x, 1.0, 0.2, 20).unwrap().dirichlet.abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_commutes_with_the_boundary_swap() {
        let (x, t) = (0.3, 0.05);
        let lhs = apply_kernel(|y| (PI * y).cos(), x, t, 20, KernelKind::NeumannDx).unwrap();
        let rhs = apply_kernel(|y| -PI * (PI * y).sin(), x, t, 20, KernelKind::Dirichlet).unwrap();
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
        let exact = -PI * (-PI * PI * t).exp() * (PI * x).sin();
        assert!((lhs - exact).abs() < 1e-8);
    }

    #[test]
    fn tail_is_geometric() {
        for t in [0.01, 0.1, 1.0] {
            let a = image_kernels(0.4, 0.7, t, 10).unwrap();
            let b = image_kernels(0.4, 0.7, t, 15).unwrap();
            assert!((a.neumann - b.neumann).abs() < 1e-12, "t = {t}");
            assert!((a.neumann - b.neumann).abs() <= a.tail_bound);
        }
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(image_kernels(0.5, 0.5, 0.0, 3).is_err());
        assert!(image_kernels(1.5, 0.5, 0.1, 3).is_err());
    }
}
