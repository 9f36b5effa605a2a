//! Closed-form constants for the power and Cauchy families.

use statrs::function::gamma::gamma;

/// Integrated lower bound for `U = |x|^α/α`, `α ∈ (1, 2)`:
/// `(α-1) α^{1-2/α} Γ(1/α) / Γ((3-α)/α)`.
pub fn power_integrated_lower(alpha: f64) -> f64 {
    (alpha - 1.0) * alpha.powf(1.0 - 2.0 / alpha) * gamma(1.0 / alpha) / gamma((3.0 - alpha) / alpha)
}

/// Relaxed Muckenhoupt lower bound for `U = |x|^α/α`: `1/(4 α^{2/α} Γ(1+1/α)²)`.
pub fn power_muckenhoupt_relaxed(alpha: f64) -> f64 {
    1.0 / (4.0 * alpha.powf(2.0 / alpha) * gamma(1.0 + 1.0 / alpha).powi(2))
}

/// Rayleigh quotient of `sign(x)|x|^ε` under `e^{-|x|^α/α}`:
/// `ε² α^{-2/α} Γ((2ε-1)/α) / Γ((2ε+1)/α)`, finite for `ε > 1/2`.
pub fn power_rayleigh(alpha: f64, eps: f64) -> f64 {
    eps * eps * alpha.powf(-2.0 / alpha) * gamma((2.0 * eps - 1.0) / alpha) / gamma((2.0 * eps + 1.0) / alpha)
}

/// Integrated lower bound for the Cauchy-type measure `(1+x²)^{-β}` with
/// `σ = √(1+x²)`: `(2β-1)(β-3/2)/(β-1)`.
pub fn cauchy_integrated_lower(beta: f64) -> f64 {
    (2.0 * beta - 1.0) * (beta - 1.5) / (beta - 1.0)
}

/// Root of `f` on `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    if flo == 0.0 {
        return Some(lo);
    }
    if flo.signum() == f(hi).signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Smallest `α ∈ (1, 2)` beyond which the integrated bound beats the relaxed
/// Muckenhoupt bound.
pub fn power_crossover() -> f64 {
    bisect(
        |a| power_integrated_lower(a) - power_muckenhoupt_relaxed(a),
        1.0 + 1e-9,
        2.0 - 1e-9,
        1e-12,
    )
    .expect("the two bounds cross on (1, 2)")
}
