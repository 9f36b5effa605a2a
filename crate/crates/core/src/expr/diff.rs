use super::{Expr, Node};

/// d/dx of `e`. Total on every node kind; `abs` differentiates to `sign` and
/// `sign` to 0, so point masses at kinks are not represented. Products
/// simplify `sign(u)² = 1`, which makes derivatives of `|u|^p`, `p > 1`,
/// continuous at `u = 0`.
pub(super) fn differentiate(e: &Expr) -> Expr {
    match e.node() {
        Node::Const(_) | Node::Param(_) => Expr::constant(0.0),
        Node::X => Expr::constant(1.0),
        Node::Add(a, b) => differentiate(a) + differentiate(b),
        Node::Mul(a, b) => differentiate(a) * b.clone() + a.clone() * differentiate(b),
        Node::Div(a, b) => {
            (differentiate(a) * b.clone() - a.clone() * differentiate(b)) / b.powi(2)
        }
        Node::Pow(u, c) => {
            let du = differentiate(u);
            c.clone() * u.clone().pow(c.clone() - 1.0) * du
        }
        Node::Neg(a) => -differentiate(a),
        Node::Exp(a) => e.clone() * differentiate(a),
        Node::Log(a) => differentiate(a) / a.clone(),
        Node::Abs(a) => a.sign() * differentiate(a),
        Node::Sign(_) => Expr::constant(0.0),
        Node::Tanh(a) => (1.0 - e.powi(2)) * differentiate(a),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Params};
    use super::*;
    use proptest::prelude::*;

    fn eval(e: &Expr, x: f64) -> f64 {
        e.evaluate(x, &Params::new()).unwrap()
    }

    /// Richardson-extrapolated central difference, O(h^4).
    fn central_fd(e: &Expr, x: f64, h: f64) -> f64 {
        let d = |h: f64| (eval(e, x + h) - eval(e, x - h)) / (2.0 * h);
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    #[test]
    fn square() {
        let d = parse("x^2", &[]).unwrap().differentiate();
        assert_eq!(d, 2.0 * Expr::x());
    }

    #[test]
    fn second_derivative_of_monomials_is_exact() {
        for n in [2, 3, 4, 6] {
            let e = Expr::x().powi(n);
            let d2 = e.differentiate().differentiate().simplify();
            let nf = n as f64;
            let want = (nf * (nf - 1.0)) * Expr::x().powi(n - 2);
            assert_eq!(d2, want, "n = {n}: {d2}");
        }
    }

    #[test]
    fn power_potentials_are_continuous_at_the_origin() {
        for (p, want) in [(2.0, 1.0), (4.0, 0.0), (1.5, f64::INFINITY)] {
            let u = parse(&format!("abs(x)^{p}/{p}"), &[]).unwrap();
            let d2 = u.differentiate().differentiate().simplify();
            assert_eq!(eval(&d2, 0.0), want, "p = {p}: {d2}");
        }
    }

    #[test]
    fn quartic_potential_second_derivative() {
        let u = parse("abs(x)^4/4", &[]).unwrap();
        let d2 = u.differentiate().differentiate();
        for x in [-2.0, -0.5, 0.3, 1.7] {
            assert!((eval(&d2, x) - 3.0 * x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_weight_matches_finite_differences() {
        let c = 0.7;
        let w = parse(&format!("-x^4/8 + {c}*x^2"), &[]).unwrap();
        let a = w.exp();
        let da = a.differentiate();
        for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let fd = central_fd(&a, x, 1e-5);
            let exact = eval(&da, x);
            let want = eval(&a, x) * (-x.powi(3) / 2.0 + 2.0 * c * x);
            assert!((exact - want).abs() <= 1e-14 * (1.0 + want.abs()));
            assert!(
                (exact - fd).abs() <= 1e-6 * fd.abs().max(1e-300) || (exact - fd).abs() < 1e-9,
                "x = {x}: {exact} vs {fd}"
            );
        }
    }

    #[test]
    fn abs_and_sign_away_from_zero() {
        let e = parse("abs(x)", &[]).unwrap();
        let d = e.differentiate();
        assert_eq!(eval(&d, -3.0), -1.0);
        assert_eq!(eval(&d, 2.0), 1.0);
        assert_eq!(eval(&d, 0.0), 0.0);
        let s = parse("sign(x)", &[]).unwrap().differentiate();
        assert!(s.is_const(0.0));
    }

    #[test]
    fn parameter_exponent() {
        let e = parse("abs(x)^eps", &["eps"]).unwrap();
        let d = e.differentiate();
        let params = Params::from([("eps".to_string(), 0.75)]);
        let got = d.evaluate(2.0, &params).unwrap();
        assert!((got - 0.75 * 2f64.powf(-0.25)).abs() < 1e-14);
    }

    fn smooth_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::x()),
            (-2.0..2.0f64).prop_map(Expr::constant),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b.powi(2) + 1.0)),
                inner.clone().prop_map(|a| -a),
                inner.clone().prop_map(|a| a.tanh()),
                inner.clone().prop_map(|a| (a.tanh() * 0.5).exp()),
                inner.clone().prop_map(|a| (a.powi(2) + 1.0).log()),
                inner.clone().prop_map(|a| a.powi(2)),
                inner.prop_map(|a| a.powi(3)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn derivative_agrees_with_central_differences(
            e in smooth_expr(),
            xs in proptest::collection::vec(-2.0..2.0f64, 10),
        ) {
            let d = e.differentiate();
            for &x in &xs {
                let fd = central_fd(&e, x, 1e-3);
                let exact = eval(&d, x);
                prop_assert!(
                    (exact - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "e = {}, x = {}, exact {}, fd {}", e, x, exact, fd
                );
            }
        }

        #[test]
        fn simplify_preserves_value(e in smooth_expr(), x in -2.0..2.0f64) {
            let a = eval(&e, x);
            let b = eval(&e.simplify(), x);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn print_parse_round_trip(e in smooth_expr(), x in -2.0..2.0f64) {
            let back = parse(&e.to_string(), &[]).unwrap();
            let a = eval(&e, x);
            let b = eval(&back, x);
            prop_assert!(a == b || (a.is_nan() && b.is_nan()), "{} vs {}", e, back);
        }
    }
}
