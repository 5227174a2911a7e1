use std::collections::BTreeMap;

use doa_cert::fixtures;
use doa_cert::system::{parse_expr, BinaryOp, Expr, UnaryOp};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..20).prop_map(|k| Expr::Const(k as f64 / 4.0)),
        (0usize..2).prop_map(Expr::Var),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (prop_oneof![Just(UnaryOp::Sin), Just(UnaryOp::Cos), Just(UnaryOp::Abs)], inner.clone())
                .prop_map(|(op, e)| Expr::unary(op, e)),
            (
                prop_oneof![Just(BinaryOp::Add), Just(BinaryOp::Sub), Just(BinaryOp::Mul)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (inner, 1u32..4).prop_map(|(a, k)| Expr::pow(a, Expr::Const(k as f64))),
        ]
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(e in expr()) {
        let back = parse_expr(&e.to_string(), 2, &BTreeMap::new()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn simplify_keeps_value(e in expr(), x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
        let s = e.simplify();
        prop_assert!(s.node_count() <= e.node_count());
        let (a, b) = (e.eval(&[x1, x2]), s.eval(&[x1, x2]));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(close(a, b), "{} vs {}: {} != {}", e, s, a, b);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient(e in expr(), x1 in -1.5..1.5f64, x2 in -1.5..1.5f64) {
        let h = 1e-6;
        for k in 0..2 {
            let d = e.derivative(k).eval(&[x1, x2]);
            let mut lo = [x1, x2];
            let mut hi = [x1, x2];
            lo[k] -= h;
            hi[k] += h;
            if let (Ok(d), Ok(a), Ok(b)) = (d, e.eval(&lo), e.eval(&hi)) {
                let fd = (b - a) / (2.0 * h);
                // abs() has a kink; only compare where the quotient is smooth.
                prop_assume!(!e.to_string().contains("abs"));
                prop_assert!((d - fd).abs() <= 1e-4 * d.abs().max(1.0), "{}: {} vs {}", e, d, fd);
            }
        }
    }
}

#[test]
fn fixture_jacobians_match_finite_differences() {
    for &(name, text) in &fixtures::ALL {
        let vf = doa_cert::parse_system(text).unwrap();
        let bounds = if name == "krasovskii" {
            vec![(0.4, 1.0); 2]
        } else {
            vec![(-1.0, 1.0); vf.dim()]
        };
        let err = vf.jacobian_check(&bounds, 500, 7);
        assert!(err <= 1e-6, "{name}: {err}");
    }
}

#[test]
fn fixtures_round_trip_through_display() {
    for &(name, text) in &fixtures::ALL {
        let vf = doa_cert::parse_system(text).unwrap();
        let again = doa_cert::parse_system(&vf.to_string()).unwrap();
        for x in [[0.3, -0.2], [0.7, 0.9], [-0.5, 0.1]] {
            let x = &x[..vf.dim().min(2)];
            if vf.dim() != x.len() {
                continue;
            }
            assert_eq!(vf.eval(x).unwrap(), again.eval(x).unwrap(), "{name}");
        }
    }
}
