use proptest::prelude::*;
use whopt::expr::{Exponent, Expr, SmoothFn};

const N: usize = 3;

/// `1 + e^2`, a base that keeps fractional powers and quotients defined.
fn positive(e: Expr) -> Expr {
    Expr::add(vec![Expr::constant(1.0), Expr::pow(e, Exponent::from_integer(2))])
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-2.0f64..2.0).prop_map(Expr::constant),
        (0..N).prop_map(Expr::var),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::mul),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            inner.clone().prop_map(Expr::neg),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, positive(b))),
            (inner.clone(), 2i64..=3).prop_map(|(a, k)| Expr::pow(a, Exponent::from_integer(k))),
            (inner, prop::sample::select(vec![(1, 2), (3, 2), (5, 2), (-1, 2), (1, 3)]))
                .prop_map(|(a, (p, q))| Expr::pow(positive(a), Exponent::new(p, q))),
        ]
    })
}

/// Fourth-order central difference.
fn fd_partial(f: &Expr, x: &[f64], i: usize) -> f64 {
    let h = 1e-3 * (1.0 + x[i].abs());
    let at = |s: f64| {
        let mut y = x.to_vec();
        y[i] += s * h;
        f.eval(&y).unwrap()
    };
    (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(
        e in expr_strategy(),
        x in prop::collection::vec(-1.5f64..1.5, N),
    ) {
        let value = e.eval(&x).unwrap();
        prop_assume!(value.abs() < 1e4);
        let f = SmoothFn::new(e.clone(), N).unwrap();
        let g = f.gradient(&x).unwrap();
        for i in 0..N {
            let fd = fd_partial(&e, &x, i);
            let rel = (fd - g[i]).abs() / (1.0 + g[i].abs());
            prop_assert!(rel <= 1e-5, "e = {} x = {:?} i = {} exact = {} fd = {}", e, x, i, g[i], fd);
        }
    }

    #[test]
    fn hessian_is_symmetric(
        e in expr_strategy(),
        x in prop::collection::vec(-1.5f64..1.5, N),
    ) {
        let f = SmoothFn::new(e, N).unwrap();
        let h = f.hessian(&x).unwrap();
        for i in 0..N {
            for j in 0..N {
                let scale = 1.0 + h[i][j].abs().max(h[j][i].abs());
                prop_assert!((h[i][j] - h[j][i]).abs() <= 1e-12 * scale);
            }
        }
    }
}
