use lagflow_cas::{rat, LPoly, RatFn, Var};
use num_rational::BigRational;
use proptest::prelude::*;

fn lpoly() -> impl Strategy<Value = LPoly> {
    prop::collection::vec(((0u32..4, 0u32..3, -3i32..4), -9i64..10, 1i64..5), 0..6).prop_map(|terms| {
        LPoly::from_terms(terms.into_iter().map(|(e, n, d)| (e, rat(n, d))))
    })
}

fn point() -> impl Strategy<Value = (BigRational, BigRational, BigRational)> {
    (-20i64..20, 1i64..7, -20i64..20, 1i64..7, 1i64..20, 1i64..7, any::<bool>()).prop_map(
        |(a, b, c, d, e, f, neg)| (rat(a, b), rat(c, d), rat(if neg { -e } else { e }, f)),
    )
}

fn nonzero_lpoly() -> impl Strategy<Value = LPoly> {
    lpoly().prop_filter("nonzero", |p| !p.is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leibniz_on_polynomials(a in lpoly(), b in lpoly()) {
        for v in [Var::T, Var::S, Var::J] {
            let lhs = (&a * &b).deriv(v);
            let rhs = &(&a.deriv(v) * &b) + &(&a * &b.deriv(v));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn derivatives_commute(a in lpoly()) {
        prop_assert_eq!(a.d_t().d_j(), a.d_j().d_t());
    }

    #[test]
    fn ring_laws(a in lpoly(), b in lpoly(), c in lpoly()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert!((&(&a - &b) + &b - a.clone()).is_zero());
    }

    #[test]
    fn exact_division_inverts_multiplication(a in lpoly(), b in nonzero_lpoly()) {
        prop_assert_eq!((&a * &b).div_exact(&b), Some(a));
    }

    #[test]
    fn rational_functions_agree_with_point_values(
        a in lpoly(), b in nonzero_lpoly(), c in lpoly(), d in nonzero_lpoly(), (t, s, j) in point()
    ) {
        let f = RatFn::from_poly(a.clone()).checked_div(&RatFn::from_poly(b.clone())).unwrap();
        let g = RatFn::from_poly(c.clone()).checked_div(&RatFn::from_poly(d.clone())).unwrap();
        let ev = |p: &LPoly| p.eval(&t, &s, &j).unwrap();
        let (bv, dv) = (ev(&b), ev(&d));
        prop_assume!(bv != BigRational::from_integer(0.into()) && dv != BigRational::from_integer(0.into()));
        let (fv, gv) = (ev(&a) / bv, ev(&c) / dv);
        prop_assert_eq!((&f + &g).eval(&t, &s, &j), Some(&fv + &gv));
        prop_assert_eq!((&f * &g).eval(&t, &s, &j), Some(&fv * &gv));
        prop_assert_eq!((&f - &g).eval(&t, &s, &j), Some(&fv - &gv));
    }

    #[test]
    fn leibniz_and_commutation_on_rational_functions(
        a in lpoly(), b in nonzero_lpoly(), c in lpoly()
    ) {
        let f = RatFn::from_poly(a).checked_div(&RatFn::from_poly(b)).unwrap();
        let g = RatFn::from_poly(c);
        for v in [Var::T, Var::J] {
            let lhs = (&f * &g).deriv(v);
            let rhs = &(&f.deriv(v) * &g) + &(&f * &g.deriv(v));
            prop_assert!(lhs.equals(&rhs));
        }
        prop_assert!(f.d_t().d_j().equals(&f.d_j().d_t()));
        prop_assert!((&f - &f).is_zero());
    }
}
