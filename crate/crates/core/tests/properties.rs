use std::sync::Arc;

use lagflow_core::expr::{Expr, Func};
use lagflow_core::families::{make_instance, Evaluator, FamilyId, FamilyParams, GridBox, GridSpec};
use lagflow_core::invariants::structure_residuals;
use lagflow_core::jets::{BasePoint, CJet};
use lagflow_core::symmetry::{transform, GroupElement, GroupKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var),
        // The parser yields negative literals as negations.
        (0.0f64..3.0).prop_map(|c| Expr::Const((c * 8.0).round() / 8.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 1i32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            inner.clone().prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
            inner.clone().prop_map(|a| Expr::Call(Func::Cos, Box::new(a))),
            inner.prop_map(|a| Expr::Call(Func::Exp, Box::new(Expr::Mul(Box::new(Expr::Const(0.25)), Box::new(a))))),
        ]
    })
}

fn catalog() -> Vec<Arc<dyn Evaluator>> {
    FamilyId::ALL
        .iter()
        .map(|id| Arc::new(make_instance(FamilyParams::default_for(*id)).unwrap()) as Arc<dyn Evaluator>)
        .collect()
}

fn lerp(r: (f64, f64), u: f64) -> f64 {
    r.0 + (r.1 - r.0) * u
}

fn inner_point(b: &GridBox, u: [f64; 3]) -> [f64; 3] {
    // Stay away from the box edges so finite-difference stencils fit.
    let shrink = |r: (f64, f64)| {
        let m = 0.05 * (r.1 - r.0);
        (r.0 + m, r.1 - m)
    };
    [lerp(shrink(b.t), u[0]), lerp(shrink(b.xi), u[1]), lerp(shrink(b.c), u[2])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn expression_derivatives_match_differences(e in expr_tree(), eta in 0.5f64..1.5) {
        let Ok(d) = e.eval_d2(eta) else { return Ok(()) };
        prop_assume!(d.value.is_finite() && d.d1.is_finite() && d.d2.is_finite());
        prop_assume!(d.value.abs() < 1e6 && d.d2.abs() < 1e6);
        let h = 1e-4;
        let f = |x: f64| e.eval(x).unwrap();
        let fd1 = (f(eta + h) - f(eta - h)) / (2.0 * h);
        let fd2 = (f(eta + h) - 2.0 * d.value + f(eta - h)) / (h * h);
        let scale = 1.0 + d.value.abs() + d.d1.abs() + d.d2.abs();
        prop_assert!((fd1 - d.d1).abs() < 1e-6 * scale, "d1 {} vs {}", d.d1, fd1);
        prop_assert!((fd2 - d.d2).abs() < 1e-3 * scale, "d2 {} vs {}", d.d2, fd2);
    }

    #[test]
    fn printed_expressions_reparse(e in expr_tree()) {
        let back = Expr::parse(&e.to_string()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn jet_derivatives_match_differences(fam in 0usize..8, u in prop::array::uniform3(0.0f64..1.0)) {
        let eval = &catalog()[fam];
        let [t, xi, c] = inner_point(&eval.sample_box(), u);
        let jet = eval.jet(t, xi, c).unwrap();
        let (_, eta_c) = eval.eta_rate(c).unwrap();
        let h = 1e-5;
        let v = |t: f64, xi: f64, c: f64| eval.jet(t, xi, c).unwrap().value();
        let fd_t = (v(t + h, xi, c) - v(t - h, xi, c)) / (2.0 * h);
        let fd_xi = (v(t, xi + h, c) - v(t, xi - h, c)) / (2.0 * h);
        let fd_c = (v(t, xi, c + h) - v(t, xi, c - h)) / (2.0 * h);
        let z_t = jet.deriv(1, 0, 0).unwrap();
        let z_xi = jet.deriv(0, 1, 0).unwrap();
        let z_eta = jet.deriv(0, 0, 1).unwrap();
        let scale = 1.0 + jet.value().norm() + z_t.norm() + z_xi.norm() + z_eta.norm() * eta_c.abs();
        prop_assert!((fd_t - z_t).norm() < 1e-6 * scale);
        prop_assert!((fd_xi - z_xi).norm() < 1e-6 * scale);
        prop_assert!((fd_c - z_eta * eta_c).norm() < 1e-6 * scale);
        let z_tt = jet.deriv(2, 0, 0).unwrap();
        let fd_tt = (jet_t(eval.as_ref(), t + h, xi, c) - jet_t(eval.as_ref(), t - h, xi, c)) / (2.0 * h);
        prop_assert!((fd_tt - z_tt).norm() < 1e-6 * (scale + z_tt.norm()));
    }

    #[test]
    fn leibniz_rule_on_jets(
        a in prop::collection::vec(-2.0f64..2.0, 6),
        b in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let base = BasePoint::new(0.3, -0.2, 0.7);
        let (t, xi, eta) = (CJet::var_t(base), CJet::var_xi(base), CJet::var_eta(base));
        let mk = |c: &[f64]| {
            let lin = &(&t * Complex64::new(c[0], c[1]) + &xi * Complex64::new(c[2], 0.0)) + &(&eta * Complex64::new(c[3], c[4]));
            lin.exp().add_const(Complex64::new(c[5], 0.0))
        };
        let (f, g) = (mk(&a), mk(&b));
        let fg = f.checked_mul(&g).unwrap();
        for d in [CJet::d_t, CJet::d_xi, CJet::d_eta] {
            let lhs = d(&fg);
            let rhs = d(&f).checked_mul(&g).unwrap().checked_add(&f.checked_mul(&d(&g)).unwrap()).unwrap();
            for (i, j, k) in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (2, 0, 0)] {
                let (Ok(l), Ok(r)) = (lhs.deriv(i, j, k), rhs.deriv(i, j, k)) else { continue };
                prop_assert!((l - r).norm() < 1e-9 * (1.0 + l.norm()));
            }
        }
    }

    #[test]
    fn group_inverse_round_trip(fam in 0usize..8, kind in 0usize..11, a in -0.5f64..0.5, u in prop::array::uniform3(0.2f64..0.8)) {
        let kind = GroupKind::ALL.iter().copied().filter(|k| *k != GroupKind::X1).nth(kind).unwrap();
        let eval = catalog()[fam].clone();
        let g = GroupElement::new(kind, a);
        let Ok(fwd) = transform(eval.clone(), g.clone()) else { return Ok(()) };
        let Ok(back) = transform(Arc::new(fwd), g.inverse()) else { return Ok(()) };
        let [t, xi, c] = inner_point(&eval.sample_box(), u);
        let Ok(z) = back.jet(t, xi, c) else { return Ok(()) };
        let z0 = eval.jet(t, xi, c).unwrap();
        let scale = 1.0 + z0.value().norm();
        prop_assert!((z.value() - z0.value()).norm() < 1e-9 * scale);
        let (evo, jac) = structure_residuals(&z).unwrap();
        prop_assert!(evo < 1e-8 * scale && jac < 1e-8);
    }

    #[test]
    fn grid_points_cover_the_box(nt in 1usize..5, nxi in 1usize..5, nc in 1usize..5) {
        let b = GridBox { t: (-1.0, 1.0), xi: (0.0, 2.0), c: (0.5, 0.75) };
        let spec = GridSpec { nt, nxi, nc };
        let pts = b.points(spec);
        prop_assert_eq!(pts.len(), nt * nxi * nc);
        prop_assert!(pts.iter().all(|p| (-1.0..=1.0).contains(&p[0]) && (0.0..=2.0).contains(&p[1]) && (0.5..=0.75).contains(&p[2])));
        let parsed: GridSpec = format!("{nt},{nxi},{nc}").parse().unwrap();
        prop_assert_eq!(parsed, spec);
    }
}

fn jet_t(eval: &dyn Evaluator, t: f64, xi: f64, c: f64) -> Complex64 {
    eval.jet(t, xi, c).unwrap().deriv(1, 0, 0).unwrap()
}
