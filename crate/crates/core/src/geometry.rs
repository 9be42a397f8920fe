//! Curvature of the isobars `η = const` and the shape-preservation test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{linspace, Evaluator, SolutionInstance};
use crate::jets::{CJet, Complex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub kappa: f64,
    pub kappa_t: f64,
    pub kappa_xi: f64,
    pub kappa_s: f64,
    /// `s_ξ = |z_ξ|`.
    pub arc_rate: f64,
    pub shape_residual: f64,
}

fn re(c: Complex) -> f64 {
    c.re
}

/// `κ = (z_tt z̄_tttt + z̄_tt z_tttt) / (2 (z_tt z̄_tt)^{3/2})` as a jet.
pub fn curvature_jet(z: &CJet) -> Result<CJet> {
    let z2 = z.d_t_n(2);
    let z4 = z2.d_t_n(2);
    let speed2 = &z2 * &z2.conj();
    if speed2.value().re == 0.0 {
        return Err(Error::VanishingZtt);
    }
    let num = &z2 * &z4.conj() + &z2.conj() * &z4;
    let den = speed2.powf(-1.5)?;
    Ok(&num * &den * 0.5)
}

pub fn curvature(z: &CJet) -> Result<CurvatureSample> {
    let kappa = curvature_jet(z)?;
    let zx = z.d_xi();
    let arc = (&zx * &zx.conj()).powf(0.5)?;
    let k_xi = kappa.d_xi();
    let q = k_xi.checked_div(&arc)?;
    let shape = kappa.deriv(1, 0, 0)? * q.deriv(0, 1, 0)? - k_xi.deriv(0, 0, 0)? * q.deriv(1, 0, 0)?;
    let arc_rate = re(arc.value());
    let kappa_xi = re(k_xi.value());
    Ok(CurvatureSample {
        kappa: re(kappa.value()),
        kappa_t: re(kappa.deriv(1, 0, 0)?),
        kappa_xi,
        kappa_s: kappa_xi / arc_rate,
        arc_rate,
        shape_residual: shape.norm(),
    })
}

/// Curvature of `ξ ↦ (x, y)` from the planar determinant formula.
pub fn curvature_planar(z: &CJet) -> Result<f64> {
    let (d1, d2) = (z.deriv(0, 1, 0)?, z.deriv(0, 2, 0)?);
    let speed2 = d1.norm_sqr();
    if speed2 == 0.0 {
        return Err(Error::VanishingZtt);
    }
    Ok((d1.re * d2.im - d1.im * d2.re) / speed2.powf(1.5))
}

/// `|κ_s + 2kκ_t/|z_tt||` on C families; `max(|κ_s|, |κ_t|)` on A and B.
pub fn wall_relation_residual(inst: &SolutionInstance, t: f64, xi: f64, c: f64) -> Result<f64> {
    let z = inst.eval_jet(t, xi, c)?;
    let cs = curvature(&z)?;
    match inst.k_m() {
        Some((k, _)) => {
            let ztt = z.deriv(2, 0, 0)?.norm();
            Ok((cs.kappa_s + 2.0 * k * cs.kappa_t / ztt).abs())
        }
        None => Ok(cs.kappa_s.abs().max(cs.kappa_t.abs())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySample {
    pub x: f64,
    pub y: f64,
    pub kappa: f64,
    pub s: f64,
}

/// Samples the curve `η = const` at time `t` for `ξ` in `xi_range`, with
/// cumulative arc length by the trapezoid rule on `|z_ξ|`.
pub fn boundary_curve(
    inst: &SolutionInstance,
    eta: f64,
    t: f64,
    xi_range: (f64, f64),
    n: usize,
) -> Result<Vec<BoundarySample>> {
    if n < 2 {
        return Err(Error::Invalid(format!("boundary needs at least 2 samples (got {n})")));
    }
    let c = inst.sigma_of_eta(eta)?;
    let mut out: Vec<BoundarySample> = Vec::with_capacity(n);
    let mut prev: Option<(f64, f64)> = None;
    let mut s = 0.0;
    for xi in linspace(xi_range, n) {
        let z = inst.jet(t, xi, c)?;
        let kappa = curvature(&z)?;
        if let Some((xi0, rate0)) = prev {
            s += 0.5 * (xi - xi0) * (rate0 + kappa.arc_rate);
        }
        prev = Some((xi, kappa.arc_rate));
        let v = z.value();
        out.push(BoundarySample { x: v.re, y: v.im, kappa: kappa.kappa, s });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::families::{make_instance, FamilyId, FamilyParams, GridSpec};
    use crate::jets::I;

    fn default(id: FamilyId) -> SolutionInstance {
        make_instance(FamilyParams::default_for(id)).unwrap()
    }

    #[test]
    fn straight_isobars() {
        for id in [FamilyId::A, FamilyId::C1] {
            let i = default(id);
            for [t, xi, c] in i.sample_box().points(GridSpec { nt: 3, nxi: 3, nc: 3 }) {
                let k = curvature(&i.eval_jet(t, xi, c).unwrap()).unwrap();
                assert!(k.kappa.abs() < 1e-14, "{id}: {k:?}");
            }
        }
    }

    #[test]
    fn family_b_circles() {
        let i = make_instance(FamilyParams::B { n: Expr::parse("1").unwrap(), eta0: 0.0, s0: 1.0, eta_range: (0.0, 4.0) })
            .unwrap();
        for eta in [0.5, 1.5, 3.0] {
            let k = curvature(&i.eval_jet(0.4, -0.3, eta).unwrap()).unwrap();
            assert!((k.kappa + 1.0 / (1.0 + 2.0 * eta).sqrt()).abs() < 1e-9, "{k:?}");
        }
    }

    #[test]
    fn z_form_matches_planar_form() {
        for id in FamilyId::ALL {
            let i = default(id);
            for [t, xi, c] in i.sample_box().points(GridSpec { nt: 3, nxi: 3, nc: 3 }) {
                let z = i.eval_jet(t, xi, c).unwrap();
                let a = curvature(&z).unwrap().kappa;
                let b = curvature_planar(&z).unwrap();
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{id}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn c_family_closed_curvature() {
        for id in [FamilyId::C2, FamilyId::C3, FamilyId::C4, FamilyId::C5, FamilyId::C6] {
            let i = default(id);
            let (k, m) = i.k_m().unwrap();
            let [t, xi, c] = i.sample_box().center();
            let z = i.eval_jet(t, xi, c).unwrap();
            let (tt, ttt) = (z.deriv(2, 0, 0).unwrap(), z.deriv(3, 0, 0).unwrap());
            let sp = (tt * tt.conj()).re;
            let closed = (I * k * (tt.conj() * ttt - tt * ttt.conj())).re + (k * k + m) * sp;
            let closed = closed / sp.powf(1.5);
            let got = curvature(&z).unwrap().kappa;
            assert!((closed - got).abs() < 1e-10 * (1.0 + got.abs()), "{id}: {closed} vs {got}");
        }
    }

    fn kappa_t_closed(z: &CJet, k: f64, m: f64) -> (f64, f64) {
        let z2 = z.d_t_n(2);
        let a = (&z2 * &z2.conj()).powf(0.5).unwrap();
        let (a0, a_t) = (a.value().re, a.deriv(1, 0, 0).unwrap().re);
        let i_val = crate::families::i_function(z, k).unwrap();
        let got = curvature(z).unwrap().kappa_t;
        (got, (3.0 * k * i_val / (a0 * a0) - (m - k * k)) * a_t / (a0 * a0))
    }

    #[test]
    fn kappa_t_closed_forms() {
        // k = 0: κ_t = −m |z_tt|_t / |z_tt|².
        let i = make_instance(FamilyParams::C3 { k: 0.0 }).unwrap();
        let [t, xi, c] = i.sample_box().center();
        let z = i.eval_chart_jet(t, xi, c).unwrap();
        let (got, closed) = kappa_t_closed(&z, 0.0, -1.0);
        assert!((got - closed).abs() < 1e-9 * (1.0 + got.abs()), "{got} vs {closed}");
        for id in [FamilyId::C2, FamilyId::C3, FamilyId::C4, FamilyId::C5, FamilyId::C6] {
            let i = default(id);
            let (k, m) = i.k_m().unwrap();
            for [t, xi, c] in i.sample_box().points(GridSpec { nt: 3, nxi: 2, nc: 3 }) {
                let (got, closed) = kappa_t_closed(&i.eval_chart_jet(t, xi, c).unwrap(), k, m);
                assert!((got - closed).abs() < 1e-9 * (1.0 + got.abs()), "{id}: {got} vs {closed}");
            }
        }
    }

    #[test]
    fn k_zero_isobars_are_breathing_circles() {
        // k = 0, m = −1: z = e^{−iξ}(e^{2σ + it} + e^{−2σ − it}), so κ_s = 0 while κ_t ≠ 0.
        let i = make_instance(FamilyParams::C3 { k: 0.0 }).unwrap();
        let [_, xi, c] = i.sample_box().center();
        let cs = curvature(&i.eval_jet(0.4, xi, c).unwrap()).unwrap();
        assert!(cs.kappa_s.abs() < 1e-12 && cs.shape_residual < 1e-12);
        assert!(cs.kappa_t.abs() > 1e-3, "{cs:?}");
    }

    #[test]
    fn boundary_endpoints() {
        let i = default(FamilyId::A);
        let curve = boundary_curve(&i, 1.0, 0.5, (0.0, 2.0), 2).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0].s, 0.0);
        assert!(curve.iter().all(|p| p.kappa == 0.0));
        assert!(boundary_curve(&i, 1.0, 0.5, (0.0, 2.0), 1).is_err());
    }

    #[test]
    fn gerstner_boundary_is_finite() {
        let i = default(FamilyId::C2);
        let curve = boundary_curve(&i, 1.0, 0.0, (0.0, 6.28), 200).unwrap();
        assert_eq!(curve.len(), 200);
        assert!(curve.iter().all(|p| p.x.is_finite() && p.y.is_finite() && p.kappa.is_finite()));
        assert!(curve.windows(2).all(|w| w[1].s > w[0].s));
    }
}
