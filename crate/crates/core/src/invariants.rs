//! Wedge-form invariants of `𝐳 = (z_ξ, z_η)` and the identities they satisfy.
//!
//! Invariants are built as jets, so their t- and ξ-derivatives come from the
//! jet axes rather than from difference quotients.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::Evaluator;
use crate::jets::{CJet, Complex, ZVector, I};

/// Relative bound on the imaginary part of a nominally real invariant.
pub const IMAG_TOL: f64 = 1e-12;

/// `a¹b² − a²b¹`.
pub fn wedge(a: [Complex; 2], b: [Complex; 2]) -> Complex {
    a[0] * b[1] - a[1] * b[0]
}

pub fn wedge_jet(a: &ZVector, b: &ZVector) -> CJet {
    &a.xi * &b.eta - &a.eta * &b.xi
}

/// `|z_ξ − i z_tt|` and `|(i/2)(z_ξ z̄_η − z̄_ξ z_η) − 1|` at the base point.
pub fn structure_residuals(z: &CJet) -> Result<(f64, f64)> {
    let evolution = (z.deriv(0, 1, 0)? - I * z.deriv(2, 0, 0)?).norm();
    let (zx, ze) = (z.deriv(0, 1, 0)?, z.deriv(0, 0, 1)?);
    let jac = 0.5 * I * (zx * ze.conj() - zx.conj() * ze);
    Ok((evolution, (jac - 1.0).norm()))
}

/// The five invariants as complex jets.
#[derive(Debug, Clone)]
pub struct InvariantJets {
    pub alpha: CJet,
    pub beta: CJet,
    pub gamma: CJet,
    pub delta: CJet,
    pub eps: CJet,
}

impl InvariantJets {
    pub fn of(z: &CJet) -> Self {
        let mut zs = vec![ZVector::of(z)];
        for n in 1..=4 {
            let next = zs[n - 1].d_t();
            zs.push(next);
        }
        let zb: Vec<ZVector> = zs.iter().map(ZVector::conj).collect();
        let w = |m: usize, n: usize| wedge_jet(&zs[m], &zb[n]);
        // Binomial alternating sums sum_j (-1)^j C(n, j) W(Z_{n-j}, Zb_j).
        let level = |n: usize| {
            let mut acc = w(n, 0);
            let mut binom = 1.0;
            for j in 1..=n {
                binom = binom * (n + 1 - j) as f64 / j as f64;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc = acc + w(n - j, j) * (sign * binom);
            }
            acc
        };
        let half = Complex::new(0.5, 0.0);
        InvariantJets {
            alpha: level(0) * (half * I),
            beta: level(1) * half,
            gamma: level(2) * (-half * I),
            delta: level(3) * (-half),
            eps: level(4) * (half * I),
        }
    }
}

/// Point values and t-derivatives consumed by the identities.
#[derive(Debug, Clone, Copy)]
struct Scalars {
    a: [Complex; 5],
    b: [Complex; 3],
    g: [Complex; 3],
    d: Complex,
    e: Complex,
}

impl Scalars {
    fn of(inv: &InvariantJets) -> Result<Self> {
        let dt = |j: &CJet, n: usize| j.deriv(n, 0, 0);
        Ok(Scalars {
            a: [dt(&inv.alpha, 0)?, dt(&inv.alpha, 1)?, dt(&inv.alpha, 2)?, dt(&inv.alpha, 3)?, dt(&inv.alpha, 4)?],
            b: [dt(&inv.beta, 0)?, dt(&inv.beta, 1)?, dt(&inv.beta, 2)?],
            g: [dt(&inv.gamma, 0)?, dt(&inv.gamma, 1)?, dt(&inv.gamma, 2)?],
            d: dt(&inv.delta, 0)?,
            e: dt(&inv.eps, 0)?,
        })
    }

    fn deltas(&self) -> [Complex; 5] {
        let Scalars { a, b, g, d, .. } = *self;
        [
            -4.0 * (a[0] * a[2] - a[1] * a[1] + a[0] * g[0] - b[0] * b[0]),
            2.0 * (a[0] * a[3] - a[1] * a[2] + a[0] * g[1] + g[0] * a[1] - 2.0 * b[0] * b[1]),
            2.0 * (b[0] * a[2] - 2.0 * a[1] * b[1] + a[0] * b[2] + a[0] * d - b[0] * g[0]),
            -a[1] * a[3] + a[2] * a[2] - a[1] * g[1] + b[0] * b[2] + b[0] * d - g[0] * g[0],
            -b[0] * a[3] + 2.0 * b[1] * a[2] - a[1] * b[2] - a[1] * d + 2.0 * g[0] * b[1] - b[0] * g[1],
        ]
    }

    fn omega(&self) -> Complex {
        let Scalars { a, b, g, d, e } = *self;
        let bd = b[2] + d;
        let ag = a[3] + g[1];
        (a[4] + 2.0 * g[2] + e) * (b[0] * b[0] - a[0] * (g[0] + a[2]) + a[1] * a[1])
            + (a[2] + g[0]) * (4.0 * b[1] * b[1] + (a[2] - g[0]) * (a[2] - g[0]))
            + a[0] * bd * bd
            + a[0] * ag * ag
            + 2.0 * bd * (a[2] * b[0] - 2.0 * a[1] * b[1] - b[0] * g[0])
            + 2.0 * ag * (a[1] * g[0] - a[2] * a[1] - 2.0 * b[1] * b[0])
    }

    fn invariant_relation(&self) -> Complex {
        let (b, g, d, e) = (self.b[0], self.g[0], self.d, self.e);
        (b * b - g) * e + d * d + self.g[1] * self.g[1] - 2.0 * b * g * d + g * g * g
    }
}

/// Real part of a nominally real quantity, after checking its imaginary residue.
pub fn real_part(name: &'static str, v: Complex) -> Result<f64> {
    if v.im.abs() > IMAG_TOL * v.re.abs().max(1.0) {
        return Err(Error::ImaginaryResidue { name, residue: v.im });
    }
    Ok(v.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantSet {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub deltas: [f64; 5],
    pub omega: f64,
    /// `None` when `γ − β²` vanishes.
    pub k: Option<f64>,
    pub t: Option<f64>,
}

impl InvariantSet {
    pub fn kt(&self) -> Result<(f64, f64)> {
        match (self.k, self.t) {
            (Some(k), Some(t)) => Ok((k, t)),
            _ => Err(Error::DegenerateKT(self.gamma - self.beta * self.beta)),
        }
    }
}

/// True when `γ − β²` is zero up to rounding.
pub fn kt_degenerate(beta: f64, gamma: f64) -> bool {
    (gamma - beta * beta).abs() <= 1e-9 * gamma.abs().max(beta * beta).max(1.0)
}

pub fn invariant_set(z: &CJet) -> Result<InvariantSet> {
    let inv = InvariantJets::of(z);
    let mut s = Scalars::of(&inv)?;
    let alpha = real_part("alpha", s.a[0])?;
    let beta = real_part("beta", s.b[0])?;
    let gamma = real_part("gamma", s.g[0])?;
    let delta = real_part("delta", s.d)?;
    let eps = real_part("epsilon", s.e)?;
    // t-derivatives of real functions are real; drop rounding noise.
    for v in s.a.iter_mut().chain(s.b.iter_mut()).chain(s.g.iter_mut()).chain([&mut s.d, &mut s.e]) {
        v.im = 0.0;
    }
    let deltas = s.deltas().map(|v| v.re);
    let omega = s.omega().re;
    let (k, t) = if kt_degenerate(beta, gamma) {
        (None, None)
    } else {
        let den = 4.0 * (gamma - beta * beta);
        (Some((delta - beta * gamma) / den), Some((beta * delta - gamma * gamma) / den))
    };
    Ok(InvariantSet { alpha, beta, gamma, delta, eps, deltas, omega, k, t })
}

/// Max norm of `Δ₁𝐳_tt + (Δ₂ + iΔ₃)𝐳_t + (Δ₄ + iΔ₅)𝐳` and
/// `|Δ₁ − 4|𝐳_t∨𝐳|²|`.
pub fn trajectory_ode_residuals(z: &CJet) -> Result<(f64, f64)> {
    let inv = InvariantJets::of(z);
    let s = Scalars::of(&inv)?;
    let d = s.deltas();
    let v0 = ZVector::of(z);
    let v1 = v0.d_t();
    let v2 = v1.d_t();
    let (z0, z1, z2) = (v0.value(), v1.value(), v2.value());
    let c1 = d[1] + I * d[2];
    let c0 = d[3] + I * d[4];
    let vector = (0..2).map(|i| (d[0] * z2[i] + c1 * z1[i] + c0 * z0[i]).norm()).fold(0.0, f64::max);
    let w = wedge(z1, z0);
    let scalar = (d[0] - 4.0 * w * w.conj()).norm();
    Ok((vector, scalar))
}

pub fn omega_residual(z: &CJet) -> Result<f64> {
    Ok(Scalars::of(&InvariantJets::of(z))?.omega().norm())
}

pub fn invariant_relation_residual(z: &CJet) -> Result<f64> {
    Ok(Scalars::of(&InvariantJets::of(z))?.invariant_relation().norm())
}

/// `α_ξ + β_t`, `β_ξ + γ_t`, `γ_ξ + δ_t`, `δ_ξ + ε_t` from the jet axes.
pub fn conservation_residuals_jet(z: &CJet) -> Result<[f64; 4]> {
    let inv = InvariantJets::of(z);
    let chain = [&inv.alpha, &inv.beta, &inv.gamma, &inv.delta, &inv.eps];
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (chain[i].deriv(0, 1, 0)? + chain[i + 1].deriv(1, 0, 0)?).norm();
    }
    Ok(out)
}

pub fn conservation_residuals(eval: &dyn Evaluator, t: f64, xi: f64, c: f64) -> Result<[f64; 4]> {
    conservation_residuals_jet(&eval.jet(t, xi, c)?)
}

/// Largest `|∂_t|` and `|∂_ξ|` of each of β, γ, δ, ε.
pub fn constancy_residuals(z: &CJet) -> Result<[(f64, f64); 4]> {
    let inv = InvariantJets::of(z);
    let mut out = [(0.0, 0.0); 4];
    for (slot, j) in out.iter_mut().zip([&inv.beta, &inv.gamma, &inv.delta, &inv.eps]) {
        *slot = (j.deriv(1, 0, 0)?.norm(), j.deriv(0, 1, 0)?.norm());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_instance, FamilyId, FamilyParams};
    use crate::jets::BasePoint;

    #[test]
    fn wedge_examples() {
        let c = |x: f64| Complex::new(x, 0.0);
        assert_eq!(wedge([c(1.0), c(0.0)], [c(0.0), c(1.0)]), c(1.0));
        assert_eq!(wedge([c(2.0), c(3.0)], [c(4.0), c(5.0)]), c(-2.0));
        let a = [Complex::new(1.5, -2.0), Complex::new(0.3, 0.7)];
        assert_eq!(wedge(a, a), c(0.0));
    }

    fn default(id: FamilyId) -> crate::families::SolutionInstance {
        make_instance(FamilyParams::default_for(id)).unwrap()
    }

    #[test]
    fn family_a_values() {
        // x = ξ + ηt, y = η − t²/2: z_ξ = 1, z_η = t + i, z_t = η − it.
        let z = default(FamilyId::A).eval_jet(0.3, -0.2, 1.1).unwrap();
        let s = invariant_set(&z).unwrap();
        assert!((s.alpha - 1.0).abs() < 1e-14);
        assert!((s.beta + 1.0).abs() < 1e-14);
        // z_t∨z = −1, so Δ₁ = 4 and the second-order system has K = T = 0.
        assert!((s.deltas[0] - 4.0).abs() < 1e-14);
        assert_eq!(s.kt().unwrap(), (0.0, 0.0));
        let r = conservation_residuals_jet(&z).unwrap();
        assert!(r.iter().all(|x| *x < 1e-10));
    }

    #[test]
    fn constant_n_is_degenerate() {
        let inst = make_instance(FamilyParams::B {
            n: crate::expr::Expr::parse("1").unwrap(),
            eta0: 0.0,
            s0: 1.0,
            eta_range: (0.0, 4.0),
        })
        .unwrap();
        let z = inst.eval_jet(0.5, 0.2, 1.0).unwrap();
        let s = invariant_set(&z).unwrap();
        assert!(matches!(s.kt(), Err(Error::DegenerateKT(_))));
        assert!(s.deltas[0].abs() < 1e-9);
    }

    #[test]
    fn c2_kt() {
        let z = default(FamilyId::C2).eval_jet(0.4, 0.1, 0.5).unwrap();
        let s = invariant_set(&z).unwrap();
        let (k, t) = s.kt().unwrap();
        assert!((k - 0.5).abs() < 1e-9 && t.abs() < 1e-9, "{k} {t}");
    }

    #[test]
    fn perturbed_jet_breaks_conservation() {
        let z = default(FamilyId::C4).eval_jet(0.2, 0.3, 0.1).unwrap();
        let b = z.base();
        let t = CJet::var_t(b);
        let bad = z + &(&(&t * &t) * &t) * &CJet::var_xi(b) * 0.1;
        let r = conservation_residuals_jet(&bad).unwrap();
        assert!(r.iter().cloned().fold(0.0, f64::max) > 1e-3, "{r:?}");
    }

    #[test]
    fn omega_vanishes_under_substitution_rule_alone() {
        // Sum of exponentials exp(λt + iλ²ξ + μη) obeys z_ξ = i z_tt only.
        let b = BasePoint::new(0.2, -0.1, 0.4);
        let term = |lam: Complex, mu: Complex| {
            let e = CJet::var_t(b) * lam + CJet::var_xi(b) * (I * lam * lam) + CJet::var_eta(b) * mu;
            e.exp()
        };
        let z = term(Complex::new(0.3, 0.8), Complex::new(0.5, -0.2))
            + term(Complex::new(-0.6, 0.1), Complex::new(0.1, 0.9)) * Complex::new(0.7, 0.0);
        let (evo, jac) = structure_residuals(&z).unwrap();
        assert!(evo < 1e-14 && jac > 1e-2);
        assert!(omega_residual(&z).unwrap() < 1e-10);
        let l = trajectory_ode_residuals(&z).unwrap();
        assert!(l.0 < 1e-10 && l.1 < 1e-10, "{l:?}");
    }
}
