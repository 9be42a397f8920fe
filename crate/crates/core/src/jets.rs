//! Truncated multivariate Taylor arithmetic for complex fields of
//! `(t, ξ, η)`.
//!
//! A [`CJet`] stores the scaled coefficients
//! `c[a][b][d] = ∂_t^a ∂_ξ^b ∂_η^d z / (a! b! d!)` for `a ≤ 8`, `b ≤ 2`,
//! `d ≤ 1` at a base point. Each coefficient carries a validity bit: jets
//! built from closed forms are exact everywhere, while differentiation and
//! some coordinate changes shrink the set of coefficients that are still
//! known. Validity sets are always downward closed, so the product of two
//! jets is valid exactly where both factors are.

use std::ops::{Add, Mul, Neg, Sub};

pub use num_complex::Complex64 as Complex;
use thiserror::Error;

pub const T_CAP: usize = 8;
pub const XI_CAP: usize = 2;
pub const ETA_CAP: usize = 1;
pub const JET_LEN: usize = (T_CAP + 1) * (XI_CAP + 1) * (ETA_CAP + 1);

const ALL_VALID: u64 = (1u64 << JET_LEN) - 1;
/// Highest total degree of a monomial inside the caps.
const MAX_DEGREE: usize = T_CAP + XI_CAP + ETA_CAP;

pub const I: Complex = Complex { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("derivative order ({0}, {1}, {2}) exceeds jet caps (8, 2, 1)")]
    OrderOutOfCaps(usize, usize, usize),
    #[error("derivative order ({0}, {1}, {2}) is not determined by this jet")]
    Unavailable(usize, usize, usize),
    #[error("jets at different base points: {0:?} vs {1:?}")]
    BaseMismatch(BasePoint, BasePoint),
    #[error("{0}")]
    Domain(String),
}

/// Coordinates `(t, ξ, η)` of the point a jet is expanded at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasePoint {
    pub t: f64,
    pub xi: f64,
    pub eta: f64,
}

impl BasePoint {
    pub fn new(t: f64, xi: f64, eta: f64) -> Self {
        BasePoint { t, xi, eta }
    }
}

#[inline]
pub const fn index(a: usize, b: usize, d: usize) -> usize {
    (a * (XI_CAP + 1) + b) * (ETA_CAP + 1) + d
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Truncated Taylor expansion of a complex function of `(t, ξ, η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CJet {
    coeffs: [Complex; JET_LEN],
    valid: u64,
    base: BasePoint,
}

/// The vector `(z_ξ, z_η)` as a pair of jets derived from one parent jet.
#[derive(Debug, Clone)]
pub struct ZVector {
    pub xi: CJet,
    pub eta: CJet,
}

impl ZVector {
    pub fn of(z: &CJet) -> Self {
        ZVector { xi: z.d_xi(), eta: z.d_eta() }
    }

    pub fn d_t(&self) -> Self {
        ZVector { xi: self.xi.d_t(), eta: self.eta.d_t() }
    }

    pub fn conj(&self) -> Self {
        ZVector { xi: self.xi.conj(), eta: self.eta.conj() }
    }

    /// Point values of both components.
    pub fn value(&self) -> [Complex; 2] {
        [self.xi.value(), self.eta.value()]
    }
}

impl CJet {
    pub fn zero(base: BasePoint) -> Self {
        CJet { coeffs: [Complex::new(0.0, 0.0); JET_LEN], valid: ALL_VALID, base }
    }

    pub fn constant(base: BasePoint, c: Complex) -> Self {
        let mut j = CJet::zero(base);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `t` (value `base.t`).
    pub fn var_t(base: BasePoint) -> Self {
        let mut j = CJet::constant(base, base.t.into());
        j.coeffs[index(1, 0, 0)] = 1.0.into();
        j
    }

    pub fn var_xi(base: BasePoint) -> Self {
        let mut j = CJet::constant(base, base.xi.into());
        j.coeffs[index(0, 1, 0)] = 1.0.into();
        j
    }

    pub fn var_eta(base: BasePoint) -> Self {
        let mut j = CJet::constant(base, base.eta.into());
        j.coeffs[index(0, 0, 1)] = 1.0.into();
        j
    }

    /// Lifts a function of the third coordinate alone, given its value and
    /// first derivative (exact, because the η-cap is one).
    pub fn of_third(base: BasePoint, value: Complex, derivative: Complex) -> Self {
        let mut j = CJet::constant(base, value);
        j.coeffs[index(0, 0, 1)] = derivative;
        j
    }

    /// Builds a jet from raw scaled coefficients; all are marked valid.
    pub fn from_coeffs(base: BasePoint, coeffs: [Complex; JET_LEN]) -> Self {
        CJet { coeffs, valid: ALL_VALID, base }
    }

    pub fn base(&self) -> BasePoint {
        self.base
    }

    pub fn with_base(mut self, base: BasePoint) -> Self {
        self.base = base;
        self
    }

    pub fn value(&self) -> Complex {
        self.coeffs[0]
    }

    pub fn is_valid(&self, a: usize, b: usize, d: usize) -> bool {
        a <= T_CAP && b <= XI_CAP && d <= ETA_CAP && self.valid & (1 << index(a, b, d)) != 0
    }

    /// Scaled coefficient `c[a][b][d]`; zero outside the caps.
    pub fn coeff(&self, a: usize, b: usize, d: usize) -> Complex {
        if a <= T_CAP && b <= XI_CAP && d <= ETA_CAP {
            self.coeffs[index(a, b, d)]
        } else {
            Complex::new(0.0, 0.0)
        }
    }

    pub fn set_coeff(&mut self, a: usize, b: usize, d: usize, c: Complex) {
        self.coeffs[index(a, b, d)] = c;
    }

    /// Marks `(a, b, d)` and every coefficient above it as unknown.
    pub fn invalidate_from(&mut self, a: usize, b: usize, d: usize) {
        for_each_index(|a2, b2, d2| {
            if a2 >= a && b2 >= b && d2 >= d {
                self.valid &= !(1 << index(a2, b2, d2));
                self.coeffs[index(a2, b2, d2)] = Complex::new(0.0, 0.0);
            }
        });
    }

    /// The mixed partial `∂_t^a ∂_ξ^b ∂_η^d` at the base point.
    pub fn deriv(&self, a: usize, b: usize, d: usize) -> Result<Complex, JetError> {
        if a > T_CAP || b > XI_CAP || d > ETA_CAP {
            return Err(JetError::OrderOutOfCaps(a, b, d));
        }
        if !self.is_valid(a, b, d) {
            return Err(JetError::Unavailable(a, b, d));
        }
        Ok(self.coeffs[index(a, b, d)] * (factorial(a) * factorial(b) * factorial(d)))
    }

    /// First partial along one axis (0 = t, 1 = ξ, 2 = η).
    fn partial(&self, axis: usize) -> CJet {
        let mut out = CJet { coeffs: [Complex::new(0.0, 0.0); JET_LEN], valid: 0, base: self.base };
        for_each_index(|a, b, d| {
            let mut up = [a, b, d];
            up[axis] += 1;
            let [a1, b1, d1] = up;
            if self.is_valid(a1, b1, d1) {
                let k = index(a, b, d);
                out.coeffs[k] = self.coeffs[index(a1, b1, d1)] * up[axis] as f64;
                out.valid |= 1 << k;
            }
        });
        out
    }

    /// `∂_t` of the jet; loses one order in `t`.
    pub fn d_t(&self) -> CJet {
        self.partial(0)
    }

    pub fn d_xi(&self) -> CJet {
        self.partial(1)
    }

    pub fn d_eta(&self) -> CJet {
        self.partial(2)
    }

    pub fn d_t_n(&self, n: usize) -> CJet {
        (0..n).fold(self.clone(), |j, _| j.d_t())
    }

    pub fn conj(&self) -> CJet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = c.conj();
        }
        out
    }

    pub fn scale(&self, s: Complex) -> CJet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        out
    }

    pub fn add_const(&self, c: Complex) -> CJet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn checked_add(&self, other: &CJet) -> Result<CJet, JetError> {
        self.same_base(other)?;
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c += o;
        }
        out.restrict(other.valid);
        Ok(out)
    }

    pub fn checked_sub(&self, other: &CJet) -> Result<CJet, JetError> {
        self.checked_add(&other.scale((-1.0).into()))
    }

    /// Truncated Leibniz product.
    pub fn checked_mul(&self, other: &CJet) -> Result<CJet, JetError> {
        self.same_base(other)?;
        let valid = self.valid & other.valid;
        let mut out = CJet { coeffs: [Complex::new(0.0, 0.0); JET_LEN], valid, base: self.base };
        for_each_index(|a1, b1, d1| {
            let x = self.coeffs[index(a1, b1, d1)];
            if x == Complex::new(0.0, 0.0) {
                return;
            }
            for a2 in 0..=(T_CAP - a1) {
                for b2 in 0..=(XI_CAP - b1) {
                    for d2 in 0..=(ETA_CAP - d1) {
                        let k = index(a1 + a2, b1 + b2, d1 + d2);
                        if valid & (1 << k) != 0 {
                            out.coeffs[k] += x * other.coeffs[index(a2, b2, d2)];
                        }
                    }
                }
            }
        });
        Ok(out)
    }

    fn same_base(&self, other: &CJet) -> Result<(), JetError> {
        if self.base == other.base {
            Ok(())
        } else {
            Err(JetError::BaseMismatch(self.base, other.base))
        }
    }

    fn restrict(&mut self, mask: u64) {
        self.valid &= mask;
        for k in 0..JET_LEN {
            if self.valid & (1 << k) == 0 {
                self.coeffs[k] = Complex::new(0.0, 0.0);
            }
        }
    }

    /// `f(self)` for a scalar function given its derivatives
    /// `f(v), f'(v), f''(v), …` at the value `v` of the jet.
    pub fn compose(&self, derivs: &[Complex]) -> CJet {
        let mut h = self.clone();
        h.coeffs[0] = Complex::new(0.0, 0.0);
        let mut out = CJet::constant(self.base, derivs[0]);
        out.valid = self.valid;
        let mut power = CJet::constant(self.base, 1.0.into());
        power.valid = self.valid;
        let mut kfact = 1.0;
        for (k, dk) in derivs.iter().enumerate().take(MAX_DEGREE + 1).skip(1) {
            power = &power * &h;
            kfact *= k as f64;
            if power.coeffs.iter().all(|c| *c == Complex::new(0.0, 0.0)) {
                break;
            }
            out = &out + &power.scale(*dk / kfact);
        }
        out
    }

    pub fn exp(&self) -> CJet {
        let e = self.value().exp();
        self.compose(&[e; MAX_DEGREE + 1])
    }

    /// `1 / self`; the value must be nonzero.
    pub fn recip(&self) -> Result<CJet, JetError> {
        let v = self.value();
        if v == Complex::new(0.0, 0.0) {
            return Err(JetError::Domain("reciprocal of a jet with zero value".into()));
        }
        let mut derivs = [Complex::new(0.0, 0.0); MAX_DEGREE + 1];
        let inv = 1.0 / v;
        let mut acc = inv;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = acc;
            acc *= -((k + 1) as f64) * inv;
        }
        Ok(self.compose(&derivs))
    }

    /// Real power of a jet whose value is real and positive.
    pub fn powf(&self, r: f64) -> Result<CJet, JetError> {
        let v = self.value();
        if !(v.re > 0.0) || v.im.abs() > 1e-12 * v.re.max(1.0) {
            return Err(JetError::Domain(format!("real power of non-positive value {v}")));
        }
        let v = v.re;
        let mut derivs = [Complex::new(0.0, 0.0); MAX_DEGREE + 1];
        let mut falling = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = (falling * v.powf(r - k as f64)).into();
            falling *= r - k as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn checked_div(&self, other: &CJet) -> Result<CJet, JetError> {
        self.checked_mul(&other.recip()?)
    }

    /// Applies `f` to every coefficient and its multi-index.
    pub fn map_coeffs(&self, f: impl Fn(usize, usize, usize, Complex) -> Complex) -> CJet {
        let mut out = self.clone();
        for_each_index(|a, b, d| {
            let k = index(a, b, d);
            out.coeffs[k] = f(a, b, d, self.coeffs[k]);
        });
        out
    }
}

/// Visits every multi-index within the caps, in storage order.
pub fn for_each_index(mut f: impl FnMut(usize, usize, usize)) {
    for a in 0..=T_CAP {
        for b in 0..=XI_CAP {
            for d in 0..=ETA_CAP {
                f(a, b, d);
            }
        }
    }
}

impl<'a> Add<&'a CJet> for &'a CJet {
    type Output = CJet;

    /// # Panics
    /// On base-point mismatch; use [`CJet::checked_add`] to get an error.
    fn add(self, rhs: &'a CJet) -> CJet {
        self.checked_add(rhs).expect("jet addition")
    }
}

impl<'a> Sub<&'a CJet> for &'a CJet {
    type Output = CJet;

    fn sub(self, rhs: &'a CJet) -> CJet {
        self.checked_sub(rhs).expect("jet subtraction")
    }
}

impl<'a> Mul<&'a CJet> for &'a CJet {
    type Output = CJet;

    fn mul(self, rhs: &'a CJet) -> CJet {
        self.checked_mul(rhs).expect("jet multiplication")
    }
}

impl Add for CJet {
    type Output = CJet;

    fn add(self, rhs: CJet) -> CJet {
        &self + &rhs
    }
}

impl Sub for CJet {
    type Output = CJet;

    fn sub(self, rhs: CJet) -> CJet {
        &self - &rhs
    }
}

impl Mul for CJet {
    type Output = CJet;

    fn mul(self, rhs: CJet) -> CJet {
        &self * &rhs
    }
}

impl Mul<Complex> for &CJet {
    type Output = CJet;

    fn mul(self, rhs: Complex) -> CJet {
        self.scale(rhs)
    }
}

impl Mul<Complex> for CJet {
    type Output = CJet;

    fn mul(self, rhs: Complex) -> CJet {
        self.scale(rhs)
    }
}

impl Mul<f64> for CJet {
    type Output = CJet;

    fn mul(self, rhs: f64) -> CJet {
        self.scale(rhs.into())
    }
}

impl Add<Complex> for CJet {
    type Output = CJet;

    fn add(self, rhs: Complex) -> CJet {
        self.add_const(rhs)
    }
}

impl Neg for CJet {
    type Output = CJet;

    fn neg(self) -> CJet {
        self.scale((-1.0).into())
    }
}

impl Neg for &CJet {
    type Output = CJet;

    fn neg(self) -> CJet {
        self.scale((-1.0).into())
    }
}
