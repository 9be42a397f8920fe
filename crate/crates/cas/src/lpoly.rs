//! Sparse Laurent polynomials in t, s (non-negative powers) and j (any integer power).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exponents of t, s and j. Ordered lexicographically with t first.
pub type Exps = (u32, u32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    S,
    J,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::S => "s",
            Var::J => "j",
        }
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LPoly {
    terms: BTreeMap<Exps, BigRational>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly::default()
    }

    pub fn one() -> Self {
        LPoly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        LPoly::monomial(c, (0, 0, 0))
    }

    pub fn int(c: i64) -> Self {
        LPoly::constant(BigRational::from_integer(c.into()))
    }

    pub fn monomial(c: BigRational, e: Exps) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        LPoly { terms }
    }

    pub fn var(v: Var) -> Self {
        let e = match v {
            Var::T => (1, 0, 0),
            Var::S => (0, 1, 0),
            Var::J => (0, 0, 1),
        };
        LPoly::monomial(BigRational::one(), e)
    }

    /// j raised to any integer power.
    pub fn j_pow(e: i32) -> Self {
        LPoly::monomial(BigRational::one(), (0, 0, e))
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Exps, BigRational)>) -> Self {
        let mut p = LPoly::zero();
        for (e, c) in it {
            p.add_term(e, c);
        }
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: Exps) -> BigRational {
        self.terms.get(&e).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Constant value if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&(0, 0, 0)).cloned(),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<(&Exps, &BigRational)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, e: Exps, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> LPoly {
        if c.is_zero() {
            return LPoly::zero();
        }
        LPoly { terms: self.terms.iter().map(|(e, a)| (*e, a * c)).collect() }
    }

    /// Multiplies by t^a s^b j^c.
    pub fn shift(&self, by: Exps) -> LPoly {
        LPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, a)| ((e.0 + by.0, e.1 + by.1, e.2 + by.2), a.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> LPoly {
        let mut out = LPoly::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn deriv(&self, v: Var) -> LPoly {
        let mut out = LPoly::zero();
        for (e, c) in &self.terms {
            let (k, ne) = match v {
                Var::T => (e.0 as i64, (e.0.wrapping_sub(1), e.1, e.2)),
                Var::S => (e.1 as i64, (e.0, e.1.wrapping_sub(1), e.2)),
                Var::J => (e.2 as i64, (e.0, e.1, e.2 - 1)),
            };
            if k != 0 {
                out.add_term(ne, c * BigRational::from_integer(k.into()));
            }
        }
        out
    }

    pub fn d_t(&self) -> LPoly {
        self.deriv(Var::T)
    }

    pub fn d_j(&self) -> LPoly {
        self.deriv(Var::J)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.terms.keys().any(|e| match v {
            Var::T => e.0 != 0,
            Var::S => e.1 != 0,
            Var::J => e.2 != 0,
        })
    }

    /// Exact evaluation. `None` when j = 0 meets a negative power.
    pub fn eval(&self, t: &BigRational, s: &BigRational, j: &BigRational) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            if e.2 < 0 && j.is_zero() {
                return None;
            }
            acc += c * t.pow(e.0 as i32) * s.pow(e.1 as i32) * j.pow(e.2);
        }
        Some(acc)
    }

    /// Componentwise minimum exponents. Zero polynomial gives (0, 0, 0).
    pub fn min_exps(&self) -> Exps {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return (0, 0, 0) };
        it.fold(*first, |m, e| (m.0.min(e.0), m.1.min(e.1), m.2.min(e.2)))
    }

    fn max_j(&self) -> i32 {
        self.terms.keys().map(|e| e.2).max().unwrap_or(0)
    }

    /// Exact quotient `self / d` in Q[t, s, j, 1/j], or `None` if `d` does not divide.
    pub fn div_exact(&self, d: &LPoly) -> Option<LPoly> {
        let (&dl, dc) = d.leading()?;
        if self.is_zero() {
            return Some(LPoly::zero());
        }
        let lo = self.min_exps().2 - d.min_exps().2;
        let hi = self.max_j() - d.max_j();
        let mut rem = self.clone();
        let mut quot = LPoly::zero();
        while let Some((&rl, rc)) = rem.leading() {
            if rl.0 < dl.0 || rl.1 < dl.1 {
                return None;
            }
            let qe = (rl.0 - dl.0, rl.1 - dl.1, rl.2 - dl.2);
            if qe.2 < lo || qe.2 > hi {
                return None;
            }
            let qc = rc / dc;
            rem = &rem - &d.shift(qe).scale(&qc);
            quot.add_term(qe, qc);
        }
        Some(quot)
    }
}

impl Add for &LPoly {
    type Output = LPoly;
    fn add(self, o: &LPoly) -> LPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &LPoly {
    type Output = LPoly;
    fn sub(self, o: &LPoly) -> LPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Mul for &LPoly {
    type Output = LPoly;
    fn mul(self, o: &LPoly) -> LPoly {
        let mut out = LPoly::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                out.add_term((a.0 + b.0, a.1 + b.1, a.2 + b.2), x * y);
            }
        }
        out
    }
}

impl Neg for &LPoly {
    type Output = LPoly;
    fn neg(self) -> LPoly {
        LPoly { terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect() }
    }
}

macro_rules! owned_ops {
    ($t:ty) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                &self + &o
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                &self - &o
            }
        }
        impl Mul for $t {
            type Output = $t;
            fn mul(self, o: $t) -> $t {
                &self * &o
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                -&self
            }
        }
    };
}
pub(crate) use owned_ops;

owned_ops!(LPoly);

fn fmt_power(f: &mut fmt::Formatter<'_>, name: &str, e: i64, first: &mut bool) -> fmt::Result {
    if e == 0 {
        return Ok(());
    }
    if !*first {
        write!(f, "*")?;
    }
    *first = false;
    if e == 1 {
        write!(f, "{name}")
    } else if e < 0 {
        write!(f, "{name}^({e})")
    } else {
        write!(f, "{name}^{e}")
    }
}

impl fmt::Display for LPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let unit = *e == (0, 0, 0);
            let mut first = true;
            if !mag.is_one() || unit {
                if mag.is_integer() {
                    write!(f, "{}", mag.numer())?;
                } else {
                    write!(f, "({}/{})", mag.numer(), mag.denom())?;
                }
                first = false;
            }
            fmt_power(f, "t", e.0 as i64, &mut first)?;
            fmt_power(f, "s", e.1 as i64, &mut first)?;
            fmt_power(f, "j", e.2 as i64, &mut first)?;
        }
        Ok(())
    }
}
