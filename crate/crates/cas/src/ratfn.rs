//! Rational functions with a factored denominator.
//!
//! The denominator is kept as a list of distinct normalized factors with
//! multiplicities. Powers of j never appear there since j is already
//! invertible in [`LPoly`]. Sums use the least common multiple of the factor
//! lists, and numerators are trial-divided by the denominator factors after
//! every operation. Zero testing only needs the numerator.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::lpoly::{owned_ops, LPoly, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatFn {
    num: LPoly,
    den: Vec<(LPoly, u32)>,
}

/// Splits `p` into (scalar · j^e, t^a, s^b, primitive part with leading coefficient 1).
fn normalize(p: &LPoly) -> (LPoly, u32, u32, LPoly) {
    let (a, b, c) = p.min_exps();
    let lc = p.leading().map(|(_, c)| c.clone()).unwrap_or_else(BigRational::one);
    let unit = LPoly::monomial(lc.clone(), (0, 0, c));
    let inv = BigRational::one() / lc;
    let prim = LPoly::from_terms(p.terms().map(|(e, k)| ((e.0 - a, e.1 - b, e.2 - c), k * &inv)));
    (unit, a, b, prim)
}

fn push_factor(den: &mut Vec<(LPoly, u32)>, f: LPoly, e: u32) {
    if e == 0 || f.as_constant().is_some() {
        return;
    }
    if let Some(slot) = den.iter_mut().find(|(g, _)| *g == f) {
        slot.1 += e;
    } else {
        den.push((f, e));
    }
}

/// Splits composite factors by any other factor that divides them.
fn refine(den: &mut Vec<(LPoly, u32)>) {
    loop {
        let mut split = None;
        'outer: for i in 0..den.len() {
            for k in 0..den.len() {
                if i == k || den[k].0.len() > den[i].0.len() {
                    continue;
                }
                if let Some(q) = den[i].0.div_exact(&den[k].0) {
                    split = Some((i, k, q));
                    break 'outer;
                }
            }
        }
        let Some((i, k, q)) = split else { break };
        let (_, e) = den.remove(i);
        let f = den[if k > i { k - 1 } else { k }].0.clone();
        // Both factors are normalized, so the quotient is too.
        push_factor(den, f, e);
        push_factor(den, q, e);
    }
}

fn expand(den: &[(LPoly, u32)]) -> LPoly {
    den.iter().fold(LPoly::one(), |acc, (f, e)| &acc * &f.pow(*e))
}

impl RatFn {
    pub fn zero() -> Self {
        RatFn { num: LPoly::zero(), den: Vec::new() }
    }

    pub fn one() -> Self {
        RatFn::from_poly(LPoly::one())
    }

    pub fn int(c: i64) -> Self {
        RatFn::from_poly(LPoly::int(c))
    }

    pub fn constant(c: BigRational) -> Self {
        RatFn::from_poly(LPoly::constant(c))
    }

    pub fn from_poly(p: LPoly) -> Self {
        RatFn { num: p, den: Vec::new() }
    }

    pub fn var(v: Var) -> Self {
        RatFn::from_poly(LPoly::var(v))
    }

    pub fn numerator(&self) -> &LPoly {
        &self.num
    }

    pub fn denominator_factors(&self) -> &[(LPoly, u32)] {
        &self.den
    }

    /// The denominator multiplied out.
    pub fn denominator(&self) -> LPoly {
        expand(&self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn num_terms(&self) -> usize {
        self.num.len()
    }

    pub fn den_terms(&self) -> usize {
        self.denominator().len()
    }

    /// Rebuilds from a numerator over an arbitrary factor list and cancels.
    fn build(num: LPoly, den: Vec<(LPoly, u32)>) -> Self {
        if num.is_zero() {
            return RatFn::zero();
        }
        let mut r = RatFn { num, den: Vec::new() };
        for (f, e) in den {
            let (unit, a, b, prim) = normalize(&f);
            let inv = unit_inverse(&unit);
            r.num = &r.num * &inv.pow(e);
            push_factor(&mut r.den, LPoly::var(Var::T), a * e);
            push_factor(&mut r.den, LPoly::var(Var::S), b * e);
            push_factor(&mut r.den, prim, e);
        }
        r.cancel();
        r
    }

    fn cancel(&mut self) {
        refine(&mut self.den);
        for (f, e) in self.den.iter_mut() {
            while *e > 0 {
                match self.num.div_exact(f) {
                    Some(q) => {
                        self.num = q;
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        self.den.retain(|(_, e)| *e > 0);
        self.den.sort_by(|a, b| (a.0.len(), a.0.to_string()).cmp(&(b.0.len(), b.0.to_string())));
    }

    pub fn recip(&self) -> Option<RatFn> {
        if self.is_zero() {
            return None;
        }
        let (unit, a, b, prim) = normalize(&self.num);
        let mut num = expand(&self.den);
        num = &num * &unit_inverse(&unit);
        let mut den = Vec::new();
        push_factor(&mut den, LPoly::var(Var::T), a);
        push_factor(&mut den, LPoly::var(Var::S), b);
        push_factor(&mut den, prim, 1);
        Some(RatFn::build(num, den))
    }

    pub fn checked_div(&self, o: &RatFn) -> Option<RatFn> {
        Some(self * &o.recip()?)
    }

    pub fn scale(&self, c: &BigRational) -> RatFn {
        RatFn::build(self.num.scale(c), self.den.clone())
    }

    pub fn pow(&self, n: u32) -> RatFn {
        let mut out = RatFn::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn deriv(&self, v: Var) -> RatFn {
        // (N/D)' = (N'·P − N·Σ e_i f_i'·P/f_i) / (D·P) with P = ∏ f_i.
        let p = self.den.iter().fold(LPoly::one(), |acc, (f, _)| &acc * f);
        let mut num = &self.num.deriv(v) * &p;
        for (i, (f, e)) in self.den.iter().enumerate() {
            let df = f.deriv(v);
            if df.is_zero() {
                continue;
            }
            let rest = self
                .den
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .fold(LPoly::one(), |acc, (_, (g, _))| &acc * g);
            let term = &(&self.num * &df) * &rest;
            num = &num - &term.scale(&BigRational::from_integer((*e as i64).into()));
        }
        let den = self.den.iter().map(|(f, e)| (f.clone(), e + 1)).collect();
        RatFn::build(num, den)
    }

    pub fn d_t(&self) -> RatFn {
        self.deriv(Var::T)
    }

    pub fn d_j(&self) -> RatFn {
        self.deriv(Var::J)
    }

    /// Whether the exact derivative in `v` is a nonzero rational function.
    pub fn depends_on(&self, v: Var) -> bool {
        !self.deriv(v).is_zero()
    }

    /// Exact evaluation; `None` at a pole or at j = 0 with negative j powers.
    pub fn eval(&self, t: &BigRational, s: &BigRational, j: &BigRational) -> Option<BigRational> {
        let n = self.num.eval(t, s, j)?;
        let d = expand(&self.den).eval(t, s, j)?;
        if d.is_zero() {
            None
        } else {
            Some(n / d)
        }
    }

    /// Cross-multiplied equality test.
    pub fn equals(&self, o: &RatFn) -> bool {
        (self - o).is_zero()
    }
}

fn unit_inverse(unit: &LPoly) -> LPoly {
    let (e, c) = unit.leading().expect("nonzero unit");
    LPoly::monomial(BigRational::one() / c, (0, 0, -e.2))
}

fn lcm(a: &[(LPoly, u32)], b: &[(LPoly, u32)]) -> Vec<(LPoly, u32)> {
    let mut out: Vec<(LPoly, u32)> = a.to_vec();
    for (f, e) in b {
        match out.iter_mut().find(|(g, _)| g == f) {
            Some(slot) => slot.1 = slot.1.max(*e),
            None => out.push((f.clone(), *e)),
        }
    }
    out
}

/// Multiplier turning a fraction over `den` into one over `target`.
fn cofactor(den: &[(LPoly, u32)], target: &[(LPoly, u32)]) -> LPoly {
    target.iter().fold(LPoly::one(), |acc, (f, e)| {
        let have = den.iter().find(|(g, _)| g == f).map_or(0, |(_, k)| *k);
        &acc * &f.pow(e - have)
    })
}

impl Add for &RatFn {
    type Output = RatFn;
    fn add(self, o: &RatFn) -> RatFn {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let den = lcm(&self.den, &o.den);
        let num = &(&self.num * &cofactor(&self.den, &den)) + &(&o.num * &cofactor(&o.den, &den));
        RatFn::build(num, den)
    }
}

impl Sub for &RatFn {
    type Output = RatFn;
    fn sub(self, o: &RatFn) -> RatFn {
        self + &(-o)
    }
}

impl Mul for &RatFn {
    type Output = RatFn;
    fn mul(self, o: &RatFn) -> RatFn {
        if self.is_zero() || o.is_zero() {
            return RatFn::zero();
        }
        let mut den = self.den.clone();
        for (f, e) in &o.den {
            push_factor(&mut den, f.clone(), *e);
        }
        RatFn::build(&self.num * &o.num, den)
    }
}

impl Neg for &RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        RatFn { num: -&self.num, den: self.den.clone() }
    }
}

owned_ops!(RatFn);

impl From<LPoly> for RatFn {
    fn from(p: LPoly) -> Self {
        RatFn::from_poly(p)
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/(", self.num)?;
        for (i, (g, e)) in self.den.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if g.len() == 1 {
                write!(f, "{g}")?;
            } else {
                write!(f, "({g})")?;
            }
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        write!(f, ")")
    }
}

impl Zero for RatFn {
    fn zero() -> Self {
        RatFn::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpoly::rat;

    fn v(x: Var) -> RatFn {
        RatFn::var(x)
    }

    #[test]
    fn sums_cancel_common_factors() {
        // 1/(t+s) + (t-s)/(t^2-s^2) = 2/(t+s)
        let ts = &v(Var::T) + &v(Var::S);
        let diff = &v(Var::T) - &v(Var::S);
        let a = ts.recip().unwrap();
        let b = diff.checked_div(&(&ts * &diff)).unwrap();
        let sum = &a + &b;
        assert!(sum.equals(&a.scale(&rat(2, 1))));
        assert_eq!(sum.denominator_factors().len(), 1);
        assert!((&sum - &sum).is_zero());
    }

    #[test]
    fn j_stays_in_numerator() {
        let x = RatFn::from_poly(LPoly::j_pow(3).scale(&rat(-4, 1)));
        let r = x.recip().unwrap();
        assert!(r.denominator_factors().is_empty());
        assert_eq!(r.numerator(), &LPoly::j_pow(-3).scale(&rat(-1, 4)));
    }

    #[test]
    fn quotient_rule() {
        // d/dt (t/(t^2 + j)) = (j - t^2)/(t^2 + j)^2
        let den = &v(Var::T).pow(2) + &v(Var::J);
        let f = v(Var::T).checked_div(&den).unwrap();
        let want = (&v(Var::J) - &v(Var::T).pow(2)).checked_div(&den.pow(2)).unwrap();
        assert!(f.d_t().equals(&want));
        assert!(f.depends_on(Var::J));
        assert!(!f.depends_on(Var::S));
    }

    #[test]
    fn evaluation() {
        let den = &(&v(Var::J) * &v(Var::S)) + &v(Var::T).pow(2);
        let f = v(Var::S).checked_div(&den).unwrap();
        assert_eq!(f.eval(&rat(1, 1), &rat(2, 1), &rat(3, 1)), Some(rat(2, 7)));
        assert_eq!(f.eval(&rat(0, 1), &rat(0, 1), &rat(3, 1)), None);
    }
}
