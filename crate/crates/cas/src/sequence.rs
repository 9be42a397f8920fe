//! The p_k, q_k recurrence and the relations its terms satisfy.

use std::ops::{Add, Mul, Neg, Sub};
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lpoly::{rat, LPoly, Var};
use crate::ratfn::RatFn;

/// Spacing of the shifts in the product defining h_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shift {
    /// ∏ (s² + n²)
    #[default]
    Unit,
    /// ∏ (s² + (2n)²). The only choice of h_2 for which the relations hold at k = 2.
    Even,
}

impl std::str::FromStr for Shift {
    type Err = String;
    fn from_str(v: &str) -> Result<Self, String> {
        match v {
            "unit" => Ok(Shift::Unit),
            "even" => Ok(Shift::Even),
            _ => Err(format!("unknown shift '{v}' (expected unit or even)")),
        }
    }
}

/// h_k = 2^(−4k) ∏_{n<k} (s² + n²).
pub fn hk(k: u32) -> LPoly {
    hk_with(k, Shift::Unit)
}

pub fn hk_with(k: u32, shift: Shift) -> LPoly {
    let s2 = LPoly::var(Var::S).pow(2);
    let step = match shift {
        Shift::Unit => 1,
        Shift::Even => 2,
    };
    let mut h = LPoly::one();
    for n in 0..k {
        let m = (step * n) as i64;
        h = &h * &(&s2 + &LPoly::int(m * m));
    }
    h.scale(&BigRational::new(1.into(), num_bigint::BigInt::from(2).pow(4 * k)))
}

#[derive(Debug, Clone)]
pub struct PqSequence {
    pub shift: Shift,
    pub p: Vec<RatFn>,
    pub q: Vec<RatFn>,
}

impl PqSequence {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// p_0 … p_K and q_0 … q_K with p_0 = −1, q_0 = 0.
///
/// Panics if some p_k with k < K vanishes identically.
pub fn pq_sequence(kmax: usize) -> PqSequence {
    pq_sequence_with(kmax, Shift::Unit)
}

pub fn pq_sequence_with(kmax: usize, shift: Shift) -> PqSequence {
    let mut p = vec![RatFn::int(-1)];
    let mut q = vec![RatFn::zero()];
    let s = LPoly::var(Var::S);
    let t = LPoly::var(Var::T);
    for k in 0..kmax {
        let (pk, qk) = (&p[k], &q[k]);
        assert!(!pk.is_zero(), "p_{k} vanishes identically");
        let four_p = pk.scale(&rat(4, 1));
        let h = hk_with(k as u32, shift);
        let d1 = pk.d_t();
        let d2 = d1.d_t();
        let src = RatFn::from_poly(&(&h * &s) * &LPoly::j_pow(-2 * k as i32 - 1));
        let next_p = (&(&(&d1 * &d1) + &(qk * qk)) + &src)
            .checked_div(&four_p)
            .expect("nonzero p_k");
        let src_q = RatFn::from_poly(&(&(&h * &t) * &s) * &LPoly::j_pow(-2 * k as i32 - 2));
        let num_q = &(&(&(&d2 * qk).scale(&rat(-2, 1)) + &(&d1 * &qk.d_t()).scale(&rat(2, 1)))
            + &(&next_p * qk).scale(&rat(4, 1)))
            - &src_q;
        let next_q = num_q.checked_div(&four_p).expect("nonzero p_k");
        p.push(next_p);
        q.push(next_q);
    }
    PqSequence { shift, p, q }
}

/// Arithmetic shared by exact rational functions and exact point values.
pub trait Field:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_int(n: i64) -> Self;
    fn is_zero_value(&self) -> bool;
    fn div(&self, o: &Self) -> Option<Self>;
}

impl Field for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(n.into())
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
    fn div(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            None
        } else {
            Some(self / o)
        }
    }
}

impl Field for RatFn {
    fn from_int(n: i64) -> Self {
        RatFn::int(n)
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.checked_div(o)
    }
}

/// Values entering the relations at one index: the terms, their t-derivatives,
/// j-derivatives and the independent symbols.
#[derive(Debug, Clone)]
pub struct Atoms<F> {
    pub t: F,
    pub s: F,
    pub j: F,
    /// h_k · j^(−2k)
    pub hj: F,
    /// p_{k−1}, p_k, p_{k+1} and their first three t-derivatives (index 0..3).
    pub p_prev: [F; 4],
    pub p: [F; 4],
    pub p_next: [F; 2],
    /// q_{k−1}, q_k and their first t-derivative.
    pub q_prev: [F; 2],
    pub q: [F; 2],
    pub p_j: F,
    pub q_j: F,
}

impl<F: Field> Atoms<F> {
    fn map<G: Field>(&self, f: impl Fn(&F) -> Option<G>) -> Option<Atoms<G>> {
        let arr4 = |a: &[F; 4]| -> Option<[G; 4]> { Some([f(&a[0])?, f(&a[1])?, f(&a[2])?, f(&a[3])?]) };
        let arr2 = |a: &[F; 2]| -> Option<[G; 2]> { Some([f(&a[0])?, f(&a[1])?]) };
        Some(Atoms {
            t: f(&self.t)?,
            s: f(&self.s)?,
            j: f(&self.j)?,
            hj: f(&self.hj)?,
            p_prev: arr4(&self.p_prev)?,
            p: arr4(&self.p)?,
            p_next: arr2(&self.p_next)?,
            q_prev: arr2(&self.q_prev)?,
            q: arr2(&self.q)?,
            p_j: f(&self.p_j)?,
            q_j: f(&self.q_j)?,
        })
    }
}

fn derivs4(f: &RatFn) -> [RatFn; 4] {
    let d1 = f.d_t();
    let d2 = d1.d_t();
    let d3 = d2.d_t();
    [f.clone(), d1, d2, d3]
}

/// Collects the atoms at index k. Needs k + 1 < seq.len(). For k = 0 the
/// previous terms are zero.
pub fn atoms(seq: &PqSequence, k: usize) -> Atoms<RatFn> {
    assert!(k + 1 < seq.len(), "sequence too short for index {k}");
    let zero4 = || [RatFn::zero(), RatFn::zero(), RatFn::zero(), RatFn::zero()];
    let (p_prev, q_prev) = if k == 0 {
        (zero4(), [RatFn::zero(), RatFn::zero()])
    } else {
        (derivs4(&seq.p[k - 1]), [seq.q[k - 1].clone(), seq.q[k - 1].d_t()])
    };
    Atoms {
        t: RatFn::var(Var::T),
        s: RatFn::var(Var::S),
        j: RatFn::var(Var::J),
        hj: RatFn::from_poly(&hk_with(k as u32, seq.shift) * &LPoly::j_pow(-2 * k as i32)),
        p_prev,
        p: derivs4(&seq.p[k]),
        p_next: [seq.p[k + 1].clone(), seq.p[k + 1].d_t()],
        q_prev,
        q: [seq.q[k].clone(), seq.q[k].d_t()],
        p_j: seq.p[k].d_j(),
        q_j: seq.q[k].d_j(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// 4p_{k+1}′ − p_k‴ − (q_k)_j
    StepDerivative,
    /// q_k′ − (p_k)_j
    CrossDerivative,
    /// The quadratic relation tying p_{k−1}, p_k, p_{k+1}.
    Quadratic,
    /// q_k′ + (t p_k′ + 2k p_k)/(2j)
    QTimeDerivative,
    /// p_k″ expressed through lower derivatives.
    PSecondDerivative,
}

impl Relation {
    pub const COMPATIBILITY: [Relation; 3] =
        [Relation::StepDerivative, Relation::CrossDerivative, Relation::Quadratic];
    pub const AUXILIARY: [Relation; 2] = [Relation::QTimeDerivative, Relation::PSecondDerivative];

    pub fn name(self) -> &'static str {
        match self {
            Relation::StepDerivative => "step_derivative",
            Relation::CrossDerivative => "cross_derivative",
            Relation::Quadratic => "quadratic",
            Relation::QTimeDerivative => "q_time_derivative",
            Relation::PSecondDerivative => "p_second_derivative",
        }
    }

    pub fn min_k(self) -> usize {
        match self {
            Relation::StepDerivative | Relation::CrossDerivative => 0,
            _ => 1,
        }
    }

    /// Residual of the relation; `None` only on a division by zero.
    pub fn residual<F: Field>(self, a: &Atoms<F>, k: usize) -> Option<F> {
        let n = |x: i64| F::from_int(x);
        let [pm, pm1, pm2, _] = a.p_prev.clone();
        let [pk, pk1, pk2, pk3] = a.p.clone();
        let [qm, qm1] = a.q_prev.clone();
        let [qk, qk1] = a.q.clone();
        let [pn, pn1] = a.p_next.clone();
        Some(match self {
            Relation::StepDerivative => n(4) * pn1 - pk3 - a.q_j.clone(),
            Relation::CrossDerivative => qk1 - a.p_j.clone(),
            Relation::Quadratic => {
                let w = pm2 - n(2) * pk.clone();
                pn * (n(4) * pk.clone() * pm.clone() - pm1.clone() * pm1.clone() - qm.clone() * qm.clone())
                    - pm.clone() * (pk1.clone() * pk1.clone() + qk.clone() * qk.clone())
                    + (pk1.clone() * pm1.clone() - qk.clone() * qm.clone()) * w.clone()
                    - pk.clone() * w.clone() * w
                    + qm1.clone() * (pk1 * qm + qk * pm1 - pk * qm1)
            }
            Relation::QTimeDerivative => {
                let rhs = (a.t.clone() * pk1 + n(2 * k as i64) * pk).div(&(n(2) * a.j.clone()))?;
                qk1 + rhs
            }
            Relation::PSecondDerivative => {
                let num = a.j.clone() * pk1.clone() * pk1 - a.s.clone() * pk.clone() * pk.clone()
                    + a.t.clone() * pk.clone() * qk.clone()
                    + a.j.clone() * qk.clone() * qk
                    + a.s.clone() * a.hj.clone();
                pk2 - num.div(&(n(2) * a.j.clone() * pk))?
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub relation: Relation,
    pub k: usize,
    pub pass: bool,
    /// Random rational points at which both sides agreed exactly.
    pub points_agreed: usize,
    pub points_tried: usize,
    pub residual_num_terms: usize,
    pub input_terms: usize,
    pub wall_ms: f64,
}

pub const SAMPLE_POINTS: usize = 20;

fn random_rational<R: Rng>(rng: &mut R) -> BigRational {
    let n: i64 = rng.gen_range(-50..=50);
    let d: i64 = rng.gen_range(1..=30);
    rat(n, d)
}

/// Evaluates the relation at random rational points where every atom is finite.
pub fn point_check(atoms: &Atoms<RatFn>, rel: Relation, k: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 8) ^ rel as u64);
    let (mut agreed, mut tried) = (0, 0);
    let mut attempts = 0;
    while tried < SAMPLE_POINTS && attempts < 20 * SAMPLE_POINTS {
        attempts += 1;
        let (t, s, mut j) = (random_rational(&mut rng), random_rational(&mut rng), random_rational(&mut rng));
        if j.is_zero() {
            j = BigRational::one();
        }
        let Some(vals) = atoms.map(|f| f.eval(&t, &s, &j)) else { continue };
        let Some(r) = rel.residual(&vals, k) else { continue };
        tried += 1;
        if r.is_zero() {
            agreed += 1;
        }
    }
    (agreed, tried)
}

fn input_terms(a: &Atoms<RatFn>) -> usize {
    a.p.iter()
        .chain(a.p_prev.iter())
        .chain(a.p_next.iter())
        .chain(a.q.iter())
        .chain(a.q_prev.iter())
        .map(|f| f.num_terms() + f.den_terms())
        .sum()
}

/// Checks one relation exactly, after a random-point pre-check.
pub fn check_relation(seq: &PqSequence, rel: Relation, k: usize, seed: u64) -> RelationCheck {
    check_with_atoms(&atoms(seq, k), rel, k, seed)
}

pub fn check_with_atoms(a: &Atoms<RatFn>, rel: Relation, k: usize, seed: u64) -> RelationCheck {
    let start = Instant::now();
    let (agreed, tried) = point_check(a, rel, k, seed);
    let residual = rel.residual(a, k);
    let pass = tried > 0 && agreed == tried && residual.as_ref().is_some_and(|r| r.is_zero());
    RelationCheck {
        relation: rel,
        k,
        pass,
        points_agreed: agreed,
        points_tried: tried,
        residual_num_terms: residual.map_or(0, |r| r.num_terms()),
        input_terms: input_terms(a),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

const SEED: u64 = 0x5eed;

/// Derivative relations for k ≥ 0 and the quadratic relation for k ≥ 1, all exact.
pub fn verify_compatibility(seq: &PqSequence, k: usize) -> bool {
    let a = atoms(seq, k);
    Relation::COMPATIBILITY
        .iter()
        .filter(|r| k >= r.min_k())
        .all(|r| check_with_atoms(&a, *r, k, SEED).pass)
}

/// Closed forms of q_k′ and p_k″ for k ≥ 1.
pub fn verify_auxiliary(seq: &PqSequence, k: usize) -> bool {
    let a = atoms(seq, k);
    Relation::AUXILIARY.iter().all(|r| check_with_atoms(&a, *r, k, SEED).pass)
}

pub fn depends_on(f: &RatFn, v: Var) -> bool {
    f.depends_on(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct TermSummary {
    pub k: usize,
    pub p: String,
    pub q: String,
    pub p_num_terms: usize,
    pub p_den_terms: usize,
    pub q_num_terms: usize,
    pub q_den_terms: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub schema: &'static str,
    pub kmax: usize,
    pub shift: Shift,
    pub sequence_ms: f64,
    pub terms: Vec<TermSummary>,
    pub checks: Vec<RelationCheck>,
    pub depends_on_t: Vec<bool>,
    pub depends_on_j: Vec<bool>,
    pub passed: bool,
    pub elapsed_ms: f64,
}

/// Builds the sequence to index kmax + 1 and checks every relation for k ≤ kmax.
pub fn counterexample(kmax: usize, shift: Shift, seed: u64) -> CounterexampleReport {
    let start = Instant::now();
    let seq = pq_sequence_with(kmax + 1, shift);
    let sequence_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut checks = Vec::new();
    for k in 0..=kmax {
        let a = atoms(&seq, k);
        for rel in Relation::COMPATIBILITY.into_iter().chain(Relation::AUXILIARY) {
            if k >= rel.min_k() {
                checks.push(check_with_atoms(&a, rel, k, seed));
            }
        }
    }
    let terms = (0..=kmax)
        .map(|k| TermSummary {
            k,
            p: seq.p[k].to_string(),
            q: seq.q[k].to_string(),
            p_num_terms: seq.p[k].num_terms(),
            p_den_terms: seq.p[k].den_terms(),
            q_num_terms: seq.q[k].num_terms(),
            q_den_terms: seq.q[k].den_terms(),
        })
        .collect();
    let depends_on_t: Vec<bool> = (0..=kmax).map(|k| depends_on(&seq.p[k], Var::T)).collect();
    let depends_on_j: Vec<bool> = (0..=kmax).map(|k| depends_on(&seq.p[k], Var::J)).collect();
    let passed = checks.iter().all(|c| c.pass)
        && depends_on_t.iter().skip(2).all(|b| *b)
        && depends_on_j.iter().skip(1).all(|b| *b);
    CounterexampleReport {
        schema: "1",
        kmax,
        shift,
        sequence_ms,
        terms,
        checks,
        depends_on_t,
        depends_on_j,
        passed,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: Var) -> RatFn {
        RatFn::var(x)
    }

    fn poly(terms: &[((u32, u32, i32), i64, i64)]) -> RatFn {
        RatFn::from_poly(LPoly::from_terms(terms.iter().map(|(e, n, d)| (*e, rat(*n, *d)))))
    }

    #[test]
    fn h_values() {
        assert_eq!(hk(0), LPoly::one());
        assert_eq!(hk(1), LPoly::monomial(rat(1, 16), (0, 2, 0)));
        let s2 = LPoly::var(Var::S).pow(2);
        assert_eq!(hk(2), (&s2 * &(&s2 + &LPoly::one())).scale(&rat(1, 256)));
    }

    #[test]
    fn first_terms_match_closed_forms() {
        let seq = pq_sequence(2);
        assert!(seq.p[1].equals(&poly(&[((0, 1, -1), -1, 4)])));
        assert!(seq.q[1].equals(&poly(&[((1, 1, -2), 1, 4)])));
        // p2 = (−js² − t²s)/(16j³), q2 = (2tjs² + t³s)/(16j⁴)
        assert!(seq.p[2].equals(&poly(&[((0, 2, -2), -1, 16), ((2, 1, -3), -1, 16)])));
        assert!(seq.q[2].equals(&poly(&[((1, 2, -3), 2, 16), ((3, 1, -4), 1, 16)])));
        assert!(seq.p[2].denominator_factors().is_empty());
    }

    #[test]
    fn third_term_has_a_genuine_denominator() {
        let seq = pq_sequence(3);
        let js_t2 = &(&LPoly::var(Var::J) * &LPoly::var(Var::S)) + &LPoly::var(Var::T).pow(2);
        let factors = seq.p[3].denominator_factors();
        assert_eq!(factors, &[(js_t2.clone(), 1)]);
        assert_eq!(seq.q[3].denominator_factors(), &[(js_t2, 2)]);
        // Cross-checked against an independent symbolic run.
        let num = LPoly::from_terms([
            ((6, 1, -5), rat(-1, 64)),
            ((4, 2, -4), rat(-1, 16)),
            ((2, 3, -3), rat(-1, 16)),
            ((2, 1, -3), rat(-1, 16)),
            ((0, 4, -2), rat(-1, 64)),
            ((0, 2, -2), rat(-1, 64)),
        ]);
        assert_eq!(seq.p[3].numerator(), &num);
    }

    #[test]
    fn even_shift_keeps_low_terms_and_stays_polynomial() {
        let unit = pq_sequence(2);
        let even = pq_sequence_with(4, Shift::Even);
        for k in 0..=2 {
            assert!(unit.p[k].equals(&even.p[k]));
            assert!(unit.q[k].equals(&even.q[k]));
        }
        // p3 = −s(t⁴ + 3jst² + j²s² + 4j²)/(64j⁵)
        let p3 = poly(&[((4, 1, -5), -1, 64), ((2, 2, -4), -3, 64), ((0, 3, -3), -1, 64), ((0, 1, -3), -1, 16)]);
        assert!(even.p[3].equals(&p3));
        assert!(even.p.iter().chain(even.q.iter()).all(|f| f.denominator_factors().is_empty()));
        assert_eq!(hk_with(2, Shift::Even), LPoly::from_terms([((0, 4, 0), rat(1, 256)), ((0, 2, 0), rat(4, 256))]));
    }

    #[test]
    fn hand_checked_relations() {
        let seq = pq_sequence(3);
        // 4p2′ = −ts/(2j³) and (q1)_j = −ts/(2j³)
        let want = poly(&[((1, 1, -3), -1, 2)]);
        assert!(seq.p[2].d_t().scale(&rat(4, 1)).equals(&want));
        assert!(seq.q[1].d_j().equals(&want));
        assert!(seq.q[1].d_t().equals(&poly(&[((0, 1, -2), 1, 4)])));
        assert!(seq.q[2].d_t().equals(&poly(&[((0, 2, -3), 2, 16), ((2, 1, -4), 3, 16)])));
    }

    #[test]
    fn unit_shift_relations_break_at_second_order() {
        let seq = pq_sequence(3);
        assert!(verify_compatibility(&seq, 0));
        assert!(verify_compatibility(&seq, 1));
        assert!(verify_auxiliary(&seq, 1));
        assert!(!verify_compatibility(&seq, 2));
        assert!(!verify_auxiliary(&seq, 2));
        let a = atoms(&seq, 2);
        // 4p3′ − p2‴ − (q2)_j = −3s²t/(8j²(js + t²)²)
        let step = Relation::StepDerivative.residual(&a, 2).unwrap();
        let js_t2 = &(&v(Var::J) * &v(Var::S)) + &v(Var::T).pow(2);
        let want = poly(&[((1, 2, -2), -3, 8)]).checked_div(&js_t2.pow(2)).unwrap();
        assert!(step.equals(&want));
        assert!(check_with_atoms(&a, Relation::CrossDerivative, 2, 3).pass);
        assert!(check_with_atoms(&a, Relation::QTimeDerivative, 2, 3).pass);
    }

    #[test]
    fn even_shift_relations_hold() {
        let seq = pq_sequence_with(4, Shift::Even);
        for k in 0..=3 {
            assert!(verify_compatibility(&seq, k), "k = {k}");
            if k >= 1 {
                assert!(verify_auxiliary(&seq, k), "k = {k}");
            }
        }
        let report = counterexample(3, Shift::Even, 11);
        assert!(report.passed);
        assert_eq!(report.checks.len(), 2 + 5 * 3);
        assert!(!counterexample(3, Shift::Unit, 11).passed);
    }

    #[test]
    fn perturbed_term_breaks_relations() {
        let mut seq = pq_sequence_with(3, Shift::Even);
        seq.p[2] = &seq.p[2] + &poly(&[((1, 0, -4), 1, 1000)]);
        let c = check_relation(&seq, Relation::Quadratic, 2, 1);
        assert!(!c.pass);
        assert_eq!(c.points_agreed, 0);
        assert!(!verify_auxiliary(&seq, 2));
    }

    #[test]
    fn dependence() {
        let seq = pq_sequence(2);
        assert!(depends_on(&seq.p[2], Var::T));
        assert!(depends_on(&seq.p[2], Var::J));
        assert!(!depends_on(&seq.p[0], Var::T));
        assert!(!depends_on(&seq.p[1], Var::T));
    }
}
