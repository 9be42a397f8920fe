//! Catalog of exact solutions.
//!
//! Family A and family B are written in the pressure chart `(t, ξ, η)`.
//! Families C1–C6 are written in an auxiliary chart `(t, ξ, σ)` with a
//! closed-form `η(σ)`; their jets are produced natively in σ and the
//! η-partials are recovered by dividing by `η_σ`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jets::{BasePoint, CJet, Complex, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FamilyId {
    A,
    B,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl FamilyId {
    pub const ALL: [FamilyId; 8] = [
        FamilyId::A,
        FamilyId::B,
        FamilyId::C1,
        FamilyId::C2,
        FamilyId::C3,
        FamilyId::C4,
        FamilyId::C5,
        FamilyId::C6,
    ];

    pub fn is_c(self) -> bool {
        !matches!(self, FamilyId::A | FamilyId::B)
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::A => "A",
            FamilyId::B => "B",
            FamilyId::C1 => "C1",
            FamilyId::C2 => "C2",
            FamilyId::C3 => "C3",
            FamilyId::C4 => "C4",
            FamilyId::C5 => "C5",
            FamilyId::C6 => "C6",
        }
    }

    /// Closed form as printed in the catalog listing.
    pub fn formula(self) -> &'static str {
        match self {
            FamilyId::A => "z = xi + S(eta) t + i(eta - t^2/2)",
            FamilyId::B => "z = S(eta) exp(i(N(eta) t - N(eta)^2 xi)),  S S' N^2 = 1",
            FamilyId::C1 => "z = t^3/6 - xi + i(t^2/2 + t xi + 2 sigma),  eta = -2 sigma",
            FamilyId::C2 => "z = exp(it - i xi + sigma) - xi + i(t^2/2 + sigma),  eta = exp(2 sigma)/2 - sigma",
            FamilyId::C3 => {
                "z = exp(i(k+1)t - (k+1)^2(i xi - 2 sigma)) + exp(i(k-1)t - (k-1)^2(i xi + 2 sigma)),  \
                 eta = ((k+1)^2 exp(4(k+1)^2 sigma) + (k-1)^2 exp(-4(k-1)^2 sigma))/2"
            }
            FamilyId::C4 => "z = (t - 2 xi - 2i sigma) exp(it - i xi),  eta = 2(sigma^2 + 2 sigma)",
            FamilyId::C5 => {
                "z = exp(i e^{i theta} t - i e^{2i theta}(xi - 2 sigma sin theta)) + \
                 exp(i e^{-i theta} t - i e^{-2i theta}(xi + 2 sigma sin theta)),  \
                 eta = exp(-4 sigma sin theta sin 2theta) cos(2 theta + 4 sigma sin theta cos 2theta)"
            }
            FamilyId::C6 => {
                "z = exp(i(t - theta) - 4 sigma - t + 2 xi) + exp(i(t + theta) - 4 sigma + t - 2 xi),  \
                 eta = 2 exp(-8 sigma) sin 2theta"
            }
        }
    }

    pub fn constraints(self) -> &'static str {
        match self {
            FamilyId::A => "S arbitrary smooth function",
            FamilyId::B => "N(eta) != 0 on the range; S0 != 0",
            FamilyId::C1 => "k = m = 0",
            FamilyId::C2 => "m = -k^2, k = 1/2",
            FamilyId::C3 => "m = -1, k >= 0, k != 1",
            FamilyId::C4 => "m = 0, k = 1",
            FamilyId::C5 => "k = cos theta, m = sin^2 theta, sin theta cos 2theta != 0",
            FamilyId::C6 => "m = k = 1, sin 2theta != 0",
        }
    }

    /// Group-equivalent solutions from the earlier published list
    /// (solution number, formula number).
    pub fn cross_references(self) -> &'static [(u8, &'static str)] {
        match self {
            FamilyId::A => &[(1, "(5.4)")],
            FamilyId::B => &[(3, "(6.2)")],
            FamilyId::C1 => &[(2, "(5.5)")],
            FamilyId::C2 => &[(4, "(6.4)")],
            FamilyId::C3 => &[(7, "(8.2)")],
            FamilyId::C4 => &[(5, "(7.4)"), (6, "(7.5)")],
            FamilyId::C5 => &[],
            FamilyId::C6 => &[(8, "(9.4)")],
        }
    }

    pub fn note(self) -> Option<&'static str> {
        match self {
            FamilyId::C2 => Some(
                "Gerstner trochoidal wave up to the t^2/2 term (no gravity in this system)",
            ),
            FamilyId::C3 => Some("Ptolemaic flow: two superposed circular motions"),
            FamilyId::C5 => Some("no counterpart in the earlier published list"),
            _ => None,
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| *c != '.').collect::<String>().to_ascii_uppercase();
        FamilyId::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown family `{s}` (expected A, B, C1..C6)")))
    }
}

/// Which second Lagrangian coordinate a chart uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    Eta,
    Sigma,
}

impl Chart {
    pub fn coord_name(self) -> &'static str {
        match self {
            Chart::Eta => "eta",
            Chart::Sigma => "sigma",
        }
    }
}

/// Interval of the chart coordinate, possibly open or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn open_closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: true, hi_open: false }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn real_line() -> Self {
        Interval::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// Axis-aligned sampling box in chart coordinates `(t, ξ, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridBox {
    pub t: (f64, f64),
    pub xi: (f64, f64),
    pub c: (f64, f64),
}

/// Number of nodes per axis of a sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub nt: usize,
    pub nxi: usize,
    pub nc: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nt: 5, nxi: 5, nc: 5 }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Invalid(format!("bad grid `{s}` (expected nt,nxi,nc)")))?;
        match parts[..] {
            [nt, nxi, nc] if nt > 0 && nxi > 0 && nc > 0 => Ok(GridSpec { nt, nxi, nc }),
            _ => Err(Error::Invalid(format!("bad grid `{s}` (expected three positive counts)"))),
        }
    }
}

pub fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (range.0 + range.1)],
        _ => (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl GridBox {
    pub fn points(&self, grid: GridSpec) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(grid.nt * grid.nxi * grid.nc);
        for &t in &linspace(self.t, grid.nt) {
            for &xi in &linspace(self.xi, grid.nxi) {
                for &c in &linspace(self.c, grid.nc) {
                    out.push([t, xi, c]);
                }
            }
        }
        out
    }

    pub fn center(&self) -> [f64; 3] {
        [0.5 * (self.t.0 + self.t.1), 0.5 * (self.xi.0 + self.xi.1), 0.5 * (self.c.0 + self.c.1)]
    }
}

/// Anything that produces solution jets over a chart.
pub trait Evaluator: Send + Sync {
    fn chart(&self) -> Chart;

    /// `η` and `dη/dc` at chart coordinate `c`.
    fn eta_rate(&self, c: f64) -> Result<(f64, f64)>;

    /// Jet of `z` with η-partials, at chart point `(t, ξ, c)`.
    fn jet(&self, t: f64, xi: f64, c: f64) -> Result<CJet>;

    /// Default sampling box inside the domain.
    fn sample_box(&self) -> GridBox;

    fn eta_at(&self, c: f64) -> Result<f64> {
        Ok(self.eta_rate(c)?.0)
    }
}

/// User-facing parameters of a family, before validation.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    A { s: Expr },
    B { n: Expr, eta0: f64, s0: f64, eta_range: (f64, f64) },
    C1,
    C2,
    C3 { k: f64 },
    C4,
    C5 { theta: f64, sigma_domain: (f64, f64) },
    C6 { theta: f64 },
}

impl FamilyParams {
    /// Catalog defaults used by `list` and `verify`.
    pub fn default_for(id: FamilyId) -> Self {
        match id {
            FamilyId::A => FamilyParams::A { s: Expr::Var },
            FamilyId::B => FamilyParams::B {
                n: Expr::parse("1+eta/4").expect("default N"),
                eta0: 1.0,
                s0: 1.0,
                eta_range: (0.5, 3.0),
            },
            FamilyId::C1 => FamilyParams::C1,
            FamilyId::C2 => FamilyParams::C2,
            FamilyId::C3 => FamilyParams::C3 { k: 0.5 },
            FamilyId::C4 => FamilyParams::C4,
            FamilyId::C5 => FamilyParams::C5 { theta: std::f64::consts::FRAC_PI_3, sigma_domain: (-0.3, 0.55) },
            FamilyId::C6 => FamilyParams::C6 { theta: FRAC_PI_4 },
        }
    }

    pub fn id(&self) -> FamilyId {
        match self {
            FamilyParams::A { .. } => FamilyId::A,
            FamilyParams::B { .. } => FamilyId::B,
            FamilyParams::C1 => FamilyId::C1,
            FamilyParams::C2 => FamilyId::C2,
            FamilyParams::C3 { .. } => FamilyId::C3,
            FamilyParams::C4 => FamilyId::C4,
            FamilyParams::C5 { .. } => FamilyId::C5,
            FamilyParams::C6 { .. } => FamilyId::C6,
        }
    }

    /// Key/value description for reports.
    pub fn describe(&self) -> Vec<(String, String)> {
        let kv = |k: &str, v: String| (k.to_string(), v);
        match self {
            FamilyParams::A { s } => vec![kv("S", s.to_string())],
            FamilyParams::B { n, eta0, s0, eta_range } => vec![
                kv("N", n.to_string()),
                kv("eta0", eta0.to_string()),
                kv("S0", s0.to_string()),
                kv("eta_range", format!("{},{}", eta_range.0, eta_range.1)),
            ],
            FamilyParams::C3 { k } => vec![kv("k", k.to_string())],
            FamilyParams::C5 { theta, sigma_domain } => vec![
                kv("theta", theta.to_string()),
                kv("sigma_domain", format!("{},{}", sigma_domain.0, sigma_domain.1)),
            ],
            FamilyParams::C6 { theta } => vec![kv("theta", theta.to_string())],
            FamilyParams::C1 | FamilyParams::C2 | FamilyParams::C4 => vec![],
        }
    }
}

/// Dense-output solution of `S' = 1/(S N²)`.
#[derive(Debug, Clone)]
pub struct STable {
    nodes: Vec<f64>,
    s: Vec<f64>,
    slope: Vec<f64>,
    n: Expr,
}

impl STable {
    pub fn range(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cubic Hermite interpolant of `S` at `eta`.
    pub fn s_at(&self, eta: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(eta >= lo && eta <= hi) {
            return Err(Error::OutOfDomain { coord: "eta", value: eta, domain: Interval::closed(lo, hi).to_string() });
        }
        let i = match self.nodes.partition_point(|&x| x <= eta) {
            0 => 0,
            p if p >= self.nodes.len() => self.nodes.len() - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let u = (eta - x0) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        Ok(h00 * self.s[i] + h10 * h * self.slope[i] + h01 * self.s[i + 1] + h11 * h * self.slope[i + 1])
    }

    /// `S` and `S' = 1/(S N²)` at `eta`.
    pub fn s_and_derivative(&self, eta: f64) -> Result<(f64, f64)> {
        let s = self.s_at(eta)?;
        let n = self.n.eval(eta)?;
        Ok((s, 1.0 / (s * n * n)))
    }

    /// Largest `|S S' N² − 1|` over the nodes, with `S'` taken from the
    /// stored slopes.
    pub fn constraint_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for ((&x, &s), &ds) in self.nodes.iter().zip(&self.s).zip(&self.slope) {
            let n = self.n.eval(x)?;
            worst = worst.max((s * ds * n * n - 1.0).abs());
        }
        Ok(worst)
    }
}

/// Integrates `S' = 1/(S N²)` from `(eta0, s0)` over `range` with RK4.
pub fn family_b_integrate(n: &Expr, eta0: f64, s0: f64, range: (f64, f64)) -> Result<STable> {
    let (lo, hi) = range;
    if !(lo <= eta0 && eta0 <= hi && lo < hi) {
        return Err(Error::Constraint(format!("eta0 = {eta0} must lie inside the range [{lo}, {hi}]")));
    }
    if s0 == 0.0 || !s0.is_finite() {
        return Err(Error::Constraint("S0 must be nonzero".into()));
    }
    let rhs = |eta: f64, s: f64| -> Result<f64> {
        let nv = n.eval(eta)?;
        if nv == 0.0 {
            return Err(Error::Constraint(format!("N vanishes at eta = {eta}")));
        }
        Ok(1.0 / (s * nv * nv))
    };
    let width = hi - lo;
    let h = width / ((width / 2.5e-4).ceil()).max(1000.0);

    let sweep = |end: f64| -> Result<Vec<(f64, f64, f64)>> {
        let steps = ((end - eta0).abs() / h).ceil() as usize;
        let mut out = Vec::with_capacity(steps);
        if steps == 0 {
            return Ok(out);
        }
        let step = (end - eta0) / steps as f64;
        let (mut x, mut s) = (eta0, s0);
        let mut n_prev = n.eval(x)?;
        for i in 1..=steps {
            let k1 = rhs(x, s)?;
            let k2 = rhs(x + 0.5 * step, s + 0.5 * step * k1)?;
            let k3 = rhs(x + 0.5 * step, s + 0.5 * step * k2)?;
            let k4 = rhs(x + step, s + step * k3)?;
            let s_next = s + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let stage_ok = [s + 0.5 * step * k1, s + 0.5 * step * k2, s + step * k3, s_next]
                .iter()
                .all(|v| v.is_finite() && v * s0 > 0.0);
            if !stage_ok {
                return Err(Error::Singular { eta: x });
            }
            x = if i == steps { end } else { eta0 + step * i as f64 };
            s = s_next;
            let n_here = n.eval(x)?;
            if n_here == 0.0 || n_here.signum() != n_prev.signum() {
                return Err(Error::Constraint(format!("N changes sign near eta = {x}")));
            }
            n_prev = n_here;
            out.push((x, s, rhs(x, s)?));
        }
        Ok(out)
    };

    let mut back = sweep(lo)?;
    let fwd = sweep(hi)?;
    back.reverse();
    let mut nodes = Vec::with_capacity(back.len() + fwd.len() + 1);
    nodes.extend(back);
    nodes.push((eta0, s0, rhs(eta0, s0)?));
    nodes.extend(fwd);
    Ok(STable {
        nodes: nodes.iter().map(|r| r.0).collect(),
        s: nodes.iter().map(|r| r.1).collect(),
        slope: nodes.iter().map(|r| r.2).collect(),
        n: n.clone(),
    })
}

#[derive(Debug, Clone)]
enum Params {
    A { s: Expr },
    B { n: Expr, table: STable },
    C { k: f64, m: f64, theta: f64 },
}

/// A validated solution family with its chart, domain and sampling box.
#[derive(Debug, Clone)]
pub struct SolutionInstance {
    family: FamilyId,
    spec: FamilyParams,
    params: Params,
    domain: Interval,
    sample_box: GridBox,
}

pub fn make_instance(spec: FamilyParams) -> Result<SolutionInstance> {
    SolutionInstance::new(spec)
}

const UNIT: (f64, f64) = (-1.0, 1.0);

impl SolutionInstance {
    pub fn new(spec: FamilyParams) -> Result<Self> {
        let family = spec.id();
        let c_params = |k: f64, m: f64, theta: f64| Params::C { k, m, theta };
        let (params, domain, c_box) = match &spec {
            FamilyParams::A { s } => (Params::A { s: s.clone() }, Interval::real_line(), (0.5, 2.5)),
            FamilyParams::B { n, eta0, s0, eta_range } => {
                if *s0 <= 0.0 {
                    return Err(Error::Constraint("S0 must be positive (use the reflection for S < 0)".into()));
                }
                let table = family_b_integrate(n, *eta0, *s0, *eta_range)?;
                let (lo, hi) = *eta_range;
                let margin = 0.1 * (hi - lo);
                (Params::B { n: n.clone(), table }, Interval::closed(lo, hi), (lo + margin, hi - margin))
            }
            FamilyParams::C1 => (c_params(0.0, 0.0, 0.0), Interval::real_line(), UNIT),
            FamilyParams::C2 => (c_params(0.5, -0.25, 0.0), Interval::open_closed(0.0, 2.0), (0.2, 1.0)),
            FamilyParams::C3 { k } => {
                let k = *k;
                if !(k >= 0.0) || k == 1.0 || !k.is_finite() {
                    return Err(Error::Constraint(format!("C3 requires k >= 0, k != 1 (got {k})")));
                }
                let p = c_params(k, -1.0, 0.0);
                let root = bisect(|s| c_eta_rate(FamilyId::C3, k, 0.0, s).1, -1.0, 1.0)?;
                let w = 1.0 / ((k + 1.0) * (k + 1.0));
                (p, Interval::open(root, f64::INFINITY), (root + 0.2 * w, root + 1.2 * w))
            }
            FamilyParams::C4 => (c_params(1.0, 0.0, 0.0), Interval::open_closed(-1.0 + 1e-6, 2.0), (-0.5, 1.0)),
            FamilyParams::C5 { theta, sigma_domain } => {
                let th = *theta;
                if (th.sin() * (2.0 * th).cos()).abs() < 1e-12 {
                    return Err(Error::Constraint(format!("C5 requires sin(theta) cos(2 theta) != 0 (theta = {th})")));
                }
                let (lo, hi) = *sigma_domain;
                if !(lo < hi) {
                    return Err(Error::Constraint("C5 sigma domain must be a nonempty interval".into()));
                }
                let w = hi - lo;
                (c_params(th.cos(), th.sin().powi(2), th), Interval::closed(lo, hi), (lo + 0.1 * w, hi - 0.1 * w))
            }
            FamilyParams::C6 { theta } => {
                let th = *theta;
                if (2.0 * th).sin().abs() < 1e-12 {
                    return Err(Error::Constraint(format!("C6 requires sin(2 theta) != 0 (theta = {th})")));
                }
                (c_params(1.0, 1.0, th), Interval::real_line(), (0.05, 0.3))
            }
        };
        let inst = SolutionInstance {
            family,
            spec,
            params,
            domain,
            sample_box: GridBox { t: UNIT, xi: UNIT, c: c_box },
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Sign-constancy of `η_σ` on the domain (C families) and evaluability
    /// of the profile functions (A, B).
    fn validate(&self) -> Result<()> {
        let range = if self.domain.is_bounded() {
            let eps = 1e-9 * (self.domain.hi - self.domain.lo);
            (self.domain.lo + eps, self.domain.hi - eps)
        } else {
            self.sample_box.c
        };
        let samples = linspace(range, 1000);
        match &self.params {
            Params::A { s } => {
                for &c in linspace(self.sample_box.c, 50).iter() {
                    s.eval_d2(c)?;
                }
            }
            Params::B { .. } => {}
            Params::C { .. } => {
                let mut sign = 0.0;
                for &c in &samples {
                    let (_, rate) = self.eta_rate_unchecked(c);
                    if rate == 0.0 || (sign != 0.0 && rate.signum() != sign) || !rate.is_finite() {
                        return Err(Error::Constraint(format!(
                            "eta_sigma vanishes inside the sigma domain {} (near sigma = {c})",
                            self.domain
                        )));
                    }
                    sign = rate.signum();
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> FamilyId {
        self.family
    }

    pub fn spec(&self) -> &FamilyParams {
        &self.spec
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `(k, m)` of the constant-coefficient system for C families.
    pub fn k_m(&self) -> Option<(f64, f64)> {
        match self.params {
            Params::C { k, m, .. } => Some((k, m)),
            _ => None,
        }
    }

    /// The profile `N(η)` of family B.
    pub fn n_expr(&self) -> Option<&Expr> {
        match &self.params {
            Params::B { n, .. } => Some(n),
            _ => None,
        }
    }

    pub fn s_table(&self) -> Option<&STable> {
        match &self.params {
            Params::B { table, .. } => Some(table),
            _ => None,
        }
    }

    fn check_domain(&self, c: f64) -> Result<()> {
        if self.domain.contains(c) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { coord: self.chart().coord_name(), value: c, domain: self.domain.to_string() })
        }
    }

    fn eta_rate_unchecked(&self, c: f64) -> (f64, f64) {
        match self.params {
            Params::A { .. } | Params::B { .. } => (c, 1.0),
            Params::C { k, theta, .. } => c_eta_rate(self.family, k, theta, c),
        }
    }

    /// `η(σ)` for C families; identity for A and B.
    pub fn eta_of_sigma(&self, sigma: f64) -> Result<f64> {
        self.check_domain(sigma)?;
        Ok(self.eta_rate_unchecked(sigma).0)
    }

    /// Inverse of [`Self::eta_of_sigma`] on the monotone domain, by Newton's
    /// method safeguarded with bisection.
    pub fn sigma_of_eta(&self, eta: f64) -> Result<f64> {
        if !self.family.is_c() {
            self.check_domain(eta)?;
            return Ok(eta);
        }
        let outside = || Error::OutOfDomain {
            coord: "eta",
            value: eta,
            domain: format!("image of sigma domain {}", self.domain),
        };
        let f = |s: f64| self.eta_rate_unchecked(s).0 - eta;
        let nudge = |x: f64, inward: f64| x + inward * 1e-12 * (1.0 + x.abs());
        let (mut lo, mut hi) = self.sample_box.c;
        if self.domain.lo.is_finite() {
            lo = if self.domain.lo_open { nudge(self.domain.lo, 1.0) } else { self.domain.lo };
        }
        if self.domain.hi.is_finite() {
            hi = if self.domain.hi_open { nudge(self.domain.hi, -1.0) } else { self.domain.hi };
        }
        // Grow unbounded ends until the target is bracketed.
        let mut width = hi - lo;
        for _ in 0..64 {
            let (flo, fhi) = (f(lo), f(hi));
            if flo.is_finite() && fhi.is_finite() && flo * fhi <= 0.0 {
                break;
            }
            let grow_lo = !self.domain.lo.is_finite();
            let grow_hi = !self.domain.hi.is_finite();
            if !(grow_lo || grow_hi) || !(flo.is_finite() && fhi.is_finite()) {
                return Err(outside());
            }
            width *= 2.0;
            if grow_lo {
                lo -= width;
            }
            if grow_hi {
                hi += width;
            }
        }
        let (mut flo, fhi) = (f(lo), f(hi));
        if !(flo * fhi <= 0.0) {
            return Err(outside());
        }
        let tol = 1e-12 * (1.0 + eta.abs());
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (val, rate) = self.eta_rate_unchecked(x);
            let fx = val - eta;
            if fx.abs() < tol {
                return if self.domain.contains(x) { Ok(x) } else { Err(outside()) };
            }
            if fx * flo > 0.0 {
                lo = x;
                flo = fx;
            } else {
                hi = x;
            }
            let newton = x - fx / rate;
            x = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        Err(Error::NoConvergence { what: "sigma_of_eta", iterations: 100 })
    }

    /// Jet of the closed form at chart point `(t, ξ, c)`.
    pub fn eval_jet(&self, t: f64, xi: f64, c: f64) -> Result<CJet> {
        self.check_domain(c)?;
        match &self.params {
            Params::A { s } => {
                let base = BasePoint::new(t, xi, c);
                let sv = s.eval_d2(c)?;
                let tj = CJet::var_t(base);
                let s_lift = CJet::of_third(base, sv.value.into(), sv.d1.into());
                let tt = &tj * &tj;
                let imag = CJet::var_eta(base) - tt * 0.5;
                Ok(CJet::var_xi(base) + &s_lift * &tj + imag * I)
            }
            Params::B { n, table } => {
                let base = BasePoint::new(t, xi, c);
                let (sv, ds) = table.s_and_derivative(c)?;
                let nv = n.eval_d2(c)?;
                let s_lift = CJet::of_third(base, sv.into(), ds.into());
                let n_lift = CJet::of_third(base, nv.value.into(), nv.d1.into());
                let phase = &n_lift * &CJet::var_t(base) - &(&n_lift * &n_lift) * &CJet::var_xi(base);
                Ok(&s_lift * &(phase * I).exp())
            }
            Params::C { k, theta, .. } => {
                let (eta, rate) = c_eta_rate(self.family, *k, *theta, c);
                let sigma_jet = c_sigma_jet(self.family, *k, *theta, BasePoint::new(t, xi, c));
                Ok(sigma_to_eta(&sigma_jet, eta, rate))
            }
        }
    }

    /// Jet in the native `(t, ξ, σ)` chart (C families); for A and B this is
    /// the η-chart jet.
    pub fn eval_chart_jet(&self, t: f64, xi: f64, c: f64) -> Result<CJet> {
        self.check_domain(c)?;
        match &self.params {
            Params::C { k, theta, .. } => Ok(c_sigma_jet(self.family, *k, *theta, BasePoint::new(t, xi, c))),
            _ => self.eval_jet(t, xi, c),
        }
    }
}

impl Evaluator for SolutionInstance {
    fn chart(&self) -> Chart {
        if self.family.is_c() {
            Chart::Sigma
        } else {
            Chart::Eta
        }
    }

    fn eta_rate(&self, c: f64) -> Result<(f64, f64)> {
        self.check_domain(c)?;
        Ok(self.eta_rate_unchecked(c))
    }

    fn jet(&self, t: f64, xi: f64, c: f64) -> Result<CJet> {
        self.eval_jet(t, xi, c)
    }

    fn sample_box(&self) -> GridBox {
        self.sample_box
    }
}

/// `i(z_tt z̄_ttt − z̄_tt z_ttt) − 2k z_tt z̄_tt`, equal to `η_σ` on C families.
pub fn i_function(z: &CJet, k: f64) -> Result<f64> {
    let (tt, ttt) = (z.deriv(2, 0, 0)?, z.deriv(3, 0, 0)?);
    let v = I * (tt * ttt.conj() - tt.conj() * ttt) - 2.0 * k * tt * tt.conj();
    Ok(v.re)
}

/// Residuals of the passive system each family belongs to, as
/// `(name, |lhs − rhs|)` pairs.
pub fn passive_residuals(inst: &SolutionInstance, t: f64, xi: f64, c: f64) -> Result<Vec<(&'static str, f64)>> {
    let z = inst.eval_jet(t, xi, c)?;
    let d = |a, b, e| z.deriv(a, b, e);
    match &inst.params {
        Params::A { .. } => Ok(vec![("z_ttt", d(3, 0, 0)?.norm()), ("z_tt_eta", d(2, 0, 1)?.norm())]),
        Params::B { n, .. } => {
            let nv = n.eval_d2(c)?;
            let (nn, dn) = (nv.value, nv.d1);
            let third = d(3, 0, 0)? - I * nn * d(2, 0, 0)?;
            let mixed = d(1, 0, 1)? - (I * nn * d(0, 0, 1)? - I * dn / (nn * nn) * d(2, 0, 0)?);
            Ok(vec![("z_ttt", third.norm()), ("z_t_eta", mixed.norm())])
        }
        Params::C { k, m, theta } => {
            let zs = c_sigma_jet(inst.family, *k, *theta, BasePoint::new(t, xi, c));
            let ds = |a, b, e| zs.deriv(a, b, e);
            let fourth = ds(4, 0, 0)? - 2.0 * I * k * ds(3, 0, 0)? - (k * k + m) * ds(2, 0, 0)?;
            let sigma = ds(0, 0, 1)? - 2.0 * (I * ds(3, 0, 0)? + k * ds(2, 0, 0)?);
            let (_, rate) = c_eta_rate(inst.family, *k, *theta, c);
            let eta_sigma = rate - i_function(&zs, *k)?;
            Ok(vec![("z_tttt", fourth.norm()), ("z_sigma", sigma.norm()), ("eta_sigma_minus_I", eta_sigma.abs())])
        }
    }
}

/// Re-expresses a `(t, ξ, σ)` jet in `(t, ξ, η)` given `η(σ)` and `η_σ`.
pub fn sigma_to_eta(jet: &CJet, eta: f64, eta_sigma: f64) -> CJet {
    let base = jet.base();
    jet.map_coeffs(|_, _, d, c| if d == 1 { c / eta_sigma } else { c })
        .with_base(BasePoint::new(base.t, base.xi, eta))
}

fn c_eta_rate(family: FamilyId, k: f64, theta: f64, s: f64) -> (f64, f64) {
    match family {
        FamilyId::C1 => (-2.0 * s, -2.0),
        FamilyId::C2 => {
            let e = (2.0 * s).exp();
            (0.5 * e - s, e - 1.0)
        }
        FamilyId::C3 => {
            let (p, q) = ((k + 1.0).powi(2), (k - 1.0).powi(2));
            let (ep, eq) = ((4.0 * p * s).exp(), (-4.0 * q * s).exp());
            (0.5 * (p * ep + q * eq), 2.0 * (p * p * ep - q * q * eq))
        }
        FamilyId::C4 => (2.0 * (s * s + 2.0 * s), 4.0 * s + 4.0),
        FamilyId::C5 => {
            let a = -4.0 * theta.sin() * (2.0 * theta).sin();
            let b = 4.0 * theta.sin() * (2.0 * theta).cos();
            let phase = 2.0 * theta + b * s;
            let e = (a * s).exp();
            (e * phase.cos(), e * (a * phase.cos() - b * phase.sin()))
        }
        FamilyId::C6 => {
            let e = 2.0 * (-8.0 * s).exp() * (2.0 * theta).sin();
            (e, -8.0 * e)
        }
        FamilyId::A | FamilyId::B => (s, 1.0),
    }
}

/// `c0 + ct·t + cx·ξ + cs·σ` as a jet.
fn linear(base: BasePoint, c0: Complex, ct: Complex, cx: Complex, cs: Complex) -> CJet {
    let mut j = CJet::constant(base, c0 + ct * base.t + cx * base.xi + cs * base.eta);
    j.set_coeff(1, 0, 0, ct);
    j.set_coeff(0, 1, 0, cx);
    j.set_coeff(0, 0, 1, cs);
    j
}

fn c_sigma_jet(family: FamilyId, k: f64, theta: f64, base: BasePoint) -> CJet {
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let re = |x: f64| Complex::new(x, 0.0);
    let t = CJet::var_t(base);
    let xi = CJet::var_xi(base);
    match family {
        FamilyId::C1 => {
            // t^3/6 - ξ + i(t^2/2 + tξ + 2σ)
            let tt = &t * &t;
            let ttt = &tt * &t;
            let imag = tt * 0.5 + &t * &xi + linear(base, zero, zero, zero, re(2.0));
            ttt * (1.0 / 6.0) - xi + imag * I
        }
        FamilyId::C2 => {
            // exp(it - iξ + σ) - ξ + i(t^2/2 + σ)
            let wave = linear(base, zero, I, -I, one).exp();
            let imag = &t * &t * 0.5 + linear(base, zero, zero, zero, one);
            wave - xi + imag * I
        }
        FamilyId::C3 => {
            let (a, b) = (k + 1.0, k - 1.0);
            let e1 = linear(base, zero, I * a, -I * a * a, re(2.0 * a * a)).exp();
            let e2 = linear(base, zero, I * b, -I * b * b, re(-2.0 * b * b)).exp();
            e1 + e2
        }
        FamilyId::C4 => {
            // (t - 2ξ - 2iσ) exp(it - iξ)
            let lin = linear(base, zero, one, re(-2.0), -2.0 * I);
            lin * linear(base, zero, I, -I, zero).exp()
        }
        FamilyId::C5 => {
            let e1 = Complex::from_polar(1.0, theta);
            let e2 = Complex::from_polar(1.0, 2.0 * theta);
            let st = theta.sin();
            let p = linear(base, zero, I * e1, -I * e2, I * e2 * 2.0 * st).exp();
            let q = linear(base, zero, I * e1.conj(), -I * e2.conj(), -I * e2.conj() * 2.0 * st).exp();
            p + q
        }
        FamilyId::C6 => {
            let p = linear(base, -I * theta, I - one, re(2.0), re(-4.0)).exp();
            let q = linear(base, I * theta, I + one, re(-2.0), re(-4.0)).exp();
            p + q
        }
        FamilyId::A | FamilyId::B => unreachable!("not a sigma-chart family"),
    }
}

/// Root of a continuous function by bisection, expanding the bracket
/// outward until a sign change is found.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut expand = 0;
    while f(lo) * f(hi) > 0.0 {
        let w = hi - lo;
        lo -= w;
        hi += w;
        expand += 1;
        if expand > 60 {
            return Err(Error::NoConvergence { what: "bracketing eta_sigma root", iterations: expand });
        }
    }
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
