//! Finite transformations of the admitted symmetry group acting on
//! solution evaluators.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::families::{Chart, Evaluator, GridBox, GridSpec};
use crate::invariants::structure_residuals;
use crate::jets::{BasePoint, CJet, Complex};
use crate::report::{CheckItem, MaxAcc, VerifyReport};

/// Default tolerance for structure equations after a transformation.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GroupKind {
    X1,
    X2,
    X3,
    X4,
    X5,
    X6,
    X7,
    X8,
    X9,
    X10,
    TimeReversal,
    Reflection,
}

impl GroupKind {
    pub const ALL: [GroupKind; 12] = [
        GroupKind::X1,
        GroupKind::X2,
        GroupKind::X3,
        GroupKind::X4,
        GroupKind::X5,
        GroupKind::X6,
        GroupKind::X7,
        GroupKind::X8,
        GroupKind::X9,
        GroupKind::X10,
        GroupKind::TimeReversal,
        GroupKind::Reflection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupKind::X1 => "X1",
            GroupKind::X2 => "X2",
            GroupKind::X3 => "X3",
            GroupKind::X4 => "X4",
            GroupKind::X5 => "X5",
            GroupKind::X6 => "X6",
            GroupKind::X7 => "X7",
            GroupKind::X8 => "X8",
            GroupKind::X9 => "X9",
            GroupKind::X10 => "X10",
            GroupKind::TimeReversal => "time_reversal",
            GroupKind::Reflection => "reflection",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, GroupKind::TimeReversal | GroupKind::Reflection)
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase().replace('-', "_");
        GroupKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| {
                Error::Invalid(format!("unknown group element `{s}` (expected X1..X10, time_reversal, reflection)"))
            })
    }
}

/// One element of the group: a generator flowed for parameter `a`, or a
/// discrete map.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub kind: GroupKind,
    pub a: f64,
    /// Profile `φ(η)` of the X1 flow.
    pub phi: Option<Expr>,
}

impl GroupElement {
    pub fn new(kind: GroupKind, a: f64) -> Self {
        GroupElement { kind, a, phi: None }
    }

    pub fn x1(a: f64, phi: Expr) -> Self {
        GroupElement { kind: GroupKind::X1, a, phi: Some(phi) }
    }

    /// Element of each kind with parameter `a` and `φ` for X1.
    pub fn all(a: f64, phi: &Expr) -> Vec<GroupElement> {
        GroupKind::ALL
            .into_iter()
            .map(|k| if k == GroupKind::X1 { GroupElement::x1(a, phi.clone()) } else { GroupElement::new(k, a) })
            .collect()
    }

    pub fn inverse(&self) -> Self {
        let a = if self.kind.is_discrete() { self.a } else { -self.a };
        GroupElement { kind: self.kind, a, phi: self.phi.clone() }
    }

    pub fn label(&self) -> String {
        if self.kind.is_discrete() {
            self.kind.name().to_string()
        } else {
            format!("{}({})", self.kind, self.a)
        }
    }
}

/// Coordinate and value maps of one transformation, in the form
/// `z'(t, ξ, η) = m · Z(st·t + t0, sx·ξ + aφ(η), se·η + e0) + lt·t + c`
/// with `Z = z` or `z̄`.
#[derive(Debug, Clone)]
struct Affine {
    st: f64,
    t0: f64,
    sx: f64,
    se: f64,
    e0: f64,
    phi: Option<(f64, Expr)>,
    conj: bool,
    mult: Complex,
    lin_t: Complex,
    shift: Complex,
}

impl Affine {
    fn identity() -> Self {
        Affine {
            st: 1.0,
            t0: 0.0,
            sx: 1.0,
            se: 1.0,
            e0: 0.0,
            phi: None,
            conj: false,
            mult: Complex::new(1.0, 0.0),
            lin_t: Complex::new(0.0, 0.0),
            shift: Complex::new(0.0, 0.0),
        }
    }

    fn of(action: &Action) -> Result<Self> {
        let mut m = Affine::identity();
        let g = match action {
            Action::Element(g) => g,
            Action::BrokenDilation(a) => {
                m.st = (-a).exp();
                m.sx = (-a).exp();
                m.se = (2.0 * a).exp();
                return Ok(m);
            }
        };
        let a = g.a;
        match g.kind {
            GroupKind::X1 => {
                let phi = g.phi.clone().ok_or_else(|| Error::Invalid("X1 needs a profile phi(eta)".into()))?;
                m.phi = Some((a, phi));
            }
            GroupKind::X2 => m.e0 = -a,
            GroupKind::X3 => m.lin_t = Complex::new(a, 0.0),
            GroupKind::X4 => m.lin_t = Complex::new(0.0, a),
            GroupKind::X5 => m.shift = Complex::new(a, 0.0),
            GroupKind::X6 => m.shift = Complex::new(0.0, a),
            GroupKind::X7 => m.t0 = -a,
            GroupKind::X8 => m.mult = Complex::from_polar(1.0, a),
            GroupKind::X9 => {
                m.st = (-a).exp();
                m.sx = (-2.0 * a).exp();
                m.se = (2.0 * a).exp();
            }
            GroupKind::X10 => {
                m.mult = Complex::new(a.exp(), 0.0);
                m.se = (-2.0 * a).exp();
            }
            GroupKind::TimeReversal => m.st = -1.0,
            GroupKind::Reflection => {
                m.sx = -1.0;
                m.conj = true;
            }
        }
        Ok(m)
    }

    /// Pressure label before the map, from the label after it.
    fn eta_back(&self, eta: f64) -> f64 {
        self.se * eta + self.e0
    }

    fn eta_forward(&self, eta_old: f64) -> f64 {
        (eta_old - self.e0) / self.se
    }
}

/// What a [`Transformed`] evaluator applies to its inner evaluator.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Element(GroupElement),
    /// `z'(t, ξ, η) = z(e^{−a}t, e^{−a}ξ, e^{2a}η)`: a dilation with the
    /// wrong ξ-weight, which is not a symmetry.
    BrokenDilation(f64),
}

impl Action {
    pub fn label(&self) -> String {
        match self {
            Action::Element(g) => g.label(),
            Action::BrokenDilation(a) => format!("broken_dilation({a})"),
        }
    }
}

/// An evaluator composed with a group action.
pub struct Transformed {
    inner: Arc<dyn Evaluator>,
    action: Action,
    map: Affine,
}

impl fmt::Debug for Transformed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transformed").field("action", &self.action).finish()
    }
}

pub fn transform(inner: Arc<dyn Evaluator>, g: GroupElement) -> Result<Transformed> {
    Transformed::new(inner, Action::Element(g))
}

impl Transformed {
    pub fn new(inner: Arc<dyn Evaluator>, action: Action) -> Result<Self> {
        let map = Affine::of(&action)?;
        Ok(Transformed { inner, action, map })
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    /// Inner chart coordinate for chart coordinate `c` of the result.
    fn chart_back(&self, c: f64) -> f64 {
        match self.inner.chart() {
            Chart::Eta => self.map.eta_back(c),
            Chart::Sigma => c,
        }
    }

    fn chart_forward(&self, c: f64) -> f64 {
        match self.inner.chart() {
            Chart::Eta => self.map.eta_forward(c),
            Chart::Sigma => c,
        }
    }
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Evaluator for Transformed {
    fn chart(&self) -> Chart {
        self.inner.chart()
    }

    fn eta_rate(&self, c: f64) -> Result<(f64, f64)> {
        let (eta_old, rate_old) = self.inner.eta_rate(self.chart_back(c))?;
        let eta = self.map.eta_forward(eta_old);
        match self.inner.chart() {
            Chart::Eta => Ok((eta, 1.0)),
            Chart::Sigma => Ok((eta, rate_old / self.map.se)),
        }
    }

    fn jet(&self, t: f64, xi: f64, c: f64) -> Result<CJet> {
        let m = &self.map;
        let (eta, _) = self.eta_rate(c)?;
        let phi = match &m.phi {
            Some((a, phi)) => {
                let d = phi.eval_d2(eta)?;
                Some((a * d.value, a * d.d1))
            }
            None => None,
        };
        let t_old = m.st * t + m.t0;
        let xi_old = m.sx * xi + phi.map_or(0.0, |p| p.0);
        let inner = self.inner.jet(t_old, xi_old, self.chart_back(c))?;
        let inner = if m.conj { inner.conj() } else { inner };
        let mut out = inner.map_coeffs(|a, b, d, v| v * m.st.powi(a as i32) * m.sx.powi(b as i32) * m.se.powi(d as i32));
        if let Some((_, dphi)) = phi {
            // ∂_η' = ∂_η + aφ'(η) ∂_ξ on the first η layer.
            let scaled = out.clone();
            for a in 0..=crate::jets::T_CAP {
                for b in 0..=crate::jets::XI_CAP {
                    if b < crate::jets::XI_CAP && scaled.is_valid(a, b + 1, 0) && scaled.is_valid(a, b, 1) {
                        let v = scaled.coeff(a, b, 1) + dphi * (b + 1) as f64 * scaled.coeff(a, b + 1, 0);
                        out.set_coeff(a, b, 1, v);
                    } else {
                        out.invalidate_from(a, b, 1);
                    }
                }
            }
        }
        let base = BasePoint::new(t, xi, eta);
        let out = out.with_base(base).scale(m.mult);
        let lin = CJet::var_t(base) * m.lin_t;
        Ok((out + lin).add_const(m.shift))
    }

    fn sample_box(&self) -> GridBox {
        let inner = self.inner.sample_box();
        let m = &self.map;
        let t_fwd = |t: f64| (t - m.t0) / m.st;
        GridBox {
            t: sorted(t_fwd(inner.t.0), t_fwd(inner.t.1)),
            xi: if m.phi.is_some() { inner.xi } else { sorted(inner.xi.0 / m.sx, inner.xi.1 / m.sx) },
            c: sorted(self.chart_forward(inner.c.0), self.chart_forward(inner.c.1)),
        }
    }
}

/// Structure-equation residuals of the transformed evaluator over its grid.
pub fn verify_action(inner: Arc<dyn Evaluator>, action: Action, grid: GridSpec, tol: f64) -> Result<VerifyReport> {
    let tr = Transformed::new(inner, action)?;
    let label = tr.action.label();
    let points = tr.sample_box().points(grid);
    let (evo, jac) = points
        .par_iter()
        .map(|&[t, xi, c]| {
            let (e, j) = structure_residuals(&tr.jet(t, xi, c)?)?;
            let (mut a, mut b) = (MaxAcc::default(), MaxAcc::default());
            a.push(e);
            b.push(j);
            Ok::<_, Error>((a, b))
        })
        .try_reduce(|| (MaxAcc::default(), MaxAcc::default()), |x, y| Ok((x.0.merge(y.0), x.1.merge(y.1))))?;
    let mut report = VerifyReport::new(label, vec![], grid);
    report.push(CheckItem::new("structure_evolution", evo.value(), tol, evo.count));
    report.push(CheckItem::new("structure_jacobian", jac.value(), tol, jac.count));
    Ok(report)
}

pub fn verify_symmetry(inner: Arc<dyn Evaluator>, g: GroupElement, grid: GridSpec) -> Result<VerifyReport> {
    verify_action(inner, Action::Element(g), grid, SYMMETRY_TOL)
}
