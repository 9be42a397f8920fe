use thiserror::Error;

use crate::expr::ExprError;
use crate::jets::JetError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Constraint(String),
    #[error("{coord} = {value} is outside the domain {domain}")]
    OutOfDomain { coord: &'static str, value: f64, domain: String },
    #[error("S reaches zero near eta = {eta}; the family-B profile is singular")]
    Singular { eta: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("singular Jacobian in {0}")]
    SingularJacobian(&'static str),
    #[error("gamma - beta^2 vanishes ({0:e}); K and T are undefined")]
    DegenerateKT(f64),
    #[error("nominally real invariant {name} has imaginary residue {residue:e}")]
    ImaginaryResidue { name: &'static str, residue: f64 },
    #[error("curvature undefined: z_tt vanishes")]
    VanishingZtt,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
