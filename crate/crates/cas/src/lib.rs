//! Exact Laurent-polynomial and rational-function arithmetic over the rationals,
//! and the p_k, q_k recurrence whose terms depend on t and j.

pub mod lpoly;
pub mod ratfn;
pub mod sequence;

pub use lpoly::{rat, Exps, LPoly, Var};
pub use ratfn::RatFn;
pub use sequence::{
    atoms, check_relation, counterexample, depends_on, hk, hk_with, pq_sequence, pq_sequence_with, verify_auxiliary,
    verify_compatibility, Atoms, CounterexampleReport, Field, PqSequence, Relation, RelationCheck, Shift,
};
