pub mod error;
pub mod eulerian;
pub mod expr;
pub mod families;
pub mod geometry;
pub mod invariants;
pub mod jets;
pub mod report;
pub mod symmetry;
pub mod verify;

pub use error::{Error, Result};
