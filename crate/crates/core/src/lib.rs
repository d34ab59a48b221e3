//! Exact jet calculus for the differential invariants of quasi-harmonic
//! oscillation equations `y'' + f(y, u) = 0` under feedback transformations.

pub mod classify;
pub mod cli;
pub mod derivations;
pub mod error;
pub mod expr;
pub mod fields;
pub mod invariants;
pub mod jet;
pub mod linalg;
pub mod orbits;
pub mod parse;
pub mod sampling;

pub use error::{Error, Result};
pub use expr::{Expr, RawExpr, Symbol};
pub use jet::{Direction, JetContext, JetPoint, MultiIndex};
