//! Laboratory for the PPSZ satisfiability algorithm and its analysis.
//!
//! The crate has three layers:
//!
//! * the algorithm itself: CNF formulas ([`formula`]), the bounded
//!   implication oracle ([`imply`]) and the PPSZ loop ([`ppsz`]);
//! * the analysis machinery: critical clause trees and cut events
//!   ([`cct`]), branching-process fixed points ([`gw`]), biased placement
//!   distributions ([`dist`]) and the critical-clause-graph structure
//!   ([`structure`]);
//! * a numerical auditor ([`audit`]) that recomputes every constant and
//!   inequality the running-time analysis rests on and certifies it
//!   against the claimed value.

pub mod audit;
pub mod cct;
pub mod dist;
pub mod formula;
pub mod gw;
pub mod hp;
pub mod imply;
pub mod ppsz;
pub mod quad;
pub mod seeds;
pub mod structure;

mod error;

pub use error::Error;
pub use formula::{Assignment, Clause, CnfFormula, Literal, PartialAssignment, VarId};

/// Common result alias.
pub type Result<T> = std::result::Result<T, Error>;
