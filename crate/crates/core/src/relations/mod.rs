//! Finite-scale oracles for opacity-preserving simulation: greatest
//! relations between finite systems, level-set relations of simulation
//! functions, and sample-based validation of simulation functions.

mod composed;
mod fixpoint;
mod report;
mod sopsf;

pub use composed::{validate_composed_function, ComposedReport};
pub use fixpoint::{
    check_relation, composed_value, levelset_relation, max_relation, max_relation_ordered, ClauseViolation, OpRelation,
    RelationOutcome, SweepOrder,
};
pub use report::{ClauseStats, Tally, SAMPLE_TOL};
pub use sopsf::{validate_sopsf, SopsfReport};
