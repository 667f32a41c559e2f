//! Sampling-based verification of the structural assumptions on a
//! Hamiltonian: growth and coercivity of `D_pH`, the behaviour of `H(x,0,m)`,
//! and the resulting two-sided envelopes of `H`.
//!
//! Every check estimates the smallest admissible constant over a
//! [`SampleLattice`] instead of assuming one.

mod checks;
mod lattice;
mod report;

use thiserror::Error;

use crate::hamiltonian::HamiltonianError;

pub use checks::{
    check_a0, check_a1, check_a2, check_a3, check_lemma_envelopes, check_lemma_envelopes_with,
    check_lions, envelope_constants, run_all, verify_with_constant, EnvelopeConstants,
};
pub use lattice::SampleLattice;
pub use report::{AssumptionReport, CheckRecord, Witness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssumptionError {
    #[error("invalid sample lattice: {0}")]
    InvalidLattice(String),
    #[error("unknown check id {0:?}")]
    UnknownCheck(String),
    #[error(transparent)]
    Model(#[from] HamiltonianError),
}

pub type Result<T> = std::result::Result<T, AssumptionError>;
