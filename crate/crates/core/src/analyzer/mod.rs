//! Measurement of the regularity inequalities on a solution pair.
//!
//! Each measurement produces an [`InequalityRecord`] holding the smallest
//! constant that makes the inequality hold on the grid, so that constants can
//! be compared across refinements instead of being assumed.

mod battery;
mod chain;
mod inequalities;
mod plot;
mod record;
mod residuals;

use thiserror::Error;

use crate::grid::GridError;
use crate::hamiltonian::HamiltonianError;

pub use battery::{
    run_battery, write_analysis_csv, write_holder_csv, AnalysisReport, BatteryConfig, CaccioppoliSpec, ChainReport,
    ChainSpec, HarnackSpec, JohnNirenbergSpec, MoserSpec, ReverseHolderSpec,
};
pub use chain::{holder_fit, osc_decay, BallChain, HolderFit, OscStep, MIN_CHAIN_CELLS};
pub use inequalities::{
    caccioppoli_check, harnack_exponent, harnack_ratio, log_jn_diagnostic, moser_sup_bound, reverse_holder_step, Branch,
    JnDiagnostic, MoserResult, TruncatedPower, MOSER_THETA_CAP,
};
pub use plot::{loglog_svg, Series};
pub use record::{InequalityRecord, RecordStatus, DEGENERATE_DENOMINATOR};
pub use residuals::{
    flux, hjb_residual, pointwise_bound_constant, transport_residual, HjbResidual, PointwiseBounds, TransportResidual,
    ZERO_DENSITY_PROBE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzerError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] HamiltonianError),
    #[error("model does not match the pair: {0}")]
    ModelMismatch(String),
    #[error("branch precondition violated: {0}")]
    BranchPreconditionViolated(String),
    #[error("u is negative ({value}) at cell {index} where a nonnegative field is required")]
    SignViolation { index: usize, value: f64 },
    #[error("invalid ball chain: {0}")]
    InvalidChain(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid analyzer configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, AnalyzerError>;
