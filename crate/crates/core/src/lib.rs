// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumptions;
pub mod grid;
pub mod hamiltonian;
pub mod scalar;
pub mod solver;
pub mod analyzer;

pub type Grid = grid::GridSpec<f64>;
pub type Field = grid::ScalarField<f64>;
pub type VecField = grid::VectorField<f64>;
pub type Params = hamiltonian::HamiltonianParams<f64>;
pub type Model = hamiltonian::HamiltonianModel<f64>;
pub type Problem = solver::VariationalProblem<f64>;
pub type Pair = solver::SolutionPair<f64>;
pub type Record = analyzer::InequalityRecord<f64>;
pub type Report = analyzer::AnalysisReport<f64>;
