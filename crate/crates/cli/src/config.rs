//! Pipeline configuration: a single JSON document.

use std::path::{Path, PathBuf};

use mfg_lab::analyzer::BatteryConfig;
use mfg_lab::grid::GridSpec;
use mfg_lab::hamiltonian::{Coefficient, DensityMap, HamiltonianError, HamiltonianModel, HamiltonianParams, LowerOrderTerm};
use mfg_lab::scalar::norm;
use mfg_lab::solver::{EnergyDensity, MinimizeOptions, MomentumPart, SolverError, VariationalProblem};
use mfg_lab::{Grid, Model, Problem};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub check: CheckBlock,
    #[serde(default)]
    pub solve: Option<SolveBlock>,
    #[serde(default)]
    pub analyze: BatteryConfig,
    #[serde(default)]
    pub output: OutputBlock,
    /// Seed for every randomised sample; overrides `analyze.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Standard,
    SeparableGamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kind: ModelKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub lower_order_terms: Vec<LowerOrderSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityMapSpec {
    Power { coeff: f64, exponent: f64 },
    NegLog { coeff: f64 },
}

/// `c · f(m) · |p|^θ` with a constant `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerOrderSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub c: f64,
    pub f: DensityMapSpec,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    /// Nodes per axis, boundary included.
    pub shape: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckBlock {
    /// Slope tolerance of the asymptotic exponent fits.
    pub tol: f64,
    /// Number of 2× refinements of the default sample lattice.
    pub refine: usize,
}

impl Default for CheckBlock {
    fn default() -> Self {
        Self { tol: 0.05, refine: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum EnergySpec {
    /// `H₀(p) = (2/γ)|p|^{γ/2}`, `G(m) = m²/2`; γ defaults to the model's.
    GammaLaplace {
        #[serde(default)]
        gamma: Option<f64>,
    },
    /// `H₀(p) = coeff·|p|^exponent`, `G(m) = m^q/q`.
    Power { coeff: f64, exponent: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BoundarySpec {
    /// `|x − center|^exponent`.
    RadialPower {
        exponent: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `slope · x + offset`.
    Affine { slope: Vec<f64>, offset: f64 },
}

impl BoundarySpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundarySpec::RadialPower { exponent, center } => {
                let c = center.as_deref().unwrap_or(&[0.0, 0.0]);
                let d: Vec<f64> = x.iter().enumerate().map(|(a, v)| v - c.get(a).copied().unwrap_or(0.0)).collect();
                norm(&d).powf(*exponent)
            }
            BoundarySpec::Affine { slope, offset } => {
                offset + x.iter().zip(slope).map(|(v, s)| v * s).sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub energy: EnergySpec,
    pub boundary: BoundarySpec,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
}

fn default_max_iters() -> usize {
    MinimizeOptions::<f64>::default().max_iters
}

fn default_grad_tol() -> f64 {
    MinimizeOptions::<f64>::default().grad_tol
}

impl SolveBlock {
    pub fn options(&self) -> MinimizeOptions<f64> {
        MinimizeOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            ..MinimizeOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plots: false,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks only; parameter constraints are left to the check
    /// stage, where they are reported rather than rejected.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if !(1..=2).contains(&g.dim) {
            return Err(invalid(format!("grid.dim must be 1 or 2, got {}", g.dim)));
        }
        if g.shape.len() != g.dim || g.lo.len() != g.dim || g.hi.len() != g.dim {
            return Err(invalid("grid.shape, grid.lo and grid.hi need one entry per dimension"));
        }
        let m = &self.model;
        let missing = |k: &str| invalid(format!("model.{k} is required for kind {:?}", m.kind));
        match m.kind {
            ModelKind::Standard => {
                for (k, v) in [("alpha", m.alpha), ("tau", m.tau), ("beta", m.beta), ("epsilon", m.epsilon)] {
                    if v.is_none() {
                        return Err(missing(k));
                    }
                }
            }
            ModelKind::SeparableGamma => {
                if m.gamma.is_none() {
                    return Err(missing("gamma"));
                }
            }
        }
        if self.check.tol.is_nan() || self.check.tol <= 0.0 {
            return Err(invalid("check.tol must be positive"));
        }
        if let Some(s) = &self.solve {
            if s.grad_tol.is_nan() || s.grad_tol <= 0.0 || s.max_iters == 0 {
                return Err(invalid("solve.grad_tol must be positive and solve.max_iters nonzero"));
            }
            if let BoundarySpec::Affine { slope, .. } = &s.boundary {
                if slope.len() != g.dim {
                    return Err(invalid("solve.boundary.slope needs one entry per dimension"));
                }
            }
        }
        self.analyze.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        GridSpec::nodal(self.grid.dim, &self.grid.shape, &self.grid.lo, &self.grid.hi).map_err(|e| invalid(e.to_string()))
    }

    /// The Hamiltonian; parameter violations surface as [`HamiltonianError`].
    pub fn model(&self) -> Result<Model, HamiltonianError> {
        let m = &self.model;
        let mut model = match m.kind {
            ModelKind::Standard => HamiltonianModel::standard(HamiltonianParams::derive(
                m.alpha.unwrap_or(f64::NAN),
                m.tau.unwrap_or(f64::NAN),
                m.beta.unwrap_or(f64::NAN),
                m.epsilon.unwrap_or(f64::NAN),
            )?),
            ModelKind::SeparableGamma => HamiltonianModel::separable_gamma(m.gamma.unwrap_or(f64::NAN))?,
        };
        for (k, t) in m.lower_order_terms.iter().enumerate() {
            let f = match t.f {
                DensityMapSpec::Power { coeff, exponent } => DensityMap::Power { coeff, exponent },
                DensityMapSpec::NegLog { coeff } => DensityMap::NegLog { coeff },
            };
            let label = t.label.clone().unwrap_or_else(|| format!("term{k}"));
            model = model.with_lower_order_term(LowerOrderTerm::new(label, Coefficient::Constant(t.c), f, t.theta))?;
        }
        Ok(model)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.analyze.seed)
    }

    pub fn battery(&self) -> BatteryConfig {
        BatteryConfig {
            seed: self.seed(),
            ..self.analyze.clone()
        }
    }

    pub fn solve_block(&self) -> Result<&SolveBlock, CliError> {
        self.solve.as_ref().ok_or_else(|| invalid("config has no solve block"))
    }

    pub fn problem(&self) -> Result<Problem, SolverError> {
        let s = self.solve.as_ref().ok_or_else(|| SolverError::InvalidProblem("config has no solve block".into()))?;
        let grid = self.grid().map_err(|e| SolverError::InvalidProblem(e.to_string()))?;
        let boundary = |x: &[f64]| s.boundary.eval(x);
        match s.energy {
            EnergySpec::GammaLaplace { gamma } => {
                let gamma = gamma.or(self.model.gamma).ok_or_else(|| {
                    SolverError::InvalidProblem("gamma_laplace energy needs solve.energy.gamma or model.gamma".into())
                })?;
                VariationalProblem::gamma_laplace(grid, gamma, boundary)
            }
            EnergySpec::Power { coeff, exponent, q } => {
                VariationalProblem::new(grid, MomentumPart { coeff, exponent }, EnergyDensity { q }, boundary)
            }
        }
    }

    /// Digest of everything the solve stage depends on.
    pub fn solve_digest(&self) -> String {
        let key = serde_json::json!({
            "model": self.model,
            "grid": self.grid,
            "solve": self.solve,
        });
        sha256_hex(key.to_string().as_bytes())
    }

    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).unwrap_or_default().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
