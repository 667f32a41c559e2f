//! Stage runner and run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mfg_lab::analyzer::{run_battery, write_analysis_csv, write_holder_csv};
use mfg_lab::assumptions::{run_all, AssumptionReport, SampleLattice};
use mfg_lab::grid::{read_field_csv, write_field_csv};
use mfg_lab::solver::{harmonic_extension, minimize, Provenance, SolutionPair, SolverError};
use mfg_lab::{Field, Pair};
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, PipelineConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Passed,
    Failed,
    Reused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub detail: String,
}

/// Everything a run emitted, with content digests. Wall-clock times live in
/// `timings.json` so that the manifest itself is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    /// File name → sha256 of its contents.
    pub files: BTreeMap<String, String>,
}

/// Written next to `u.csv`/`m.csv`; lets `--resume` recognise a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionInfo {
    pub solve_sha256: String,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub final_energy: Option<f64>,
    pub gamma: Option<f64>,
    pub u_sha256: String,
    pub m_sha256: String,
}

pub struct Run {
    cfg: PipelineConfig,
    out: PathBuf,
    plots: bool,
    manifest: Manifest,
    timings: BTreeMap<String, f64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Run {
    pub fn new(cfg: PipelineConfig, command: &str, out: PathBuf, plots: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
        let manifest = Manifest {
            tool: "mfg-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: cfg.digest(),
            seed: cfg.seed(),
            stages: Vec::new(),
            files: BTreeMap::new(),
        };
        Ok(Self {
            cfg,
            out,
            plots,
            manifest,
            timings: BTreeMap::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.manifest.files.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    fn stage(&mut self, name: &str, status: StageStatus, detail: impl Into<String>) -> bool {
        let detail = detail.into();
        if status == StageStatus::Failed {
            eprintln!("{name}: failed: {detail}");
        }
        self.manifest.stages.push(StageRecord {
            name: name.into(),
            status,
            detail,
        });
        status != StageStatus::Failed
    }

    fn timed<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.timings.insert(name.into(), start.elapsed().as_secs_f64());
        out
    }

    pub fn check(&mut self) -> Result<bool, CliError> {
        self.timed("check", |run| {
            let model = match run.cfg.model() {
                Ok(m) => m,
                Err(e) => {
                    let row = format!("{}\nparams,inf,,false,,,,,,\"{e}\"\n", AssumptionReport::<f64>::CSV_HEADER);
                    run.emit("assumptions.csv", row.as_bytes())?;
                    return Ok(run.stage("check", StageStatus::Failed, e.to_string()));
                }
            };
            let mut lattice = SampleLattice::<f64>::default_for(run.cfg.grid.dim);
            for _ in 0..run.cfg.check.refine {
                lattice = lattice.refined();
            }
            let report = match run_all(&model, &lattice, run.cfg.check.tol) {
                Ok(r) => r,
                Err(e) => return Ok(run.stage("check", StageStatus::Failed, e.to_string())),
            };
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(|e| CliError::Io(e.to_string()))?;
            run.emit("assumptions.csv", &csv)?;
            let failing: Vec<&str> = report.records.iter().filter(|r| !r.pass).map(|r| r.check_id.as_str()).collect();
            Ok(if failing.is_empty() {
                run.stage("check", StageStatus::Passed, "")
            } else {
                run.stage("check", StageStatus::Failed, format!("failing checks: {}", failing.join(", ")))
            })
        })
    }

    fn write_pair(&mut self, pair: &Pair, info_of: impl FnOnce(String, String) -> SolutionInfo) -> Result<(), CliError> {
        let (mut u, mut m) = (Vec::new(), Vec::new());
        write_field_csv(&pair.u, &mut u).map_err(|e| CliError::Io(e.to_string()))?;
        write_field_csv(&pair.m, &mut m).map_err(|e| CliError::Io(e.to_string()))?;
        let info = info_of(sha256_hex(&u), sha256_hex(&m));
        self.emit("u.csv", &u)?;
        self.emit("m.csv", &m)?;
        let json = serde_json::to_vec_pretty(&info).map_err(|e| CliError::Io(e.to_string()))?;
        self.emit("solution.json", &json)
    }

    /// A previous pair in the output directory solved from the same inputs.
    fn reusable_pair(&self) -> Option<(Pair, SolutionInfo)> {
        let text = fs::read_to_string(self.out.join("solution.json")).ok()?;
        let info: SolutionInfo = serde_json::from_str(&text).ok()?;
        if !info.converged || info.solve_sha256 != self.cfg.solve_digest() {
            return None;
        }
        let u_bytes = fs::read(self.out.join("u.csv")).ok()?;
        let m_bytes = fs::read(self.out.join("m.csv")).ok()?;
        if sha256_hex(&u_bytes) != info.u_sha256 || sha256_hex(&m_bytes) != info.m_sha256 {
            return None;
        }
        let u: Field = read_field_csv(&u_bytes[..]).ok()?;
        let m: Field = read_field_csv(&m_bytes[..]).ok()?;
        let pair = SolutionPair {
            u,
            m,
            provenance: Provenance::Solved,
            gamma: info.gamma,
            diagnostics: None,
        };
        Some((pair, info))
    }

    /// Solves (or, with `resume`, reuses) the pair; `None` on failure.
    pub fn solve(&mut self, resume: bool) -> Result<Option<Pair>, CliError> {
        self.timed("solve", |run| {
            if resume {
                if let Some((pair, info)) = run.reusable_pair() {
                    for name in ["u.csv", "m.csv", "solution.json"] {
                        let bytes = fs::read(run.out.join(name)).map_err(|e| io_err(&run.out.join(name), e))?;
                        run.manifest.files.insert(name.into(), sha256_hex(&bytes));
                    }
                    run.stage("solve", StageStatus::Reused, format!("digest {}", info.solve_sha256));
                    return Ok(Some(pair));
                }
            }
            let problem = match run.cfg.problem() {
                Ok(p) => p,
                Err(e) => {
                    run.stage("solve", StageStatus::Failed, e.to_string());
                    return Ok(None);
                }
            };
            let opts = run.cfg.solve_block()?.options();
            let digest = run.cfg.solve_digest();
            let result = harmonic_extension(&problem).and_then(|init| minimize(&problem, &init, &opts));
            let (pair, ok, detail) = match result {
                Ok(pair) => (pair, true, String::new()),
                Err(SolverError::NonConvergence { iterations, grad_norm, best }) => (
                    *best,
                    false,
                    format!("NonConvergence after {iterations} iterations (gradient {grad_norm:e})"),
                ),
                Err(e) => {
                    run.stage("solve", StageStatus::Failed, e.to_string());
                    return Ok(None);
                }
            };
            let diag = pair.diagnostics.clone();
            run.write_pair(&pair, |u_sha256, m_sha256| SolutionInfo {
                solve_sha256: digest,
                converged: ok,
                iterations: diag.as_ref().map_or(0, |d| d.iterations),
                grad_norm: diag.as_ref().map_or(f64::NAN, |d| d.grad_norm),
                final_energy: diag.as_ref().and_then(|d| d.energy_trace.last().copied()),
                gamma: pair.gamma,
                u_sha256,
                m_sha256,
            })?;
            if ok {
                run.stage("solve", StageStatus::Passed, "");
                Ok(Some(pair))
            } else {
                run.stage("solve", StageStatus::Failed, detail);
                Ok(None)
            }
        })
    }

    pub fn analyze(&mut self, pair: &Pair) -> Result<bool, CliError> {
        self.timed("analyze", |run| {
            let model = match run.cfg.model() {
                Ok(m) => m,
                Err(e) => return Ok(run.stage("analyze", StageStatus::Failed, e.to_string())),
            };
            let report = match run_battery(pair, &model, &run.cfg.battery()) {
                Ok(r) => r,
                Err(e) => return Ok(run.stage("analyze", StageStatus::Failed, e.to_string())),
            };
            let (mut a, mut h) = (Vec::new(), Vec::new());
            write_analysis_csv(&report, &mut a).map_err(|e| CliError::Io(e.to_string()))?;
            write_holder_csv(&report, &mut h).map_err(|e| CliError::Io(e.to_string()))?;
            run.emit("analysis.csv", &a)?;
            run.emit("holder.csv", &h)?;
            if run.plots {
                for (name, svg) in report.svgs() {
                    run.emit(&name, svg.as_bytes())?;
                }
            }
            let failing: Vec<String> = report.failures().map(|r| r.name.clone()).collect();
            Ok(if failing.is_empty() {
                run.stage("analyze", StageStatus::Passed, "")
            } else {
                run.stage("analyze", StageStatus::Failed, format!("failing records: {}", failing.join(", ")))
            })
        })
    }

    pub fn finish(self) -> Result<(), CliError> {
        let path = self.out.join("manifest.json");
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &self.manifest).map_err(|e| io_err(&path, e))?;
        writeln!(w).map_err(|e| io_err(&path, e))?;
        let tpath = self.out.join("timings.json");
        let text = serde_json::to_string_pretty(&self.timings).map_err(|e| io_err(&tpath, e))?;
        fs::write(&tpath, text + "\n").map_err(|e| io_err(&tpath, e))
    }
}

/// Reads `u.csv` and `m.csv` from `dir`.
pub fn load_pair(dir: &Path) -> Result<Pair, CliError> {
    let read = |name: &str| -> Result<Field, CliError> {
        let path = dir.join(name);
        let file = File::open(&path).map_err(|e| io_err(&path, e))?;
        read_field_csv(BufReader::new(file)).map_err(|e| io_err(&path, e))
    };
    Ok(SolutionPair {
        u: read("u.csv")?,
        m: read("m.csv")?,
        provenance: Provenance::Loaded,
        gamma: None,
        diagnostics: None,
    })
}
