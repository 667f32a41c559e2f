//! The full measurement battery on one solution pair, plus its CSV/SVG
//! reports.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::chain::{holder_fit, osc_decay, BallChain, HolderFit, OscStep};
use super::inequalities::{
    caccioppoli_check, harnack_exponent, harnack_ratio, log_jn_diagnostic, moser_sup_bound, reverse_holder_step,
    Branch, TruncatedPower,
};
use super::plot::{loglog_svg, Series};
use super::record::{InequalityRecord, RecordStatus};
use super::residuals::{hjb_residual, pointwise_bound_constant, transport_residual, TransportResidual};
use super::{AnalyzerError, Result};
use crate::grid::{bump_test_family, Ball};
use crate::hamiltonian::HamiltonianModel;
use crate::scalar::Real;
use crate::solver::SolutionPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaccioppoliSpec {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    pub f: TruncatedPower<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReverseHolderSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub k: f64,
    pub theta: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoserSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackSpec {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JohnNirenbergSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub center: Vec<f64>,
    pub r0: f64,
    /// Fixed number of dyadic levels; the longest admissible chain if absent.
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub drop_first: usize,
}

/// What to measure and the tolerances to measure it against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryConfig {
    pub hjb_tol: f64,
    pub transport_tol: f64,
    /// Largest admissible inequality constant.
    pub c_cap: f64,
    pub bump_count: usize,
    pub bump_scales: Vec<f64>,
    pub seed: u64,
    pub caccioppoli: Vec<CaccioppoliSpec>,
    pub reverse_holder: Vec<ReverseHolderSpec>,
    pub moser: Vec<MoserSpec>,
    pub harnack: Vec<HarnackSpec>,
    pub john_nirenberg: Vec<JohnNirenbergSpec>,
    pub chains: Vec<ChainSpec>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self::unit_square(4.0)
    }
}

impl BatteryConfig {
    /// Balls around the centre of `[0,1]²` and a chain at the origin corner,
    /// with the exponents tied to `gamma`.
    pub fn unit_square(gamma: f64) -> Self {
        let mid = vec![0.5, 0.5];
        Self {
            hjb_tol: 1e-10,
            transport_tol: 1e-3,
            c_cap: 1e6,
            bump_count: 5,
            bump_scales: vec![0.1, 0.15, 0.2, 0.25],
            seed: 0,
            caccioppoli: vec![CaccioppoliSpec {
                center: mid.clone(),
                inner: 0.2,
                outer: 0.3,
                f: TruncatedPower::new(1.0, 0.3, 10.0),
            }],
            reverse_holder: vec![
                ReverseHolderSpec {
                    center: mid.clone(),
                    radius: 0.1,
                    k: 1.0,
                    theta: gamma.max(gamma - 1.0 + 1.0),
                    branch: Branch::Unsigned,
                },
                ReverseHolderSpec {
                    center: mid.clone(),
                    radius: 0.1,
                    k: 1.0,
                    theta: -1.0,
                    branch: Branch::Negative,
                },
            ],
            moser: vec![MoserSpec {
                center: mid.clone(),
                radius: 0.1,
                lambda: gamma,
            }],
            harnack: vec![HarnackSpec {
                center: mid.clone(),
                radii: vec![0.05, 0.1, 0.2],
            }],
            john_nirenberg: vec![JohnNirenbergSpec {
                center: mid,
                radius: 0.2,
                epsilons: vec![0.05, 0.1, 0.2, 0.5, 1.0],
            }],
            chains: vec![ChainSpec {
                center: vec![0.0, 0.0],
                r0: 0.5,
                levels: None,
                drop_first: 1,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AnalyzerError::InvalidConfig(m.into()));
        if !(self.hjb_tol > 0.0 && self.transport_tol > 0.0 && self.c_cap > 0.0) {
            return bad("tolerances and the constant cap must be positive");
        }
        if self.bump_scales.iter().any(|&s| !(s > 0.0)) {
            return bad("bump scales must be positive");
        }
        let radii = self
            .caccioppoli
            .iter()
            .flat_map(|c| [c.inner, c.outer])
            .chain(self.reverse_holder.iter().map(|r| r.radius))
            .chain(self.moser.iter().map(|m| m.radius))
            .chain(self.harnack.iter().flat_map(|h| h.radii.iter().copied()))
            .chain(self.john_nirenberg.iter().map(|j| j.radius))
            .chain(self.chains.iter().map(|c| c.r0));
        if radii.into_iter().any(|r| !(r > 0.0 && r.is_finite())) {
            return bad("radii must be positive and finite");
        }
        if self.caccioppoli.iter().any(|c| c.inner >= c.outer) {
            return bad("caccioppoli inner radius must be below the outer one");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport<S> {
    pub spec: ChainSpec,
    pub steps: Vec<OscStep<S>>,
    pub fit: HolderFit<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport<S> {
    pub records: Vec<InequalityRecord<S>>,
    pub transport: Vec<TransportResidual<S>>,
    pub chains: Vec<ChainReport<S>>,
    /// `(λ, [(θ_j, a(θ_j))])` per Moser spec.
    pub moser_traces: Vec<(S, Vec<(S, S)>)>,
}

impl<S: Real> AnalysisReport<S> {
    pub fn failures(&self) -> impl Iterator<Item = &InequalityRecord<S>> {
        self.records.iter().filter(|r| r.is_failure())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// Log-log plots of the oscillation chains and the Moser traces.
    pub fn svgs(&self) -> Vec<(String, String)> {
        let osc: Vec<Series> = self
            .chains
            .iter()
            .enumerate()
            .map(|(k, c)| Series {
                label: format!("chain {k}: mu = {:.3}", c.fit.mu_hat.as_f64()),
                points: c.fit.points.iter().map(|&(r, o)| (r.as_f64(), o.as_f64())).collect(),
            })
            .collect();
        let moser: Vec<Series> = self
            .moser_traces
            .iter()
            .map(|(lambda, t)| Series {
                label: format!("lambda = {}", lambda.as_f64()),
                points: t.iter().map(|&(th, a)| (th.as_f64(), a.as_f64())).collect(),
            })
            .collect();
        vec![
            ("osc_decay.svg".into(), loglog_svg("oscillation decay", "r", "osc u on B_r", &osc)),
            ("moser_trace.svg".into(), loglog_svg("Moser trace", "theta", "a(theta)", &moser)),
        ]
    }
}

fn lit_center<S: Real>(c: &[f64]) -> Result<Vec<S>> {
    if c.is_empty() || c.len() > 2 {
        return Err(AnalyzerError::InvalidConfig(format!("ball centre needs 1 or 2 coordinates, got {}", c.len())));
    }
    Ok(c.iter().map(|&x| S::lit(x)).collect())
}

/// Re-checks every passing record at twice its constant; any record that
/// breaks the monotone-constant contract shows up as a failure.
fn monotone_record<S: Real>(records: &[InequalityRecord<S>]) -> InequalityRecord<S> {
    let broken = records
        .iter()
        .filter(|r| r.status == RecordStatus::Pass && !r.holds_with(S::lit(2.0) * r.estimated_c))
        .count();
    InequalityRecord::new(
        "monotone_c",
        [S::zero(); 2],
        S::zero(),
        S::from_usize_lossy(broken),
        S::one(),
        S::one(),
        S::zero(),
    )
    .with_terms(vec![("rechecked".into(), S::from_usize_lossy(records.len()))])
}

pub fn run_battery<S: Real>(
    pair: &SolutionPair<S>,
    model: &HamiltonianModel<S>,
    cfg: &BatteryConfig,
) -> Result<AnalysisReport<S>> {
    cfg.validate()?;
    let u = &pair.u;
    let grid = *u.grid();
    let gamma = model.params().gamma();
    let cap = S::lit(cfg.c_cap);
    let mut records = Vec::new();

    records.extend(hjb_residual(pair, model, S::lit(cfg.hjb_tol))?.records);

    let scales: Vec<S> = cfg.bump_scales.iter().map(|&s| S::lit(s)).collect();
    let family = bump_test_family(&grid, cfg.bump_count, &scales, cfg.seed)?;
    let transport = transport_residual(pair, model, &family)?;
    for (k, t) in transport.iter().enumerate() {
        records.push(
            InequalityRecord::new("transport", [S::zero(); 2], S::zero(), t.normalized, S::lit(cfg.transport_tol), S::one(), S::one())
                .with_terms(vec![("phi".into(), S::from_usize_lossy(k)), ("raw".into(), t.raw)]),
        );
    }

    records.extend(pointwise_bound_constant(pair, model.params(), cap)?.records);

    for c in &cfg.caccioppoli {
        let center = lit_center::<S>(&c.center)?;
        let f = TruncatedPower {
            q: S::lit(c.f.q),
            shift: S::lit(c.f.shift),
            cap: S::lit(c.f.cap),
            scale: S::lit(c.f.scale),
        };
        let inner = Ball::new(&center, S::lit(c.inner));
        let outer = Ball::new(&center, S::lit(c.outer));
        records.push(caccioppoli_check(u, gamma, &inner, &outer, &f, cap)?);
    }

    for r in &cfg.reverse_holder {
        let center = lit_center::<S>(&r.center)?;
        records.push(reverse_holder_step(
            u,
            gamma,
            &center,
            S::lit(r.radius),
            S::lit(r.k),
            S::lit(r.theta),
            r.branch,
            cap,
        )?);
    }

    let mut moser_traces = Vec::new();
    for m in &cfg.moser {
        let center = lit_center::<S>(&m.center)?;
        let res = moser_sup_bound(u, gamma, &center, S::lit(m.radius), S::lit(m.lambda), cap)?;
        records.push(res.record);
        moser_traces.push((S::lit(m.lambda), res.trace));
    }

    for h in &cfg.harnack {
        let center = lit_center::<S>(&h.center)?;
        for &r in &h.radii {
            let rec = harnack_ratio(u, &center, S::lit(r), cap)?;
            let mu = harnack_exponent(rec.estimated_c);
            let mut terms = rec.rhs_terms.clone();
            terms.push(("implied_mu".into(), mu));
            records.push(rec.with_terms(terms).estimate_only());
        }
    }

    for j in &cfg.john_nirenberg {
        let center = lit_center::<S>(&j.center)?;
        let eps: Vec<S> = j.epsilons.iter().map(|&e| S::lit(e)).collect();
        records.extend(log_jn_diagnostic(u, &center, S::lit(j.radius), &eps, cap)?.records);
    }

    let mut chains = Vec::new();
    for c in &cfg.chains {
        let center = lit_center::<S>(&c.center)?;
        let chain = match c.levels {
            Some(n) => BallChain::dyadic(&center, S::lit(c.r0), n)?,
            None => BallChain::fitted(&grid, &center, S::lit(c.r0))?,
        };
        let steps = osc_decay(u, &chain)?;
        records.extend(steps.iter().map(|s| s.record(chain.center)));
        let fit = holder_fit(u, &chain, c.drop_first)?;
        records.push(
            InequalityRecord::new("holder_fit", chain.center, chain.radii[0], fit.mu_hat, S::one(), S::one(), S::one())
                .with_terms(vec![("r2".into(), fit.r2), ("intercept".into(), fit.intercept)])
                .estimate_only(),
        );
        chains.push(ChainReport {
            spec: c.clone(),
            steps,
            fit,
        });
    }

    let monotone = monotone_record(&records);
    records.push(monotone);
    Ok(AnalysisReport {
        records,
        transport,
        chains,
        moser_traces,
    })
}

pub fn write_analysis_csv<S: Real, W: Write>(report: &AnalysisReport<S>, mut out: W) -> io::Result<()> {
    writeln!(out, "name,center_x0,center_x1,R,lhs,rhs,C,pass,status")?;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.name,
            r.center[0],
            r.center[1],
            r.radius,
            r.lhs,
            r.rhs(),
            r.estimated_c,
            !r.is_failure(),
            r.status.as_str()
        )?;
    }
    Ok(())
}

pub fn write_holder_csv<S: Real, W: Write>(report: &AnalysisReport<S>, mut out: W) -> io::Result<()> {
    writeln!(out, "chain,center_x0,center_x1,r0,levels,drop_first,mu_hat,intercept,r2")?;
    for (k, c) in report.chains.iter().enumerate() {
        let f = &c.fit;
        writeln!(
            out,
            "{k},{},{},{},{},{},{},{},{}",
            f.chain.center[0],
            f.chain.center[1],
            f.chain.radii[0],
            f.chain.radii.len(),
            c.spec.drop_first,
            f.mu_hat,
            f.intercept,
            f.r2
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, ScalarField};
    use crate::solver::Provenance;

    #[test]
    fn default_config_round_trips() {
        let cfg = BatteryConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<BatteryConfig>(&json).unwrap(), cfg);
        let partial: BatteryConfig = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert!(serde_json::from_str::<BatteryConfig>(r#"{"sed": 7}"#).is_err());
    }

    #[test]
    fn invalid_radii_rejected() {
        let mut cfg = BatteryConfig::default();
        cfg.moser[0].radius = -0.1;
        assert!(matches!(cfg.validate(), Err(AnalyzerError::InvalidConfig(_))));
    }

    #[test]
    fn violated_hjb_fails_the_report() {
        let g = GridSpec::nodal(2, &[64, 64], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let pair = SolutionPair {
            u: ScalarField::from_fn(g, |x| 1.0 + x[0] * x[1]).unwrap(),
            m: ScalarField::constant(g, 1.0),
            provenance: Provenance::Loaded,
            gamma: None,
            diagnostics: None,
        };
        let model = HamiltonianModel::separable_gamma(4.0).unwrap();
        let report = run_battery(&pair, &model, &BatteryConfig::default()).unwrap();
        assert!(!report.passed());
        assert!(report.failures().any(|r| r.name == "hjb_identity"));
        let mut csv = Vec::new();
        write_analysis_csv(&report, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), report.records.len() + 1);
        assert!(text.contains("hjb_identity"));
    }
}
