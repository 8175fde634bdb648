//! Monte Carlo experiments: type I error tables and power curves for the four
//! tests under the simulation cases and randomization schemes.

mod generate;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::four_tests;
use crate::data::TrialData;
use crate::error::{Error, Result};
use crate::randomization::SchemeConfig;
use crate::rng::{stream, Purpose};
use crate::stats::{critical_value, TestMethod};

pub use generate::{
    discretize, draw_censoring_time, draw_event_time, generate_trial, ETA, ETA_CENSOR, W_DIM,
};

/// Upper standard-normal tercile.
pub const TERCILE: f64 = 0.430_727_299_295_457_6;

/// Data-generating model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Case {
    /// Cox model, uniform censoring on (10, 40).
    I,
    /// Cox model, arm-dependent shifted exponential censoring.
    II,
    /// Non-Cox additive model, uniform censoring.
    III,
    /// Non-Cox additive model, arm-dependent censoring.
    IV,
    /// Case III event times with censoring hazard depending on arm and `W`.
    #[serde(rename = "cr_violation")]
    CrViolation { psi: f64 },
}

impl Case {
    pub fn label(&self) -> String {
        match self {
            Case::I => "I".into(),
            Case::II => "II".into(),
            Case::III => "III".into(),
            Case::IV => "IV".into(),
            Case::CrViolation { psi } => format!("cr_violation(psi={psi})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub case: Case,
    pub theta: f64,
    pub n: usize,
    /// Randomization scheme; its margins are taken from `z_cuts`.
    pub scheme: SchemeConfig,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Cut points discretizing the leading components of `W` into the
    /// margins of `Z`, one sorted list per margin.
    pub z_cuts: Vec<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            case: Case::I,
            theta: 0.0,
            n: 500,
            scheme: SchemeConfig::default(),
            replications: 10_000,
            seed: 1,
            alpha: 0.05,
            z_cuts: vec![vec![0.0], vec![-TERCILE, TERCILE]],
        }
    }
}

impl ScenarioConfig {
    /// Smaller design with two-level margins.
    pub fn n200() -> Self {
        Self {
            n: 200,
            z_cuts: vec![vec![0.0], vec![0.0]],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig("n must be at least 2".into()));
        }
        if self.z_cuts.is_empty() || self.z_cuts.len() > W_DIM - 1 {
            return Err(Error::InvalidConfig(format!(
                "z_cuts needs between 1 and {} margins",
                W_DIM - 1
            )));
        }
        for cuts in &self.z_cuts {
            if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::InvalidConfig("z_cuts must be finite and increasing".into()));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidConfig("theta must be finite".into()));
        }
        if let Case::CrViolation { psi } = self.case {
            if !psi.is_finite() {
                return Err(Error::InvalidConfig("psi must be finite".into()));
            }
        }
        self.effective_scheme().validate()
    }

    pub fn margins(&self) -> Vec<usize> {
        self.z_cuts.iter().map(|c| c.len() + 1).collect()
    }

    pub fn effective_scheme(&self) -> SchemeConfig {
        self.scheme.clone().with_margins(self.margins())
    }

    /// Mixed-radix index of a margin-level vector, first margin fastest.
    pub fn joint_level(&self, z: &[usize]) -> u32 {
        let mut label = 0;
        let mut radix = 1;
        for (&level, levels) in z.iter().zip(self.margins()) {
            label += level * radix;
            radix *= levels;
        }
        label as u32
    }

    /// Trial of replication `rep`.
    pub fn replicate_data(&self, rep: u64) -> Result<TrialData> {
        generate_trial(self, &mut stream(self.seed, rep, Purpose::Trial))
    }
}

/// Rejection counts of one test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub rejections: u64,
    /// Replications where the statistic was computed.
    pub valid: u64,
    /// Replications skipped because the statistic was undefined.
    pub degenerate: u64,
}

impl Tally {
    pub fn rate(&self) -> f64 {
        if self.valid == 0 {
            f64::NAN
        } else {
            self.rejections as f64 / self.valid as f64
        }
    }

    /// `sqrt(r (1 - r) / valid)`.
    pub fn mc_se(&self) -> f64 {
        let r = self.rate();
        (r * (1.0 - r) / self.valid as f64).sqrt()
    }

    fn add(self, o: Tally) -> Tally {
        Tally {
            rejections: self.rejections + o.rejections,
            valid: self.valid + o.valid,
            degenerate: self.degenerate + o.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: ScenarioConfig,
    /// Indexed like [`TestMethod::ALL`].
    pub tallies: [Tally; 4],
    pub runtime_secs: f64,
}

impl MonteCarloReport {
    pub fn tally(&self, method: TestMethod) -> Tally {
        self.tallies[method_index(method)]
    }

    pub fn rate(&self, method: TestMethod) -> f64 {
        self.tally(method).rate()
    }

    pub fn mc_se(&self, method: TestMethod) -> f64 {
        self.tally(method).mc_se()
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        TestMethod::ALL
            .iter()
            .map(|&m| {
                let t = self.tally(m);
                ReportRow {
                    case: self.config.case.label(),
                    scheme: self.config.scheme.kind.label().to_string(),
                    test: m.label().to_string(),
                    theta: self.config.theta,
                    reps: self.config.replications as u64,
                    rejections: t.rejections,
                    rate: t.rate(),
                    mc_se: t.mc_se(),
                    degenerate: t.degenerate,
                }
            })
            .collect()
    }
}

fn method_index(method: TestMethod) -> usize {
    TestMethod::ALL
        .iter()
        .position(|&m| m == method)
        .expect("every method is listed")
}

/// One CSV row. `rate` is `rejections / (reps - degenerate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case: String,
    pub scheme: String,
    pub test: String,
    pub theta: f64,
    pub reps: u64,
    pub rejections: u64,
    pub rate: f64,
    pub mc_se: f64,
    pub degenerate: u64,
}

/// Rejection decisions of the four tests on replication `rep`; `None` marks
/// an undefined statistic.
pub fn replicate(config: &ScenarioConfig, rep: u64) -> [Option<bool>; 4] {
    let z = critical_value(config.alpha);
    let Ok(data) = config.replicate_data(rep) else {
        return [None; 4];
    };
    let tests = four_tests(&data, Some(config.scheme.pi));
    TestMethod::ALL.map(|m| {
        tests
            .get(m)
            .as_ref()
            .ok()
            .map(|t| t.statistic.abs() > z)
    })
}

fn tallies_of(decisions: [Option<bool>; 4]) -> [Tally; 4] {
    decisions.map(|d| match d {
        Some(reject) => Tally {
            rejections: reject as u64,
            valid: 1,
            degenerate: 0,
        },
        None => Tally {
            rejections: 0,
            valid: 0,
            degenerate: 1,
        },
    })
}

/// Runs all replications of one scenario on the current rayon pool.
pub fn run_scenario(config: &ScenarioConfig) -> Result<MonteCarloReport> {
    config.validate()?;
    let start = Instant::now();
    let tallies = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| tallies_of(replicate(config, rep)))
        .reduce(
            || [Tally::default(); 4],
            |a, b| std::array::from_fn(|i| a[i].add(b[i])),
        );
    Ok(MonteCarloReport {
        config: config.clone(),
        tallies,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Type I error rates; `config.theta` must be zero.
pub fn run_type1(config: &ScenarioConfig) -> Result<MonteCarloReport> {
    if config.theta != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "type I error runs need theta = 0, got {}",
            config.theta
        )));
    }
    run_scenario(config)
}

/// Rejection rates at every `theta` in `grid`. All grid points share the
/// replication streams.
pub fn run_power_curve(config: &ScenarioConfig, grid: &[f64]) -> Result<Vec<MonteCarloReport>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("theta grid is empty".into()));
    }
    grid.iter()
        .map(|&theta| {
            run_scenario(&ScenarioConfig {
                theta,
                ..config.clone()
            })
        })
        .collect()
}

pub fn write_report_csv<W: Write>(reports: &[MonteCarloReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for row in r.rows() {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A batch of scenarios: the cross product of `cases`, `schemes` and
/// `thetas` with the shared remaining settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationPlan {
    pub cases: Vec<Case>,
    pub schemes: Vec<SchemeConfig>,
    pub thetas: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    pub z_cuts: Vec<Vec<f64>>,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        let base = ScenarioConfig::default();
        Self {
            cases: vec![Case::I],
            schemes: vec![SchemeConfig::default()],
            thetas: vec![0.0],
            n: base.n,
            replications: base.replications,
            seed: base.seed,
            alpha: base.alpha,
            z_cuts: base.z_cuts,
        }
    }
}

impl SimulationPlan {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn scenarios(&self) -> Result<Vec<ScenarioConfig>> {
        if self.cases.is_empty() || self.schemes.is_empty() || self.thetas.is_empty() {
            return Err(Error::InvalidConfig(
                "cases, schemes and thetas must be nonempty".into(),
            ));
        }
        let mut out = Vec::new();
        for &case in &self.cases {
            for scheme in &self.schemes {
                for &theta in &self.thetas {
                    let cfg = ScenarioConfig {
                        case,
                        theta,
                        n: self.n,
                        scheme: scheme.clone(),
                        replications: self.replications,
                        seed: self.seed,
                        alpha: self.alpha,
                        z_cuts: self.z_cuts.clone(),
                    };
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }

    pub fn run(&self) -> Result<Vec<MonteCarloReport>> {
        self.scenarios()?.iter().map(run_scenario).collect()
    }

    /// Runs on a dedicated pool of `threads` workers, or the global pool.
    pub fn run_with_threads(&self, threads: Option<usize>) -> Result<Vec<MonteCarloReport>> {
        match threads {
            None => self.run(),
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
                .install(|| self.run()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> ScenarioConfig {
        ScenarioConfig {
            n: 100,
            replications: reps,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn alpha_one_always_rejects() {
        let r = run_type1(&ScenarioConfig { alpha: 1.0, ..small(20) }).unwrap();
        for m in TestMethod::ALL {
            assert_eq!(r.rate(m), 1.0);
        }
    }

    #[test]
    fn type1_needs_zero_theta() {
        assert!(run_type1(&ScenarioConfig { theta: 0.1, ..small(1) }).is_err());
    }

    #[test]
    fn reproducible() {
        let a = run_scenario(&small(30)).unwrap();
        let b = run_scenario(&small(30)).unwrap();
        assert_eq!(a.tallies, b.tallies);
    }

    #[test]
    fn joint_levels_are_distinct() {
        let cfg = ScenarioConfig::default();
        let mut labels: Vec<u32> = (0..2)
            .flat_map(|a| (0..3).map(move |b| vec![a, b]))
            .map(|z| cfg.joint_level(&z))
            .collect();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn plan_defaults_and_json() {
        let plan = SimulationPlan::from_json(
            r#"{"cases": ["I", {"cr_violation": {"psi": 1.0}}],
                "schemes": [{"kind": "permuted_block"}], "replications": 5}"#,
        )
        .unwrap();
        let s = plan.scenarios().unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].case, Case::CrViolation { psi: 1.0 });
        assert_eq!(s[0].n, 500);
        assert_eq!(s[0].scheme.block_size, 4);
        assert!(SimulationPlan::from_json(r#"{"bogus": 1}"#).is_err());
    }
}
