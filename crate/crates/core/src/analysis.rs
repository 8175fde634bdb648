//! Full analysis of one dataset: the four tests, the four hazard-ratio
//! estimators and an optional per-stratum sub-group analysis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adjustment::{adjusted_test, fit_beta, fit_gamma, resolve_pi};
use crate::data::TrialData;
use crate::error::{Error, Result};
use crate::hazard::{
    solve_theta_adjusted, solve_theta_adjusted_stratified, solve_theta_stratified,
    solve_theta_unadjusted, EstimationOptions, HazardEstimate,
};
use crate::logrank::{DerivedOutcomes, LogRankComponents};
use crate::risk_set::RiskSetPartition;
use crate::stats::{bonferroni, TestMethod, TestResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The four tests computed on one dataset, sharing risk sets and derived
/// outcomes.
///
/// `T_CL` adjusts for the covariates plus indicators of all but the smallest
/// stratum label; `T_CSL` adjusts for the covariates within strata.
#[derive(Debug)]
pub struct TestSet {
    pub logrank: Result<TestResult>,
    pub adjusted: Result<TestResult>,
    pub stratified: Result<TestResult>,
    pub adjusted_stratified: Result<TestResult>,
}

impl TestSet {
    pub fn get(&self, method: TestMethod) -> &Result<TestResult> {
        match method {
            TestMethod::Logrank => &self.logrank,
            TestMethod::AdjustedLogrank => &self.adjusted,
            TestMethod::StratifiedLogrank => &self.stratified,
            TestMethod::AdjustedStratifiedLogrank => &self.adjusted_stratified,
        }
    }
}

pub fn four_tests(data: &TrialData, pi: Option<f64>) -> TestSet {
    let pi = resolve_pi(data, pi);

    let pooled = RiskSetPartition::pooled(data);
    let strata = RiskSetPartition::by_stratum(data);
    // Both partitions hold the same events, so both fail only without events.
    let (Ok(pooled_c), Ok(strat_c)) = (
        LogRankComponents::from_partition(&pooled),
        LogRankComponents::from_partition(&strata),
    ) else {
        return TestSet {
            logrank: Err(Error::NoEvents),
            adjusted: Err(Error::NoEvents),
            stratified: Err(Error::NoEvents),
            adjusted_stratified: Err(Error::NoEvents),
        };
    };

    let adjusted = if data.dim() == 0 {
        Err(Error::NoCovariates)
    } else {
        (|| {
            let outcomes = DerivedOutcomes {
                values: pooled.derived_outcomes(data, 0.0)?,
                stratified: false,
            };
            let design = data.with_stratum_dummies();
            let fit = fit_beta(&design, &outcomes)?;
            adjusted_test(TestMethod::AdjustedLogrank, &design, &pooled_c, &fit, pi)
        })()
    };
    let adjusted_stratified = if data.dim() == 0 {
        Err(Error::NoCovariates)
    } else {
        (|| {
            let outcomes = DerivedOutcomes {
                values: strata.derived_outcomes(data, 0.0)?,
                stratified: true,
            };
            let fit = fit_gamma(data, &outcomes)?;
            adjusted_test(TestMethod::AdjustedStratifiedLogrank, data, &strat_c, &fit, pi)
        })()
    };

    TestSet {
        logrank: pooled_c.test(TestMethod::Logrank),
        adjusted,
        stratified: strat_c.test(TestMethod::StratifiedLogrank),
        adjusted_stratified,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Design proportion for the variance reduction; `None` uses `n1 / n`.
    pub pi: Option<f64>,
    pub alpha: f64,
    /// Confidence level of the hazard-ratio intervals.
    pub level: f64,
    /// Also analyze every stratum as a separate sub-group.
    pub subgroups: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            pi: None,
            alpha: 0.05,
            level: 0.95,
            subgroups: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCell {
    pub method: TestMethod,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub result: Option<TestResult>,
    /// Bonferroni-adjusted p-value (sub-groups only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_adjusted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rejects: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unavailable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCell {
    pub method: TestMethod,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub estimate: Option<HazardEstimate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unavailable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub stratum: u32,
    pub n: usize,
    pub n_treated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub n_treated: usize,
    pub n_events: usize,
    pub covariates: Vec<String>,
    pub strata: Vec<StratumSummary>,
}

impl DatasetSummary {
    fn of(data: &TrialData) -> Self {
        Self {
            n: data.n(),
            n_treated: data.n_treated(),
            n_events: data.n_events(),
            covariates: data.covariate_names().to_vec(),
            strata: data
                .stratum_counts()
                .into_iter()
                .map(|(stratum, [c0, c1])| StratumSummary {
                    stratum,
                    n: c0 + c1,
                    n_treated: c1,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub n: usize,
    pub tests: Vec<TestCell>,
    pub estimates: Vec<EstimateCell>,
}

impl Section {
    pub fn test(&self, method: TestMethod) -> Option<&TestResult> {
        self.tests
            .iter()
            .find(|c| c.method == method)
            .and_then(|c| c.result.as_ref())
    }

    pub fn estimate(&self, method: TestMethod) -> Option<&HazardEstimate> {
        self.estimates
            .iter()
            .find(|c| c.method == method)
            .and_then(|c| c.estimate.as_ref())
    }

    pub fn has_errors(&self) -> bool {
        self.tests.iter().any(|c| c.unavailable.is_some())
            || self.estimates.iter().any(|c| c.unavailable.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub stratum: u32,
    #[serde(flatten)]
    pub section: Section,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub level: f64,
    /// Design proportion supplied by the caller, if any.
    pub pi: Option<f64>,
    pub summary: DatasetSummary,
    pub all_patients: Section,
    /// Number of sub-groups used in the Bonferroni correction.
    pub bonferroni_m: usize,
    pub subgroups: Vec<Subgroup>,
}

fn test_cell(method: TestMethod, r: Result<&TestResult, &Error>, alpha: f64) -> TestCell {
    match r {
        Ok(t) => TestCell {
            method,
            rejects: Some(t.rejects(alpha)),
            result: Some(*t),
            p_adjusted: None,
            unavailable: None,
        },
        Err(e) => TestCell {
            method,
            result: None,
            p_adjusted: None,
            rejects: None,
            unavailable: Some(e.to_string()),
        },
    }
}

fn estimate_cell(method: TestMethod, r: Result<HazardEstimate>) -> EstimateCell {
    match r {
        Ok(e) => EstimateCell {
            method,
            estimate: Some(e),
            unavailable: None,
        },
        Err(e) => EstimateCell {
            method,
            estimate: None,
            unavailable: Some(e.to_string()),
        },
    }
}

fn section(data: &TrialData, opts: &AnalysisOptions, methods: &[TestMethod]) -> Section {
    let tests = four_tests(data, opts.pi);
    let est_opts = EstimationOptions {
        pi: opts.pi,
        level: opts.level,
        ..EstimationOptions::default()
    };
    let design = data.with_stratum_dummies();
    let mut test_cells = Vec::new();
    let mut estimates = Vec::new();
    for &m in methods {
        test_cells.push(test_cell(m, tests.get(m).as_ref(), opts.alpha));
        let est = match m {
            TestMethod::Logrank => solve_theta_unadjusted(data, &est_opts),
            TestMethod::AdjustedLogrank if data.dim() == 0 => Err(Error::NoCovariates),
            TestMethod::AdjustedLogrank => solve_theta_adjusted(&design, &est_opts),
            TestMethod::StratifiedLogrank => solve_theta_stratified(data, &est_opts),
            TestMethod::AdjustedStratifiedLogrank => {
                solve_theta_adjusted_stratified(data, &est_opts)
            }
        };
        estimates.push(estimate_cell(m, est));
    }
    Section {
        n: data.n(),
        tests: test_cells,
        estimates,
    }
}

/// Runs all four tests and estimators on `data`; with `opts.subgroups`, also
/// runs `T_L` and `T_CL` within every stratum with Bonferroni-adjusted
/// p-values. Failures are reported per cell.
pub fn analyze(data: &TrialData, opts: &AnalysisOptions) -> AnalysisReport {
    let all_patients = section(data, opts, &TestMethod::ALL);
    let mut subgroups = Vec::new();
    let strata = data.strata();
    let m = if opts.subgroups { strata.len() } else { 0 };
    if opts.subgroups {
        for z in strata {
            let sec = match data.stratum_subset(z) {
                Ok(sub) => section(
                    &sub,
                    opts,
                    &[TestMethod::Logrank, TestMethod::AdjustedLogrank],
                ),
                Err(e) => Section {
                    n: 0,
                    tests: [TestMethod::Logrank, TestMethod::AdjustedLogrank]
                        .into_iter()
                        .map(|meth| test_cell(meth, Err(&e), opts.alpha))
                        .collect(),
                    estimates: vec![],
                },
            };
            let mut sec = sec;
            for cell in &mut sec.tests {
                if let Some(r) = &cell.result {
                    let adj = bonferroni(r.p_value, m);
                    cell.p_adjusted = Some(adj);
                    cell.rejects = Some(adj < opts.alpha);
                }
            }
            subgroups.push(Subgroup {
                stratum: z,
                section: sec,
            });
        }
    }
    AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        alpha: opts.alpha,
        level: opts.level,
        pi: opts.pi,
        summary: DatasetSummary::of(data),
        all_patients,
        bonferroni_m: m,
        subgroups,
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn has_errors(&self) -> bool {
        self.all_patients.has_errors() || self.subgroups.iter().any(|g| g.section.has_errors())
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn write_section(f: &mut fmt::Formatter<'_>, title: &str, sec: &Section) -> fmt::Result {
    writeln!(f, "{title} (n = {})", sec.n)?;
    writeln!(
        f,
        "  {:<6} {:>10} {:>8} {:>8} {:>8} {:>8} {:>9} {:>8}",
        "test", "sqrt(n)U", "sigma", "T", "p", "p_adj", "theta", "se"
    )?;
    for cell in &sec.tests {
        let est = sec
            .estimates
            .iter()
            .find(|e| e.method == cell.method)
            .and_then(|e| e.estimate.as_ref());
        match &cell.result {
            Some(r) => {
                let p_adj = cell.p_adjusted.map_or("-".to_string(), fmt_p);
                let (th, se) = est.map_or(("n/a".to_string(), "n/a".to_string()), |e| {
                    (format!("{:.3}", e.theta), format!("{:.3}", e.se))
                });
                writeln!(
                    f,
                    "  {:<6} {:>10.3} {:>8.3} {:>8.3} {:>8} {:>8} {:>9} {:>8}",
                    cell.method.label(),
                    r.numerator,
                    r.se,
                    r.statistic,
                    fmt_p(r.p_value),
                    p_adj,
                    th,
                    se
                )?;
            }
            None => writeln!(
                f,
                "  {:<6} unavailable: {}",
                cell.method.label(),
                cell.unavailable.as_deref().unwrap_or("unknown")
            )?,
        }
    }
    Ok(())
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.summary;
        writeln!(
            f,
            "n = {} (arm 1: {}, events: {}), covariates: [{}]",
            s.n,
            s.n_treated,
            s.n_events,
            s.covariates.join(", ")
        )?;
        for z in &s.strata {
            writeln!(f, "  stratum {}: n = {} (arm 1: {})", z.stratum, z.n, z.n_treated)?;
        }
        write_section(f, "All patients", &self.all_patients)?;
        for g in &self.subgroups {
            write_section(
                f,
                &format!("Sub-group stratum {} (Bonferroni m = {})", g.stratum, self.bonferroni_m),
                &g.section,
            )?;
        }
        Ok(())
    }
}
