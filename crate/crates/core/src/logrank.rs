//! Unadjusted and stratified log-rank statistics and the per-subject derived
//! outcomes that linearize them.

use serde::{Deserialize, Serialize};

use crate::data::TrialData;
use crate::error::Result;
use crate::risk_set::RiskSetPartition;
use crate::stats::{TestMethod, TestResult};

/// Log-rank numerator `U` and variance `sigma^2`, both on the `1/n` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRankComponents {
    pub u: f64,
    pub sigma2: f64,
    pub n: usize,
}

impl LogRankComponents {
    pub(crate) fn from_partition(part: &RiskSetPartition) -> Result<Self> {
        let (u, sigma2) = part.score(0.0)?;
        Ok(Self {
            u,
            sigma2,
            n: part.n(),
        })
    }

    pub fn test(&self, method: TestMethod) -> Result<TestResult> {
        TestResult::from_components(method, self.u, self.sigma2, self.n)
    }
}

/// Derived outcome per subject, in dataset order. Entry `i` holds the outcome
/// for the arm subject `i` actually received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedOutcomes {
    pub values: Vec<f64>,
    pub stratified: bool,
}

impl DerivedOutcomes {
    /// `(1/n) sum { I_i O_i1 - (1 - I_i) O_i0 }`.
    pub fn signed_mean(&self, data: &TrialData) -> f64 {
        let total: f64 = data
            .subjects()
            .iter()
            .zip(&self.values)
            .map(|(s, &o)| if s.is_treated() { o } else { -o })
            .sum();
        total / data.n() as f64
    }
}

pub fn logrank_components(data: &TrialData) -> Result<LogRankComponents> {
    LogRankComponents::from_partition(&RiskSetPartition::pooled(data))
}

pub fn stratified_logrank_components(data: &TrialData) -> Result<LogRankComponents> {
    LogRankComponents::from_partition(&RiskSetPartition::by_stratum(data))
}

pub fn derived_outcomes(data: &TrialData) -> Result<DerivedOutcomes> {
    Ok(DerivedOutcomes {
        values: RiskSetPartition::pooled(data).derived_outcomes(data, 0.0)?,
        stratified: false,
    })
}

/// Derived outcomes computed against within-stratum risk sets. Subjects of a
/// stratum without events get 0.
pub fn stratified_derived_outcomes(data: &TrialData) -> Result<DerivedOutcomes> {
    Ok(DerivedOutcomes {
        values: RiskSetPartition::by_stratum(data).derived_outcomes(data, 0.0)?,
        stratified: true,
    })
}

pub fn logrank_test(data: &TrialData) -> Result<TestResult> {
    logrank_components(data)?.test(TestMethod::Logrank)
}

pub fn stratified_logrank_test(data: &TrialData) -> Result<TestResult> {
    stratified_logrank_components(data)?.test(TestMethod::StratifiedLogrank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::data::SubjectRecord;

    fn two_subjects() -> TrialData {
        TrialData::new(vec![
            SubjectRecord::new(1.0, true, 1, 0, vec![]),
            SubjectRecord::new(2.0, false, 0, 0, vec![]),
        ])
        .unwrap()
    }

    #[test]
    fn hand_computed_two_subject_set() {
        let data = two_subjects();
        let c = logrank_components(&data).unwrap();
        assert_eq!(c.u, 0.25);
        assert_eq!(c.sigma2, 0.125);
        let t = logrank_test(&data).unwrap();
        assert!((t.statistic - 1.0).abs() < 1e-15);
        assert!((t.p_value - 0.3173).abs() < 1e-4);
        let o = derived_outcomes(&data).unwrap();
        assert_eq!(o.values, vec![0.25, -0.25]);
    }

    #[test]
    fn all_censored_has_no_events() {
        let data = TrialData::new(vec![
            SubjectRecord::new(1.0, false, 1, 0, vec![]),
            SubjectRecord::new(2.0, false, 0, 0, vec![]),
        ])
        .unwrap();
        assert!(matches!(logrank_components(&data), Err(Error::NoEvents)));
        assert!(matches!(derived_outcomes(&data), Err(Error::NoEvents)));
        assert!(matches!(stratified_logrank_test(&data), Err(Error::NoEvents)));
    }

    #[test]
    fn no_control_at_risk_gives_zero_variance() {
        // The only control subject is censored before the event.
        let data = TrialData::new(vec![
            SubjectRecord::new(2.0, true, 1, 0, vec![]),
            SubjectRecord::new(1.0, false, 0, 0, vec![]),
        ])
        .unwrap();
        let c = logrank_components(&data).unwrap();
        assert_eq!(c.u, 0.0);
        assert_eq!(c.sigma2, 0.0);
        assert!(matches!(logrank_test(&data), Err(Error::ZeroVariance)));
    }

    #[test]
    fn two_identical_strata() {
        let mut subjects = two_subjects().into_subjects();
        subjects.extend(subjects.clone().into_iter().map(|mut s| {
            s.stratum = 1;
            s
        }));
        let data = TrialData::new(subjects).unwrap();
        let c = stratified_logrank_components(&data).unwrap();
        assert_eq!(c.u, 0.25);
        assert_eq!(c.sigma2, 0.125);
        assert_eq!(c.n, 4);
    }

    #[test]
    fn empty_stratum_outcomes_are_zero() {
        let data = TrialData::new(vec![
            SubjectRecord::new(1.0, true, 1, 0, vec![]),
            SubjectRecord::new(2.0, false, 0, 0, vec![]),
            SubjectRecord::new(3.0, false, 1, 1, vec![]),
            SubjectRecord::new(4.0, false, 0, 1, vec![]),
        ])
        .unwrap();
        let o = stratified_derived_outcomes(&data).unwrap();
        assert_eq!(o.values, vec![0.25, -0.25, 0.0, 0.0]);
        let c = stratified_logrank_components(&data).unwrap();
        assert!((o.signed_mean(&data) - c.u).abs() < 1e-15);
    }

    #[test]
    fn arm_swap_negates() {
        let data = TrialData::new(vec![
            SubjectRecord::new(1.0, true, 1, 0, vec![]),
            SubjectRecord::new(1.5, true, 0, 0, vec![]),
            SubjectRecord::new(2.0, false, 0, 0, vec![]),
            SubjectRecord::new(2.5, true, 1, 0, vec![]),
            SubjectRecord::new(3.0, true, 0, 0, vec![]),
        ])
        .unwrap();
        let a = logrank_test(&data).unwrap();
        let b = logrank_test(&data.swap_arms()).unwrap();
        assert!((a.statistic + b.statistic).abs() < 1e-14);
        assert!((a.p_value - b.p_value).abs() < 1e-14);
        assert!((a.se - b.se).abs() < 1e-15);
    }
}
