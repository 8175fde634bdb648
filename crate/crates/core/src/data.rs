//! Trial records and dataset validation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One patient: follow-up, event flag, arm, stratum and baseline covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    /// Observed follow-up, `min(T, C)`.
    pub time: f64,
    /// `true` if the follow-up ended in an event, `false` if censored.
    pub event: bool,
    /// Treatment indicator, 0 or 1.
    pub arm: u8,
    /// Level of the discrete randomization covariate.
    pub stratum: u32,
    pub covariates: Vec<f64>,
}

impl SubjectRecord {
    pub fn new(time: f64, event: bool, arm: u8, stratum: u32, covariates: Vec<f64>) -> Self {
        Self {
            time,
            event,
            arm,
            stratum,
            covariates,
        }
    }

    #[inline]
    pub fn is_treated(&self) -> bool {
        self.arm == 1
    }
}

/// A validated dataset.
///
/// Every subject has a finite nonnegative time, arm in {0, 1} and the same
/// covariate dimension; both arms are represented and `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    subjects: Vec<SubjectRecord>,
    dim: usize,
    covariate_names: Vec<String>,
}

impl TrialData {
    pub fn new(subjects: Vec<SubjectRecord>) -> Result<Self> {
        let dim = subjects.first().map_or(0, |s| s.covariates.len());
        let names = (1..=dim).map(|j| format!("x{j}")).collect();
        Self::with_names(subjects, names)
    }

    pub fn with_names(subjects: Vec<SubjectRecord>, covariate_names: Vec<String>) -> Result<Self> {
        if subjects.is_empty() {
            return Err(Error::EmptyData);
        }
        let dim = subjects[0].covariates.len();
        if covariate_names.len() != dim {
            return Err(Error::InvalidData(format!(
                "{} covariate names for dimension {dim}",
                covariate_names.len()
            )));
        }
        let mut arms = [0usize; 2];
        for (i, s) in subjects.iter().enumerate() {
            if !(s.time.is_finite() && s.time >= 0.0) {
                return Err(Error::InvalidData(format!(
                    "subject {i}: time {} is not a nonnegative number",
                    s.time
                )));
            }
            if s.arm > 1 {
                return Err(Error::InvalidData(format!("subject {i}: arm {}", s.arm)));
            }
            if s.covariates.len() != dim {
                return Err(Error::InvalidData(format!(
                    "subject {i}: {} covariates, expected {dim}",
                    s.covariates.len()
                )));
            }
            if s.covariates.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "subject {i}: non-finite covariate"
                )));
            }
            arms[s.arm as usize] += 1;
        }
        if subjects.len() < 2 {
            return Err(Error::InvalidData("need at least two subjects".into()));
        }
        if arms[0] == 0 || arms[1] == 0 {
            return Err(Error::InvalidData(
                "both arms must contain at least one subject".into(),
            ));
        }
        Ok(Self {
            subjects,
            dim,
            covariate_names,
        })
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn into_subjects(self) -> Vec<SubjectRecord> {
        self.subjects
    }

    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    /// Covariate dimension `p`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_treated(&self) -> usize {
        self.subjects.iter().filter(|s| s.is_treated()).count()
    }

    pub fn n_events(&self) -> usize {
        self.subjects.iter().filter(|s| s.event).count()
    }

    /// Sorted distinct stratum labels.
    pub fn strata(&self) -> Vec<u32> {
        self.stratum_counts().into_keys().collect()
    }

    /// Subjects per stratum as `[arm0, arm1]` counts.
    pub fn stratum_counts(&self) -> BTreeMap<u32, [usize; 2]> {
        let mut counts = BTreeMap::new();
        for s in &self.subjects {
            counts.entry(s.stratum).or_insert([0usize; 2])[s.arm as usize] += 1;
        }
        counts
    }

    /// `n x p` covariate matrix.
    pub fn covariate_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.dim, |i, j| self.subjects[i].covariates[j])
    }

    /// Subset of subjects in one stratum, as an independent dataset.
    pub fn stratum_subset(&self, stratum: u32) -> Result<TrialData> {
        let subjects: Vec<_> = self
            .subjects
            .iter()
            .filter(|s| s.stratum == stratum)
            .cloned()
            .collect();
        if subjects.is_empty() {
            return Err(Error::EmptyData);
        }
        TrialData::with_names(subjects, self.covariate_names.clone())
    }

    /// Appends `L - 1` stratum indicator columns, with the smallest label as
    /// the reference level.
    pub fn with_stratum_dummies(&self) -> TrialData {
        let strata = self.strata();
        if strata.len() < 2 {
            return self.clone();
        }
        let levels = &strata[1..];
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.covariates
                    .extend(levels.iter().map(|&z| if s.stratum == z { 1.0 } else { 0.0 }));
                s
            })
            .collect();
        let mut names = self.covariate_names.clone();
        names.extend(levels.iter().map(|z| format!("stratum_{z}")));
        TrialData {
            subjects,
            dim: self.dim + levels.len(),
            covariate_names: names,
        }
    }

    /// Copy with arm labels exchanged.
    pub fn swap_arms(&self) -> TrialData {
        let subjects = self
            .subjects
            .iter()
            .map(|s| SubjectRecord {
                arm: 1 - s.arm,
                ..s.clone()
            })
            .collect();
        TrialData {
            subjects,
            dim: self.dim,
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Copy with every stratum label set to 0.
    pub fn pooled(&self) -> TrialData {
        let subjects = self
            .subjects
            .iter()
            .map(|s| SubjectRecord {
                stratum: 0,
                ..s.clone()
            })
            .collect();
        TrialData {
            subjects,
            dim: self.dim,
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Copy keeping only the listed covariate columns.
    pub fn select_covariates(&self, columns: &[usize]) -> Result<TrialData> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.dim) {
            return Err(Error::InvalidData(format!("covariate column {bad} out of range")));
        }
        let subjects = self
            .subjects
            .iter()
            .map(|s| SubjectRecord {
                covariates: columns.iter().map(|&c| s.covariates[c]).collect(),
                ..s.clone()
            })
            .collect();
        Ok(TrialData {
            subjects,
            dim: columns.len(),
            covariate_names: columns.iter().map(|&c| self.covariate_names[c].clone()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(time: f64, event: bool, arm: u8, z: u32) -> SubjectRecord {
        SubjectRecord::new(time, event, arm, z, vec![time])
    }

    #[test]
    fn rejects_single_arm() {
        let err = TrialData::new(vec![rec(1.0, true, 1, 0), rec(2.0, false, 1, 0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
    }

    #[test]
    fn rejects_negative_time_and_ragged_covariates() {
        assert!(TrialData::new(vec![rec(-1.0, true, 1, 0), rec(2.0, false, 0, 0)]).is_err());
        let mut b = rec(2.0, false, 0, 0);
        b.covariates.push(3.0);
        assert!(TrialData::new(vec![rec(1.0, true, 1, 0), b]).is_err());
        assert!(matches!(TrialData::new(vec![]), Err(Error::EmptyData)));
    }

    #[test]
    fn stratum_dummies_use_smallest_label_as_reference() {
        let data = TrialData::new(vec![
            rec(1.0, true, 1, 2),
            rec(2.0, false, 0, 5),
            rec(3.0, true, 0, 7),
        ])
        .unwrap();
        let d = data.with_stratum_dummies();
        assert_eq!(d.dim(), 3);
        assert_eq!(d.subjects()[0].covariates, vec![1.0, 0.0, 0.0]);
        assert_eq!(d.subjects()[1].covariates, vec![2.0, 1.0, 0.0]);
        assert_eq!(d.subjects()[2].covariates, vec![3.0, 0.0, 1.0]);
        assert_eq!(d.covariate_names(), ["x1", "stratum_5", "stratum_7"]);
    }
}
