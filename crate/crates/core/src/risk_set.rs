//! Counting-process summaries: per-arm at-risk and event counts at each
//! distinct event time.
//!
//! Counts are kept as integers. A subject is at risk at `t` when its
//! follow-up time is `>= t`, and all events tied at `t` share that risk set.

use std::cmp::Ordering;

use crate::data::{SubjectRecord, TrialData};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskSetSeries {
    /// Strictly increasing distinct event times.
    pub times: Vec<f64>,
    pub at_risk1: Vec<u64>,
    pub at_risk0: Vec<u64>,
    pub events1: Vec<u64>,
    pub events0: Vec<u64>,
}

impl RiskSetSeries {
    pub fn from_subjects<'a, I>(subjects: I) -> Self
    where
        I: IntoIterator<Item = &'a SubjectRecord>,
    {
        let mut obs: Vec<(f64, bool, u8)> = subjects
            .into_iter()
            .map(|s| (s.time, s.event, s.arm))
            .collect();
        obs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut r = [0u64; 2];
        for &(_, _, arm) in &obs {
            r[arm as usize] += 1;
        }

        let mut series = RiskSetSeries::default();
        let mut i = 0;
        while i < obs.len() {
            let t = obs[i].0;
            let mut d = [0u64; 2];
            let mut leaving = [0u64; 2];
            while i < obs.len() && obs[i].0.total_cmp(&t) == Ordering::Equal {
                let (_, event, arm) = obs[i];
                leaving[arm as usize] += 1;
                if event {
                    d[arm as usize] += 1;
                }
                i += 1;
            }
            if d[0] + d[1] > 0 {
                series.times.push(t);
                series.at_risk1.push(r[1]);
                series.at_risk0.push(r[0]);
                series.events1.push(d[1]);
                series.events0.push(d[0]);
            }
            r[0] -= leaving[0];
            r[1] -= leaving[1];
        }
        series
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_events(&self) -> u64 {
        self.events1.iter().sum::<u64>() + self.events0.iter().sum::<u64>()
    }

    /// Number of event times `<= t`.
    pub fn count_upto(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Sums of the partial-likelihood score and its negative derivative at
    /// `exp_theta = e^theta`, before division by `n`.
    pub(crate) fn score_sums(&self, exp_theta: f64) -> (f64, f64) {
        let mut u = 0.0;
        let mut g = 0.0;
        for k in 0..self.len() {
            let r1 = self.at_risk1[k] as f64;
            let r0 = self.at_risk0[k] as f64;
            let d1 = self.events1[k] as f64;
            let d0 = self.events0[k] as f64;
            let d = d1 + d0;
            let s = exp_theta * r1 + r0;
            // d1 - e r1 d / S, without cancellation for large e.
            u += (d1 * r0 - d0 * exp_theta * r1) / s;
            g += d * exp_theta * r1 * r0 / (s * s);
        }
        (u, g)
    }

    /// Cumulative compensator terms for each arm: entry `k` is
    /// `sum_{l <= k} w_j(t_l) * e^{j theta} d(t_l) / S(t_l)`, together with the
    /// jump weights `w_j(t_k)`.
    pub(crate) fn compensators(&self, exp_theta: f64) -> Compensators {
        let m = self.len();
        let mut c = Compensators {
            weight: [Vec::with_capacity(m), Vec::with_capacity(m)],
            cumulative: [Vec::with_capacity(m), Vec::with_capacity(m)],
        };
        let mut acc = [0.0f64; 2];
        for k in 0..m {
            let r1 = self.at_risk1[k] as f64;
            let r0 = self.at_risk0[k] as f64;
            let d = (self.events1[k] + self.events0[k]) as f64;
            let s = exp_theta * r1 + r0;
            let w1 = r0 / s;
            let w0 = exp_theta * r1 / s;
            acc[1] += w1 * (exp_theta * d / s);
            acc[0] += w0 * (d / s);
            c.weight[1].push(w1);
            c.weight[0].push(w0);
            c.cumulative[1].push(acc[1]);
            c.cumulative[0].push(acc[0]);
        }
        c
    }
}

pub(crate) struct Compensators {
    weight: [Vec<f64>; 2],
    cumulative: [Vec<f64>; 2],
}

impl Compensators {
    /// Derived outcome of one subject against the series it belongs to.
    pub(crate) fn outcome(&self, series: &RiskSetSeries, s: &SubjectRecord) -> f64 {
        let j = s.arm as usize;
        let m = series.count_upto(s.time);
        if m == 0 {
            return 0.0;
        }
        let jump = if s.event { self.weight[j][m - 1] } else { 0.0 };
        jump - self.cumulative[j][m - 1]
    }
}

/// Risk sets of the whole dataset, or of one stratum.
pub fn build_risk_sets(data: &TrialData, stratum_filter: Option<u32>) -> Result<RiskSetSeries> {
    match stratum_filter {
        None => Ok(RiskSetSeries::from_subjects(data.subjects())),
        Some(z) => {
            let mut members = data.subjects().iter().filter(|s| s.stratum == z).peekable();
            if members.peek().is_none() {
                return Err(Error::EmptyData);
            }
            Ok(RiskSetSeries::from_subjects(members))
        }
    }
}

/// Subjects grouped for pooled or stratified analysis, each group carrying
/// its own risk sets.
#[derive(Debug, Clone)]
pub struct RiskSetPartition {
    groups: Vec<RiskGroup>,
    n: usize,
}

#[derive(Debug, Clone)]
pub struct RiskGroup {
    pub stratum: Option<u32>,
    pub members: Vec<usize>,
    pub series: RiskSetSeries,
}

impl RiskSetPartition {
    pub fn pooled(data: &TrialData) -> Self {
        let series = RiskSetSeries::from_subjects(data.subjects());
        Self {
            groups: vec![RiskGroup {
                stratum: None,
                members: (0..data.n()).collect(),
                series,
            }],
            n: data.n(),
        }
    }

    pub fn by_stratum(data: &TrialData) -> Self {
        let mut members: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for (i, s) in data.subjects().iter().enumerate() {
            members.entry(s.stratum).or_default().push(i);
        }
        let subjects = data.subjects();
        let groups = members
            .into_iter()
            .map(|(z, idx)| RiskGroup {
                stratum: Some(z),
                series: RiskSetSeries::from_subjects(idx.iter().map(|&i| &subjects[i])),
                members: idx,
            })
            .collect();
        Self { groups, n: data.n() }
    }

    pub fn groups(&self) -> &[RiskGroup] {
        &self.groups
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_events(&self) -> u64 {
        self.groups.iter().map(|g| g.series.total_events()).sum()
    }

    /// `(U(theta), g(theta))`, both scaled by `1/n`.
    pub fn score(&self, theta: f64) -> Result<(f64, f64)> {
        if self.total_events() == 0 {
            return Err(Error::NoEvents);
        }
        let e = theta.exp();
        let (mut u, mut g) = (0.0, 0.0);
        for grp in &self.groups {
            let (gu, gg) = grp.series.score_sums(e);
            u += gu;
            g += gg;
        }
        let n = self.n as f64;
        Ok((u / n, g / n))
    }

    /// Per-subject derived outcomes at `theta`, in dataset order.
    pub fn derived_outcomes(&self, data: &TrialData, theta: f64) -> Result<Vec<f64>> {
        if self.total_events() == 0 {
            return Err(Error::NoEvents);
        }
        let e = theta.exp();
        let subjects = data.subjects();
        let mut out = vec![0.0; self.n];
        for grp in &self.groups {
            if grp.series.is_empty() {
                continue;
            }
            let comp = grp.series.compensators(e);
            for &i in &grp.members {
                out[i] = comp.outcome(&grp.series, &subjects[i]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(time: f64, event: bool, arm: u8) -> SubjectRecord {
        SubjectRecord::new(time, event, arm, 0, vec![])
    }

    #[test]
    fn two_subject_set() {
        let s = [rec(1.0, true, 1), rec(2.0, false, 0)];
        let series = RiskSetSeries::from_subjects(&s);
        assert_eq!(series.times, vec![1.0]);
        assert_eq!(series.at_risk1, vec![1]);
        assert_eq!(series.at_risk0, vec![1]);
        assert_eq!(series.events1, vec![1]);
        assert_eq!(series.events0, vec![0]);
    }

    #[test]
    fn all_censored_is_empty() {
        let s = [rec(1.0, false, 1), rec(2.0, false, 0)];
        assert!(RiskSetSeries::from_subjects(&s).is_empty());
    }

    #[test]
    fn tied_events_share_one_entry() {
        // Hand enumeration: at t=1 all four are at risk, one event per arm.
        let s = [
            rec(1.0, true, 1),
            rec(1.0, true, 0),
            rec(3.0, false, 1),
            rec(2.0, true, 0),
        ];
        let series = RiskSetSeries::from_subjects(&s);
        assert_eq!(series.times, vec![1.0, 2.0]);
        assert_eq!(series.at_risk1, vec![2, 1]);
        assert_eq!(series.at_risk0, vec![2, 1]);
        assert_eq!(series.events1, vec![1, 0]);
        assert_eq!(series.events0, vec![1, 1]);
    }

    #[test]
    fn censoring_at_event_time_still_at_risk() {
        let s = [rec(1.0, true, 1), rec(1.0, false, 0), rec(5.0, true, 0)];
        let series = RiskSetSeries::from_subjects(&s);
        assert_eq!(series.at_risk0[0], 2);
        assert_eq!(series.at_risk0[1], 1);
        assert_eq!(series.at_risk1[1], 0);
    }

    #[test]
    fn stratum_filter_requires_members() {
        let data = TrialData::new(vec![rec(1.0, true, 1), rec(2.0, false, 0)]).unwrap();
        assert!(matches!(build_risk_sets(&data, Some(4)), Err(Error::EmptyData)));
        assert_eq!(build_risk_sets(&data, Some(0)).unwrap().len(), 1);
    }
}
