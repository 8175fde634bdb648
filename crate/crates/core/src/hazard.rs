//! Log hazard ratio estimation from the (stratified) partial-likelihood
//! score, with and without covariate augmentation.
//!
//! The adjusted estimators freeze the regression coefficients at the
//! unadjusted solution and solve `U(theta) - A = 0`, where `A` is the
//! augmentation term. Since `A` does not depend on `theta`, the adjusted and
//! unadjusted scores share the derivative `-g(theta)`.

use serde::{Deserialize, Serialize};

use crate::adjustment::{fit_beta, fit_gamma, resolve_pi, AdjustmentFit, MIN_VARIANCE};
use crate::data::TrialData;
use crate::error::{Error, Result};
use crate::logrank::DerivedOutcomes;
use crate::risk_set::RiskSetPartition;
use crate::root::{solve_decreasing, RootSolverConfig};
use crate::stats::{critical_value, TestMethod};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardEstimate {
    /// Test whose score defines the estimator.
    pub method: TestMethod,
    /// Estimated log hazard ratio of arm 1 versus arm 0.
    pub theta: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub level: f64,
    pub iterations: usize,
    /// Score value at `theta`.
    pub score_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationOptions {
    /// Design treatment proportion; `None` uses `n1 / n`.
    pub pi: Option<f64>,
    /// Confidence level of the interval.
    pub level: f64,
    pub solver: RootSolverConfig,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self {
            pi: None,
            level: 0.95,
            solver: RootSolverConfig::default(),
        }
    }
}

/// Score `U(theta)` and `g(theta) = -dU/dtheta` over a fixed grouping of
/// risk sets.
#[derive(Debug, Clone)]
pub struct ScoreProfile {
    partition: RiskSetPartition,
}

impl ScoreProfile {
    pub fn unstratified(data: &TrialData) -> Self {
        Self {
            partition: RiskSetPartition::pooled(data),
        }
    }

    pub fn stratified(data: &TrialData) -> Self {
        Self {
            partition: RiskSetPartition::by_stratum(data),
        }
    }

    pub fn is_stratified(&self) -> bool {
        self.partition.groups().iter().all(|g| g.stratum.is_some())
    }

    pub fn score(&self, theta: f64) -> Result<f64> {
        Ok(self.partition.score(theta)?.0)
    }

    pub fn derivative(&self, theta: f64) -> Result<f64> {
        Ok(self.partition.score(theta)?.1)
    }

    pub fn score_and_derivative(&self, theta: f64) -> Result<(f64, f64)> {
        self.partition.score(theta)
    }

    pub fn derived_outcomes(&self, data: &TrialData, theta: f64) -> Result<DerivedOutcomes> {
        Ok(DerivedOutcomes {
            values: self.partition.derived_outcomes(data, theta)?,
            stratified: self.is_stratified(),
        })
    }

    /// Root of `U(theta) - offset`.
    pub fn solve(&self, offset: f64, cfg: &RootSolverConfig) -> Result<crate::root::Root> {
        solve_decreasing(
            |t| {
                let (u, g) = self.partition.score(t)?;
                Ok((u - offset, g))
            },
            cfg,
        )
    }
}

pub fn score_unadjusted(data: &TrialData, theta: f64) -> Result<f64> {
    ScoreProfile::unstratified(data).score(theta)
}

pub fn score_derivative(data: &TrialData, theta: f64) -> Result<f64> {
    ScoreProfile::unstratified(data).derivative(theta)
}

pub fn derived_outcomes_at(data: &TrialData, theta: f64) -> Result<DerivedOutcomes> {
    ScoreProfile::unstratified(data).derived_outcomes(data, theta)
}

pub fn stratified_derived_outcomes_at(data: &TrialData, theta: f64) -> Result<DerivedOutcomes> {
    ScoreProfile::stratified(data).derived_outcomes(data, theta)
}

fn interval(theta: f64, se: f64, level: f64) -> (f64, f64) {
    let z = critical_value(1.0 - level);
    (theta - z * se, theta + z * se)
}

fn unadjusted(
    method: TestMethod,
    profile: &ScoreProfile,
    n: usize,
    opts: &EstimationOptions,
) -> Result<HazardEstimate> {
    let root = profile.solve(0.0, &opts.solver)?;
    let g = profile.derivative(root.x)?;
    if g.is_nan() || g <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let se = 1.0 / (n as f64 * g).sqrt();
    Ok(HazardEstimate {
        method,
        theta: root.x,
        se,
        ci: interval(root.x, se, opts.level),
        level: opts.level,
        iterations: root.iterations,
        score_residual: root.value,
    })
}

/// Adjusted estimate for a given augmentation fit.
pub fn solve_with_fit(
    method: TestMethod,
    data: &TrialData,
    profile: &ScoreProfile,
    fit: &AdjustmentFit,
    opts: &EstimationOptions,
) -> Result<HazardEstimate> {
    let offset = fit.augmentation(data);
    let root = profile.solve(offset, &opts.solver)?;
    let g = profile.derivative(root.x)?;
    if g.is_nan() || g <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let var = g - fit.variance_reduction(resolve_pi(data, opts.pi));
    if var < MIN_VARIANCE {
        return Err(Error::NonpositiveVariance(var));
    }
    let se = (var / (data.n() as f64 * g * g)).sqrt();
    Ok(HazardEstimate {
        method,
        theta: root.x,
        se,
        ci: interval(root.x, se, opts.level),
        level: opts.level,
        iterations: root.iterations,
        score_residual: root.value,
    })
}

/// Maximum partial likelihood estimate under `lambda_1 = lambda_0 e^theta`.
pub fn solve_theta_unadjusted(data: &TrialData, opts: &EstimationOptions) -> Result<HazardEstimate> {
    unadjusted(
        TestMethod::Logrank,
        &ScoreProfile::unstratified(data),
        data.n(),
        opts,
    )
}

/// Stratified partial-likelihood estimate under a common hazard ratio
/// across strata.
pub fn solve_theta_stratified(data: &TrialData, opts: &EstimationOptions) -> Result<HazardEstimate> {
    unadjusted(
        TestMethod::StratifiedLogrank,
        &ScoreProfile::stratified(data),
        data.n(),
        opts,
    )
}

/// Covariate-adjusted estimate with coefficients fitted to the derived
/// outcomes at the unadjusted estimate.
pub fn solve_theta_adjusted(data: &TrialData, opts: &EstimationOptions) -> Result<HazardEstimate> {
    let profile = ScoreProfile::unstratified(data);
    let start = unadjusted(TestMethod::Logrank, &profile, data.n(), opts)?;
    let outcomes = profile.derived_outcomes(data, start.theta)?;
    let fit = fit_beta(data, &outcomes)?;
    solve_with_fit(TestMethod::AdjustedLogrank, data, &profile, &fit, opts)
}

pub fn solve_theta_adjusted_stratified(
    data: &TrialData,
    opts: &EstimationOptions,
) -> Result<HazardEstimate> {
    let profile = ScoreProfile::stratified(data);
    let start = unadjusted(TestMethod::StratifiedLogrank, &profile, data.n(), opts)?;
    let outcomes = profile.derived_outcomes(data, start.theta)?;
    let fit = fit_gamma(data, &outcomes)?;
    solve_with_fit(
        TestMethod::AdjustedStratifiedLogrank,
        data,
        &profile,
        &fit,
        opts,
    )
}
