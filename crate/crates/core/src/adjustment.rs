//! Regression adjustment of the log-rank numerators on baseline covariates.
//!
//! The derived outcomes are regressed on covariates within each arm (and,
//! for the stratified test, within stratum-by-arm cells). The fitted linear
//! term is subtracted from the score, and the variance is reduced by
//! `pi (1 - pi) (b1 + b0)^T S (b1 + b0)` where `S` is the covariate
//! covariance (pooled within strata for the stratified test).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::data::TrialData;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, mean_of_rows, quadratic_form, sample_covariance};
use crate::logrank::{
    derived_outcomes, logrank_components, stratified_derived_outcomes,
    stratified_logrank_components, DerivedOutcomes, LogRankComponents,
};
use crate::stats::{TestMethod, TestResult};

/// Variances below this are treated as cancellation noise.
pub const MIN_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Unstratified,
    Stratified,
}

/// Centering used by the augmentation term.
#[derive(Debug, Clone, PartialEq)]
pub enum Centers {
    /// Overall covariate mean.
    Overall(DVector<f64>),
    /// Per-stratum covariate means.
    PerStratum(BTreeMap<u32, DVector<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentFit {
    pub beta1: DVector<f64>,
    pub beta0: DVector<f64>,
    /// Covariate covariance entering the variance reduction.
    pub sigma_x: DMatrix<f64>,
    pub centers: Centers,
    pub mode: FitMode,
}

impl AdjustmentFit {
    /// The same fit with both coefficient vectors set to zero.
    pub fn zeroed(&self) -> Self {
        Self {
            beta1: DVector::zeros(self.beta1.len()),
            beta0: DVector::zeros(self.beta0.len()),
            ..self.clone()
        }
    }

    /// `(1/n) sum { I_i (X_i - c_i)^T b1 - (1 - I_i) (X_i - c_i)^T b0 }`.
    pub fn augmentation(&self, data: &TrialData) -> f64 {
        if self.beta1.iter().chain(self.beta0.iter()).all(|&b| b == 0.0) {
            return 0.0;
        }
        let mut total = 0.0;
        for s in data.subjects() {
            let center = match &self.centers {
                Centers::Overall(c) => c,
                Centers::PerStratum(m) => &m[&s.stratum],
            };
            let (beta, sign) = if s.is_treated() {
                (&self.beta1, 1.0)
            } else {
                (&self.beta0, -1.0)
            };
            let lin: f64 = s
                .covariates
                .iter()
                .zip(center.iter())
                .zip(beta.iter())
                .map(|((x, c), b)| (x - c) * b)
                .sum();
            total += sign * lin;
        }
        total / data.n() as f64
    }

    /// `pi (1 - pi) (b1 + b0)^T S (b1 + b0)`.
    pub fn variance_reduction(&self, pi: f64) -> f64 {
        let b = &self.beta1 + &self.beta0;
        pi * (1.0 - pi) * quadratic_form(&self.sigma_x, &b)
    }
}

/// Design proportion: the caller's value, else the observed `n1 / n`.
pub fn resolve_pi(data: &TrialData, pi: Option<f64>) -> f64 {
    pi.unwrap_or_else(|| data.n_treated() as f64 / data.n() as f64)
}

/// Per-arm least squares of the derived outcomes on covariates centered at
/// the arm mean.
pub fn fit_beta(data: &TrialData, outcomes: &DerivedOutcomes) -> Result<AdjustmentFit> {
    if data.dim() == 0 {
        return Err(Error::NoCovariates);
    }
    let x = data.covariate_matrix();
    let all: Vec<usize> = (0..data.n()).collect();
    let arms = arm_rows(data);
    let mut betas = Vec::with_capacity(2);
    for arm in [1u8, 0] {
        let rows = &arms[arm as usize];
        let center = mean_of_rows(&x, rows);
        let cells = [(rows.as_slice(), &center)];
        betas.push(solve_cells(&x, &outcomes.values, &cells, arm)?);
    }
    let beta0 = betas.pop().unwrap();
    let beta1 = betas.pop().unwrap();
    Ok(AdjustmentFit {
        beta1,
        beta0,
        sigma_x: sample_covariance(&x, &all),
        centers: Centers::Overall(mean_of_rows(&x, &all)),
        mode: FitMode::Unstratified,
    })
}

/// Least squares pooled over stratum-by-arm cells, each centered at its own
/// mean. Every stratum must contain both arms.
pub fn fit_gamma(data: &TrialData, outcomes: &DerivedOutcomes) -> Result<AdjustmentFit> {
    if data.dim() == 0 {
        return Err(Error::NoCovariates);
    }
    let x = data.covariate_matrix();
    let n = data.n() as f64;
    let p = data.dim();

    let mut cells: BTreeMap<u32, [Vec<usize>; 2]> = BTreeMap::new();
    for (i, s) in data.subjects().iter().enumerate() {
        cells.entry(s.stratum).or_default()[s.arm as usize].push(i);
    }
    for (&z, by_arm) in &cells {
        for arm in [1u8, 0] {
            if by_arm[arm as usize].is_empty() {
                return Err(Error::RankDeficient {
                    arm,
                    stratum: Some(z),
                });
            }
        }
    }

    let mut gammas = Vec::with_capacity(2);
    for arm in [1u8, 0] {
        let centers: Vec<DVector<f64>> = cells
            .values()
            .map(|c| mean_of_rows(&x, &c[arm as usize]))
            .collect();
        let arm_cells: Vec<(&[usize], &DVector<f64>)> = cells
            .values()
            .zip(&centers)
            .map(|(c, m)| (c[arm as usize].as_slice(), m))
            .collect();
        gammas.push(solve_cells(&x, &outcomes.values, &arm_cells, arm)?);
    }
    let gamma0 = gammas.pop().unwrap();
    let gamma1 = gammas.pop().unwrap();

    let mut pooled = DMatrix::zeros(p, p);
    let mut means = BTreeMap::new();
    for (&z, by_arm) in &cells {
        let rows: Vec<usize> = by_arm.iter().flatten().copied().collect();
        pooled += sample_covariance(&x, &rows) * (rows.len() as f64 / n);
        means.insert(z, mean_of_rows(&x, &rows));
    }
    Ok(AdjustmentFit {
        beta1: gamma1,
        beta0: gamma0,
        sigma_x: pooled,
        centers: Centers::PerStratum(means),
        mode: FitMode::Stratified,
    })
}

fn arm_rows(data: &TrialData) -> [Vec<usize>; 2] {
    let mut rows = [Vec::new(), Vec::new()];
    for (i, s) in data.subjects().iter().enumerate() {
        rows[s.arm as usize].push(i);
    }
    rows
}

fn solve_cells(
    x: &DMatrix<f64>,
    y: &[f64],
    cells: &[(&[usize], &DVector<f64>)],
    arm: u8,
) -> Result<DVector<f64>> {
    let m: usize = cells.iter().map(|(r, _)| r.len()).sum();
    let p = x.ncols();
    let mut design = DMatrix::zeros(m, p);
    let mut response = DVector::zeros(m);
    let mut row = 0;
    for (rows, center) in cells {
        for &i in rows.iter() {
            for j in 0..p {
                design[(row, j)] = x[(i, j)] - center[j];
            }
            response[row] = y[i];
            row += 1;
        }
    }
    least_squares(&design, &response).ok_or(Error::RankDeficient { arm, stratum: None })
}

/// Adjusted test from precomputed components and fit.
pub fn adjusted_test(
    method: TestMethod,
    data: &TrialData,
    components: &LogRankComponents,
    fit: &AdjustmentFit,
    pi: f64,
) -> Result<TestResult> {
    let u = components.u - fit.augmentation(data);
    let sigma2 = components.sigma2 - fit.variance_reduction(pi);
    if sigma2 < MIN_VARIANCE {
        return Err(Error::NonpositiveVariance(sigma2));
    }
    TestResult::from_components(method, u, sigma2, data.n())
}

/// Covariate-adjusted log-rank test `T_CL`.
///
/// `data` covariates are used as given; callers wanting the randomization
/// strata in the adjustment should pass [`TrialData::with_stratum_dummies`].
pub fn adjusted_logrank(data: &TrialData, pi: Option<f64>) -> Result<TestResult> {
    let components = logrank_components(data)?;
    let outcomes = derived_outcomes(data)?;
    let fit = fit_beta(data, &outcomes)?;
    adjusted_test(
        TestMethod::AdjustedLogrank,
        data,
        &components,
        &fit,
        resolve_pi(data, pi),
    )
}

/// Covariate-adjusted stratified log-rank test `T_CSL`.
pub fn adjusted_stratified_logrank(data: &TrialData, pi: Option<f64>) -> Result<TestResult> {
    let components = stratified_logrank_components(data)?;
    let outcomes = stratified_derived_outcomes(data)?;
    let fit = fit_gamma(data, &outcomes)?;
    adjusted_test(
        TestMethod::AdjustedStratifiedLogrank,
        data,
        &components,
        &fit,
        resolve_pi(data, pi),
    )
}
