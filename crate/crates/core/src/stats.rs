use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestMethod {
    #[serde(rename = "T_L")]
    Logrank,
    #[serde(rename = "T_CL")]
    AdjustedLogrank,
    #[serde(rename = "T_SL")]
    StratifiedLogrank,
    #[serde(rename = "T_CSL")]
    AdjustedStratifiedLogrank,
}

impl TestMethod {
    pub const ALL: [TestMethod; 4] = [
        TestMethod::Logrank,
        TestMethod::AdjustedLogrank,
        TestMethod::StratifiedLogrank,
        TestMethod::AdjustedStratifiedLogrank,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TestMethod::Logrank => "T_L",
            TestMethod::AdjustedLogrank => "T_CL",
            TestMethod::StratifiedLogrank => "T_SL",
            TestMethod::AdjustedStratifiedLogrank => "T_CSL",
        }
    }

    pub fn is_adjusted(self) -> bool {
        matches!(
            self,
            TestMethod::AdjustedLogrank | TestMethod::AdjustedStratifiedLogrank
        )
    }

    pub fn is_stratified(self) -> bool {
        matches!(
            self,
            TestMethod::StratifiedLogrank | TestMethod::AdjustedStratifiedLogrank
        )
    }
}

impl std::fmt::Display for TestMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A normal-approximation test `T = sqrt(n) U / sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: TestMethod,
    /// `sqrt(n) * U`.
    pub numerator: f64,
    /// `sigma`, the estimated standard deviation of `sqrt(n) * U`.
    pub se: f64,
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub n: usize,
}

impl TestResult {
    /// Builds the test from the unscaled score `u` and variance `sigma2`.
    pub fn from_components(method: TestMethod, u: f64, sigma2: f64, n: usize) -> Result<Self> {
        if sigma2.is_nan() || sigma2 <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        let numerator = (n as f64).sqrt() * u;
        let se = sigma2.sqrt();
        let statistic = numerator / se;
        Ok(Self {
            method,
            numerator,
            se,
            statistic,
            p_value: two_sided_p(statistic),
            n,
        })
    }

    /// `|T| > z_{alpha/2}`.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.statistic.abs() > critical_value(alpha)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `2 (1 - Phi(|t|))`, evaluated through the upper tail to keep precision.
pub fn two_sided_p(t: f64) -> f64 {
    (2.0 * normal_cdf(-t.abs())).min(1.0)
}

/// `z_{alpha/2}`, the `1 - alpha/2` standard normal quantile.
pub fn critical_value(alpha: f64) -> f64 {
    if alpha >= 1.0 {
        return 0.0;
    }
    let std = Normal::standard();
    std.inverse_cdf(1.0 - alpha / 2.0)
}

/// Bonferroni adjustment `min(1, m p)`.
pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}
