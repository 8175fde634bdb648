//! Covariate-calibrated log-rank tests and hazard-ratio estimators for
//! randomized survival trials, with the randomization schemes and Monte Carlo
//! harness used to study their operating characteristics.

pub mod adjustment;
pub mod analysis;
pub mod data;
pub mod error;
pub mod hazard;
pub mod io;
pub mod linalg;
pub mod logrank;
pub mod randomization;
pub mod risk_set;
pub mod rng;
pub mod simulation;
pub mod root;
pub mod stats;

pub use adjustment::{adjusted_logrank, adjusted_stratified_logrank, AdjustmentFit};
pub use analysis::{analyze, four_tests, AnalysisOptions, AnalysisReport, TestSet};
pub use data::{SubjectRecord, TrialData};
pub use error::{Error, Result};
pub use hazard::{
    solve_theta_adjusted, solve_theta_adjusted_stratified, solve_theta_stratified,
    solve_theta_unadjusted, EstimationOptions, HazardEstimate,
};
pub use logrank::{logrank_test, stratified_logrank_test, DerivedOutcomes, LogRankComponents};
pub use randomization::{assign_all, AssignmentState, SchemeConfig, SchemeKind};
pub use stats::{TestMethod, TestResult};
