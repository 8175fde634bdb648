use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Arm label used in diagnostics.
pub type Arm = u8;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no subjects to analyze")]
    EmptyData,

    #[error("invalid trial data: {0}")]
    InvalidData(String),

    #[error("no observed events")]
    NoEvents,

    #[error("log-rank variance is zero")]
    ZeroVariance,

    #[error("no covariates available for adjustment")]
    NoCovariates,

    #[error("covariate design for arm {arm} is rank deficient{}", stratum_note(*.stratum))]
    RankDeficient { arm: Arm, stratum: Option<u32> },

    #[error("adjusted variance {0:e} is not positive")]
    NonpositiveVariance(f64),

    #[error("score has no sign change on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("margin vector has {got} entries, scheme expects {expected}")]
    InvalidMarginVector { expected: usize, got: usize },

    #[error("margin {margin} level {level} out of range (levels: {levels})")]
    InvalidMarginLevel {
        margin: usize,
        level: usize,
        levels: usize,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: column `{col}` is not numeric")]
    NonNumeric { row: usize, col: String },

    #[error("row {row}: arm must be 0 or 1")]
    BadArmValue { row: usize },

    #[error("row {row}: negative follow-up time")]
    NegativeTime { row: usize },

    #[error("row {row}: {msg}")]
    BadRow { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn stratum_note(stratum: Option<u32>) -> String {
    match stratum {
        Some(z) => format!(" in stratum {z}"),
        None => String::new(),
    }
}

impl Error {
    /// Numerical degeneracies of a single analysis, as opposed to bad input.
    ///
    /// The Monte Carlo harness counts these per replication instead of aborting.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::NoEvents
                | Error::ZeroVariance
                | Error::RankDeficient { .. }
                | Error::NonpositiveVariance(_)
                | Error::NoRoot { .. }
        )
    }
}
