use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Final constraint residuals of a failed transition-matrix estimation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConstraintResiduals {
    /// max |UV - I|
    pub orthonormality: f64,
    /// max |UDV - P|
    pub spectral: f64,
    /// max |P 1 - 1|
    pub row_sums: f64,
    /// Most negative entry of the restored matrix (0 when nonnegative).
    pub negativity: f64,
}

impl std::fmt::Display for ConstraintResiduals {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "|UV-I|={:.3e}, |UDV-P|={:.3e}, |P1-1|={:.3e}, min p={:.3e}",
            self.orthonormality, self.spectral, self.row_sums, self.negativity
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("no observations")]
    NoObservations,

    #[error("stationary distribution not unique")]
    StationaryNotUnique,

    #[error("infinite expected duration")]
    InfiniteDuration,

    #[error("max-entropy estimation infeasible: {0}")]
    Infeasible(ConstraintResiduals),

    #[error("smoothness incompatible with return variance")]
    SmoothnessIncompatible,

    #[error("degenerate moment targets: {0}")]
    Degenerate(String),

    #[error("missing calibration for regime {0}")]
    MissingCalibration(String),

    #[error("scenario horizon too short: need step {needed}, have {available}")]
    HorizonTooShort { needed: usize, available: usize },

    #[error("scenario set has no market index path")]
    MissingIndex,

    #[error("par rate undefined: coupon annuity is zero on every path")]
    ParRateUndefined,

    #[error("regression rank-deficient at step {step} with intercept only")]
    RankDeficient { step: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
