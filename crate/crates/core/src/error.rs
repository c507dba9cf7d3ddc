use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("ADMM diverged after {iterations} iterations (primal residual {primal:.3e}, dual residual {dual:.3e})")]
    Diverged {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("grid too coarse: {samples:.1} samples across the predicted axial width, at least {required} required")]
    GridTooCoarse { samples: f64, required: usize },

    #[error("main lobe: {0}")]
    MainLobe(String),

    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs rather than by a failed computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::Json(_)
                | Error::ShapeMismatch(_)
                | Error::Unstable { .. }
                | Error::GridTooCoarse { .. }
        )
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {value}")))
    }
}
