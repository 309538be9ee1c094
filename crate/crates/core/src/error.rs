use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {detail}")]
    Dimension {
        context: &'static str,
        detail: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular algebraic loop in {0}")]
    AlgebraicLoop(&'static str),

    #[error("frequency {freq_hz} Hz coincides with a pole (pivot {pivot:e})")]
    SingularFrequency { freq_hz: f64, pivot: f64 },

    #[error("system is not stable (spectral abscissa {abscissa:e}); H-infinity norm is undefined")]
    Unstable { abscissa: f64 },

    #[error("eigenvalue solver failed to converge for a {0}x{0} matrix")]
    EigenSolver(usize),

    #[error("Riccati solver: {0}")]
    Riccati(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-proportional damping: modal damping matrix has off-diagonal norm {offdiag:e} (relative {relative:e})")]
    NonProportionalDamping { offdiag: f64, relative: f64 },

    #[error("scheduling point {point:?} lies outside the domain {domain:?}")]
    OutsideDomain {
        point: Vec<f64>,
        domain: Vec<[f64; 2]>,
    },

    #[error("mode selection: {0}")]
    ModeSelection(String),

    #[error(
        "rank deficient {what}: rank {rank} < {required}; deficient direction(s) {directions:?}"
    )]
    RankDeficient {
        what: &'static str,
        rank: usize,
        required: usize,
        directions: Vec<Vec<f64>>,
    },

    #[error("insufficient actuators: {n_inputs} inputs cannot decouple {n_rb} rigid-body + {n_flex} flexible modes")]
    InsufficientActuators {
        n_inputs: usize,
        n_rb: usize,
        n_flex: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("uncertainty weight fails to dominate the grid deviation at {freq_hz} Hz (weight {weight:e} < deviation {deviation:e})")]
    WeightDominance {
        freq_hz: f64,
        weight: f64,
        deviation: f64,
    },

    #[error(
        "no stabilizing controller found within budget (best spectral abscissa {best_abscissa:e})"
    )]
    NoStabilizingPoint { best_abscissa: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidParameter { .. }
                | Error::InsufficientActuators { .. }
                | Error::ModeSelection(_)
                | Error::OutsideDomain { .. }
                | Error::InvalidModel(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
