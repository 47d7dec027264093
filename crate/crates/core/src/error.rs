use thiserror::Error;

pub type Result<T, E = CtapError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtapError {
    #[error("invalid pulse schedule: omega_max={omega_max}, t_max={t_max} (both must be finite and > 0)")]
    InvalidSchedule { omega_max: f64, t_max: f64 },

    #[error("time {t} outside protocol window [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("non-finite detuning ({0})")]
    InvalidDetuning(f64),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("initial state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("state has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site index {index} out of range for a {dim}-site system")]
    SiteOutOfRange { index: usize, dim: usize },

    #[error("step count {0} too small (need at least 2)")]
    TooFewSteps(usize),

    #[error(
        "propagation not converged: final rho55 changed by {change:e} on step doubling \
         (tolerance {tolerance:e}) at delta_u={delta_u}, delta_d={delta_d}, t_max={t_max}"
    )]
    NotConverged {
        delta_u: f64,
        delta_d: f64,
        t_max: f64,
        change: f64,
        tolerance: f64,
    },

    #[error("transport gap {gap:e} at t={t} is too small for the adiabaticity ratio")]
    DegenerateGap { t: f64, gap: f64 },

    #[error("grid resolution {0} too small (need at least 2 points per axis)")]
    InvalidResolution(usize),

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("found {found} fidelity maxima; need at least 2 to fit the fringe law")]
    InsufficientFringes { found: usize },

    #[error("trace has {samples_per_period:.2} samples per expected fringe period; need at least {required}")]
    UnderResolved { samples_per_period: f64, required: f64 },

    #[error("lost track of the first fringe at t_max={t_max}")]
    FringeTrackingLost { t_max: f64 },
}
