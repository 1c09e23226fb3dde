use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("characteristic roots coalesce at theta = {theta} (|z+ - z-| = {gap:e})")]
    CoalescentRoots { theta: f64, gap: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("no sign change found in scan window [{lo}, {hi}]")]
    Convergence { lo: f64, hi: f64 },

    #[error("contour quadrature failed: {reason} (residual {residual:e})")]
    Contour { reason: String, residual: f64 },

    #[error("theta = {theta} is within tolerance of a pole (|dH_K| scaled = {magnitude:e}, nearest bracket [{lo}, {hi}])")]
    NearPole {
        theta: f64,
        magnitude: f64,
        lo: f64,
        hi: f64,
    },

    #[error("alpha = {alpha} is within 1e-6 of an integer; use the resolvent route")]
    DegenerateAlpha { alpha: f64 },

    #[error("tridiagonal system is singular (pivot {pivot:e} at row {row})")]
    SingularSystem { pivot: f64, row: usize },

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("no sign change of dH_K found while scanning theta over [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("ODE step underflow at t = {t} (step {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("eigenvector basis ill-conditioned (estimate {estimate:e})")]
    IllConditioned { estimate: f64 },

    #[error("inversion contour passes within {distance:e} of the pole set")]
    ContourCollision { distance: f64 },

    #[error("fit window starts too early: second mode biases slope by {bias:.3}%")]
    WindowTooEarly { bias: f64 },

    #[error("initial occupancy {n} must be below capacity {capacity}")]
    InvalidInitial { n: usize, capacity: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
