use thiserror::Error;

/// Errors produced by the feedback-capacity toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Sylvester equation is singular: spectra overlap (min eigenvalue gap {gap:.3e})")]
    SingularSylvester { gap: f64 },

    #[error("evaluation point z = {re} + {im}i is a pole of the system")]
    Pole { re: f64, im: f64 },

    #[error("system is not single-input single-output")]
    NotSiso,

    #[error("strictly causal operator requires zero feedthrough, got {0}")]
    NotStrictlyCausal(f64),

    #[error("channel is unstable: pole of the inverse channel at |z| = {0:.6}")]
    UnstableChannel(f64),

    #[error("channel is not minimum-phase: zero of the inverse channel at |z| = {0:.6}")]
    NonMinimumPhase(f64),

    #[error("channel realization is not controllable (rank {rank} < {order})")]
    Uncontrollable { rank: usize, order: usize },

    #[error("channel realization is not observable (rank {rank} < {order})")]
    Unobservable { rank: usize, order: usize },

    #[error("degenerate channel: feedthrough gain is zero")]
    DegenerateChannel,

    #[error("invalid channel description: {0}")]
    InvalidChannel(String),

    #[error("encoder eigenvalue {0:.6} collides with a channel eigenvalue")]
    EigenvalueCollision(f64),

    #[error("encoder eigenvalue with |z| = {0:.12} lies on the unit circle")]
    UnitCircle(f64),

    #[error("Riccati iteration did not converge in {iterations} steps (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Riccati fixed point is not stabilizing (closed-loop spectral radius {0:.9})")]
    NotStabilizing(f64),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("optimizer failed on both sign branches: {0}")]
    OptimizerFailure(String),

    #[error("bisection bracket failure: power({lo_rate:.6}) = {lo_power:.6e}, power({hi_rate:.6}) = {hi_power:.6e}, target {target:.6e}")]
    Bracket {
        lo_rate: f64,
        lo_power: f64,
        hi_rate: f64,
        hi_power: f64,
        target: f64,
    },

    #[error("infeasible GM gain: {0}")]
    InfeasibleGain(String),

    #[error("horizon T = {horizon} too short for epsilon = {epsilon}: mode {mode} has sigma = {sigma:.4e} >= 1")]
    HorizonTooShort {
        horizon: usize,
        epsilon: f64,
        mode: usize,
        sigma: f64,
    },

    #[error("codebook too large to index at horizon {0}")]
    CodebookOverflow(usize),

    #[error("message index {index} out of range (M_T = {size})")]
    IndexOutOfRange { index: u128, size: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("simulation budget exceeded: {needed} channel uses > budget {budget}")]
    Budget { needed: u64, budget: u64 },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
