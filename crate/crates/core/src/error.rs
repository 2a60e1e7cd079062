use thiserror::Error;

/// Errors raised by the vortex library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VortexError {
    #[error("invalid vorticities: {0}")]
    InvalidVorticity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("collision between vortices {i} and {j} (squared distance {dist_sq:e})")]
    Collision { i: usize, j: usize, dist_sq: f64 },

    #[error("collision during integration at t = {time}: vortices {i} and {j}")]
    CollisionAt { time: f64, i: usize, j: usize },

    #[error("implicit solve failed to converge (dt = {dt:e}, t = {time})")]
    NonConvergence { time: f64, dt: f64 },

    #[error("step limit of {steps} reached at t = {time}")]
    StepLimit { time: f64, steps: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailed { iterations: usize, residual: f64 },

    #[error("configuration is not centred (|W_N| = {0:e})")]
    NotCentred(f64),

    #[error("chart singular or outside the chart domain (value {0:e})")]
    ChartSingular(f64),

    #[error("vorticity {0} is not an integer >= 2")]
    VorticityDomain(f64),

    #[error("exponent {0} overflows f64")]
    Overflow(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, VortexError>;
