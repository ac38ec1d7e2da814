use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coupling queried at t = {t} outside its tabulated domain [{lo}, {hi}]")]
    CouplingDomain { t: f64, lo: f64, hi: f64 },

    #[error("invalid coupling definition: {0}")]
    InvalidCoupling(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration budget of {max_steps} steps exhausted at t = {t}")]
    StepBudget { max_steps: u64, t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("need at least {needed} grid points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("factorization chart fails: |U22| = {u22:e} is below the chart threshold")]
    ChartFailure { u22: f64 },

    #[error("factor coordinates are not real (largest imaginary part {imag:e})")]
    NonRealCoordinates { imag: f64 },

    #[error("lambda(t) vanishes at t = {t}; the integrability residual is undefined")]
    ZeroLambda { t: f64 },

    #[error("generating function is negative (f = {f}) at t = {t}; no real square root")]
    NegativeGenerating { t: f64, f: f64 },

    #[error("particular solution is complex for p = {p} (discriminant {discriminant})")]
    ComplexParticular { p: f64, discriminant: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
