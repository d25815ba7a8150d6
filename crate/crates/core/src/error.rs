use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("quadrature did not converge (last estimates {prev} and {last})")]
    Quadrature { prev: f64, last: f64 },
    #[error("diffusion coefficient is not positive at x = {0}")]
    NonPositiveDiffusion(f64),
    #[error("coefficient is not finite at x = {0}")]
    NonFiniteCoefficient(f64),
    #[error("speed measure has infinite mass: {0}")]
    NotPositiveRecurrent(String),
    #[error("integral diverges: {0}")]
    NotIntegrable(String),
    #[error("value {0} is outside the reachable domain")]
    OutOfDomain(f64),
    #[error("regime classification failed: {0}")]
    ClassificationFailed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("observable is not centred: mu(f) = {0}")]
    NotCentered(f64),
    #[error("Poisson solution unavailable: {0}")]
    PoissonUnavailable(String),
    #[error("divergent transform: {0}")]
    Divergent(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("path left the guard interval at step {step} (x = {x})")]
    PathExploded { step: u64, x: f64 },
    #[error("{exploded} of {total} paths exploded")]
    TooManyExplosions { exploded: usize, total: usize },
    #[error("time change clipped {clips} of {steps} steps")]
    TooManyClips { clips: u64, steps: u64 },
    #[error("horizon exceeded after {steps} steps")]
    HorizonExceeded { steps: u64 },
    #[error("stability index {0} is outside (0, 2]")]
    InvalidAlpha(f64),
    #[error("no frequency window with |ecf| in [0.2, 0.9]")]
    WindowNotFound,
    #[error("not enough samples: need {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
