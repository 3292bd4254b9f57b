use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("target in array plane")]
    TargetInArrayPlane,
    #[error("zero range between target and {0}")]
    ZeroRange(&'static str),
    #[error("normalized Doppler outside principal interval for pair ({m},{n}): {value}")]
    DopplerAliasing { m: usize, n: usize, value: f64 },
    #[error("zero channel gains")]
    ZeroGain,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("degenerate concentration (r = {0})")]
    DegenerateConcentration(f64),
    #[error("saddle or flat objective (g'' = {0})")]
    FlatObjective(f64),
    #[error("non-finite value in {stage} update at iteration {iter}")]
    NonFinite { stage: &'static str, iter: usize },
    #[error("{what} did not converge in {iters} iterations (last iterate {last:?})")]
    NoConvergence {
        what: &'static str,
        iters: usize,
        last: [f64; 2],
    },
    #[error("not a local maximum")]
    NotLocalMaximum,
    #[error("velocity unobservable")]
    VelocityUnobservable,
    #[error("electrical angle outside grating-free range")]
    InvalidSine,
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("snapshot file: {0}")]
    Format(String),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownMethod(_) | Error::TargetInArrayPlane
        )
    }
}
