use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus specification: {0}")]
    InvalidSpec(String),
    #[error("lattice index {index:?} outside the grid of resolution {resolution:?}")]
    IndexOutOfRange { index: Vec<i64>, resolution: Vec<usize> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cutoff needs at least one slab")]
    EmptySlabs,
    #[error("trajectory has {len} samples, at least {needed} are required")]
    TooShort { len: usize, needed: usize },
    #[error("degenerate regression: {0}")]
    DegenerateFit(String),
    #[error("damped corrector did not converge at step {step}")]
    CorrectorDiverged { step: usize },
    #[error("blow-up detected at t = {t}: H1 norm {norm:e}")]
    BlowupDetected { t: f64, norm: f64 },
    #[error("inversion of J failed after {iterations} iterations (residual {residual:e})")]
    JInversionFailed { iterations: usize, residual: f64 },
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    CgStalled { iterations: usize, residual: f64 },
    #[error("iteration cap of {0} reached")]
    IterationCap(usize),
    #[error("Picard iteration diverged at iterate {iteration} (contraction factor {factor})")]
    PicardDiverged { iteration: usize, factor: f64 },
    #[error("distance {distance:e} exceeds the Picard ball {ball:e} (margin {:e})", ball - distance)]
    BallExceeded { distance: f64, ball: f64 },
    #[error("leg {leg} failed at energy {energy:e}: {reason}")]
    LegFailed { leg: usize, energy: f64, reason: String },
    #[error("{half} half of the two-point control failed: {reason}")]
    HalfFailed { half: &'static str, reason: String },
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("region is empty")]
    EmptyRegion,
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
