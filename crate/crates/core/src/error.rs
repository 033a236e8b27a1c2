use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("amplitudes ({0}, {1}) have zero norm")]
    ZeroNorm(f64, f64),

    #[error("time interval must be non-negative, got {0} ps")]
    NegativeTime(f64),

    #[error("integration step {step} ps exceeds dt/100 = {limit} ps")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("retarder pair did not reach target (fidelity {fidelity})")]
    LcvrNoConvergence { fidelity: f64 },

    #[error("Poisson noise needs a non-negative mean, got {0} at point {1}")]
    NegativeMean(f64, usize),

    #[error("curve is malformed: {0}")]
    MalformedCurve(String),

    #[error("too few points for a fit: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("curve spans {span} ps, less than one period estimate ({period} ps)")]
    ShortSpan { span: f64, period: f64 },

    #[error("no maxima found in curve")]
    NoMaxima,

    #[error("probe set cannot determine the spin: {0}")]
    InsufficientProbes(String),

    #[error("curves disagree on metadata: {0}")]
    InconsistentMetadata(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
