use thiserror::Error;

/// Errors raised by the model, the solvers and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("order alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("admissibility violated: alpha + (1 - alpha)(beta - gamma) = {lhs} > M(alpha) = {rhs}")]
    ViolatedAdmissibility { lhs: f64, rhs: f64 },

    #[error("drift denominator vanishes at x0 = {0}, which must be strictly negative")]
    SingularDrift(f64),

    #[error("closed form is singular for beta == gamma")]
    DegenerateRate,

    #[error("operation requires alpha = 1 and M = 1 (got alpha = {alpha}, M = {m_alpha})")]
    RequiresLogistic { alpha: f64, m_alpha: f64 },

    #[error("state {state} left the admissible band at t = {time}; reduce the step")]
    StepTooLarge { time: f64, state: f64 },

    #[error("Caputo-Fabrizio kernel is degenerate for alpha = {0}; need 0 <= alpha < 1")]
    OrderOutOfRange(f64),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    #[error("x = {x} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("invalid exit cost: {0}")]
    InvalidExitCost(String),

    #[error("numerical blow-up at time level {step} (|U| = {value}); check the CFL ratio")]
    NumericalBlowup { step: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("value history is missing time level {0}")]
    HistoryMissing(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
