use alloc::string::String;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("argument {value} lies below the admissible range (lower bound {lower})")]
    Domain { value: f64, lower: f64 },
    #[error("log f overflows at u = {value}")]
    Overflow { value: f64 },
    #[error("the tail integral of 1/f diverges for this family")]
    DivergentTail,
    #[error("target {value} lies outside the attainable range [{lower}, {upper}]")]
    OutOfRange { value: f64, lower: f64, upper: f64 },
    #[error("{what} did not converge")]
    Convergence { what: &'static str },
    #[error("step size collapsed at t = {t}")]
    StepSizeCollapse { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("profile has no zero up to r = {r_max}")]
    NoCrossing { r_max: f64 },
    #[error("trajectory left its envelope at t = {t}: |value| t^k = {scaled} > {bound}")]
    TrajectoryEscape { t: f64, scaled: f64, bound: f64 },
    #[error("handoff mismatch: V' = {formula} from the transformed solution, {difference} by differencing")]
    HandoffMismatch { formula: f64, difference: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
}

pub type Result<T> = core::result::Result<T, Error>;
