use alloc::string::String;

/// Errors raised by the solvers and their data model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("time {t} outside horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("empty averaging window [{a}, {b}]")]
    EmptyWindow { a: f64, b: f64 },
    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: f64, right: f64 },
    #[error("signal horizon {signal} shorter than problem horizon {required}")]
    HorizonTooShort { signal: f64, required: f64 },
    #[error("invalid signal: {0}")]
    InvalidSignal(&'static str),
    #[error("no minimizing bracket found at t={t}, x={x} (non-coercive Hamiltonian?)")]
    BracketFailure { t: f64, x: f64 },
    #[error("convexity check failed at t={t}, x={x}, p={p}, q={q}")]
    NotConvex { t: f64, x: f64, p: f64, q: f64 },
    #[error("edge {edge} has an empty control set")]
    EmptyControlSet { edge: usize },
    #[error("edge {edge}: no control with {sign} speed at t={t}, x={x}")]
    NoAdmissibleControl { edge: usize, sign: &'static str, t: f64, x: f64 },
    #[error("flux limiter below floor at t={t} (deficit {deficit})")]
    FluxLimiterBelowFloor { t: f64, deficit: f64 },
    #[error("expected {expected} slopes, got {got}")]
    SlopeCountMismatch { expected: usize, got: usize },
    #[error("CFL violated: dt={dt} exceeds limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("Hamiltonian time dependence is not expressed through signal coefficients")]
    NonSeparableTimeDependence,
    #[error("error signal negative ({value}) at t={t}")]
    NegativeKn { t: f64, value: f64 },
    #[error("enumeration budget exceeded: {branches} branches")]
    BudgetExceeded { branches: f64 },
    #[error("non-finite value at time level {level}")]
    NonFinite { level: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = core::result::Result<T, Error>;
