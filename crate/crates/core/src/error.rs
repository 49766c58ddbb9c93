use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid physical system: {}", .0.join("; "))]
    InvalidSystem(Vec<String>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("recurrence time {t_rec:.3} too short for horizon {horizon:.3}")]
    Recurrence { t_rec: f64, horizon: f64 },

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    MaxSteps(usize),

    #[error("evaluation point {re:.3e}{im:+.3e}i hits a pole of the propagator")]
    PoleHit { re: f64, im: f64 },

    #[error("singular linear system in resolvent solve")]
    Singular,

    #[error("inverse Laplace transform not converged: estimate {estimate:.3e} > tolerance {tol:.3e}")]
    NotConverged { estimate: f64, tol: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("fit window: {0}")]
    FitWindow(String),

    #[error("non-positive survival probability at t = {0:.6e}")]
    NonPositiveSurvival(f64),

    #[error("outside the Weisskopf-Wigner regime: {0}")]
    Regime(String),

    #[error("far-field reduction is singular for a detector atom at the origin")]
    AtomAtOrigin,
}
