use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t} outside tabulated forcing domain [0, {end}]")]
    OutsideTable { t: f64, end: f64 },

    #[error("non-finite state encountered at step {step}")]
    BlowUp { step: usize },

    #[error("implicit step {step} failed to converge")]
    StepFailed { step: usize },

    #[error("interaction force is not a gradient: {0}")]
    NotGradient(String),

    /// The shifted stiffness matrix is singular or too badly conditioned for
    /// the dual-to-primal map to be defined. `location` is the element or node
    /// index when known.
    #[error("singular shifted stiffness (condition {condition:e}){}", fmt_location(.location))]
    SingularStiffness {
        location: Option<usize>,
        condition: f64,
    },

    #[error("final-time condition violated: dual field must vanish at t = T")]
    FinalCondition,

    #[error("singular Newton system (pivot block {block})")]
    SingularSystem { block: usize },

    /// Undamped linear chain forced at one of its natural frequencies: no
    /// periodic solution exists and the cyclic system is singular.
    #[error("singular cyclic system: undamped resonance at frequency {frequency}")]
    Resonance { frequency: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn fmt_location(loc: &Option<usize>) -> String {
    match loc {
        Some(i) => format!(" at index {i}"),
        None => String::new(),
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
