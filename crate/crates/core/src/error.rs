use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("tangent pole: {0}")]
    Pole(String),

    #[error("spectral continuity lost at sample {index} (t = {time}): {reason}")]
    Continuity { index: usize, time: f64, reason: String },

    #[error("geometric phase undefined: interference sum has magnitude {0:e}")]
    UndefinedPhase(f64),

    #[error("degenerate Schmidt coefficients (gap {0:e}); branch labels are ambiguous")]
    SchmidtDegenerate(f64),

    #[error("integration step too large: trace drift {0:e}")]
    StepSize(f64),

    #[error("no eigenbranch matches the initial state (best overlap {0:.4})")]
    BranchIdentification(f64),

    #[error("single-valued gauge unavailable: reference component vanishes at sample {0}")]
    GaugeSingular(usize),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
}

impl Error {
    /// True for failures of the numerics (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Pole(_)
                | Error::Continuity { .. }
                | Error::UndefinedPhase(_)
                | Error::SchmidtDegenerate(_)
                | Error::StepSize(_)
                | Error::BranchIdentification(_)
                | Error::GaugeSingular(_)
                | Error::NoConvergence(_)
        )
    }
}
