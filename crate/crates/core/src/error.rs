use thiserror::Error;

/// Errors raised by the physics layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid spin state: {0}")]
    InvalidState(String),

    #[error("direction vector {direction:?} is not unit-norm")]
    NonUnitDirection { direction: [f64; 3] },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point ({x}, {y}) is within {epsilon:e} of the flux line")]
    Singularity { x: f64, y: f64, epsilon: f64 },

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("paths do not share endpoints")]
    EndpointMismatch,

    #[error("scalar reduction requires a sigma_z eigenstate beam and fields along z: {0}")]
    ReductionInvalid(String),

    #[error("consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}

pub(crate) fn check_duration(name: &'static str, value: f64) -> Result<()> {
    check_finite(name, value)?;
    if value < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be non-negative, got {value}"),
        });
    }
    Ok(())
}
