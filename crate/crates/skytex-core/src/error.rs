use alloc::string::String;

use crate::measurement::MeasurementBasis;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter violated its documented precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// What was wrong with it.
        reason: String,
    },
    /// An integrator could not meet its tolerance.
    #[error("numerical failure at ion {ion}: {detail}")]
    NumericalFailure {
        /// Index of the worst ion.
        ion: usize,
        /// Human-readable diagnostic.
        detail: String,
    },
    /// A zero-length Bloch vector where a direction was required.
    #[error("zero-length Bloch vector at index {index}")]
    DegenerateSpin {
        /// Offending site index.
        index: usize,
    },
    /// The point set cannot be triangulated.
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    /// A binned field lacks one measurement basis.
    #[error("incomplete data: no {basis} basis record for a non-empty bin")]
    IncompleteData {
        /// The missing basis.
        basis: MeasurementBasis,
    },
    /// The data have no azimuthal structure to align against.
    #[error("texture is azimuthally symmetric: phase offset is not unique")]
    NoUniquePhase,
    /// A least-squares fit did not converge or is not identifiable.
    #[error("fit failed: {reason} (residual norm {residual:.3e})")]
    FitFailure {
        /// Why the fit failed.
        reason: String,
        /// Residual norm at the last iterate.
        residual: f64,
    },
    /// Phase of a zero-length transverse vector.
    #[error("phase undefined for a zero transverse component")]
    UndefinedPhase,
    /// Two index-aligned sequences differ in length.
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch {
        /// Expected length.
        expected: usize,
        /// Actual length.
        found: usize,
    },
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn fit_failure(reason: impl Into<String>, residual: f64) -> Error {
    Error::FitFailure { reason: reason.into(), residual }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
