use thiserror::Error;

/// Errors raised anywhere in the measurement, extraction and fitting pipeline.
#[derive(Debug, Error)]
pub enum SdiError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The multi-bounce geometric series has no finite sum.
    #[error("degenerate slab geometry: bounce series denominator |1 - Γr1·Γr2·e^(-j2k d)| = {0:e}")]
    DegenerateGeometry(f64),

    #[error("range spectrum is identically zero")]
    AllZeroSpectrum,

    #[error("metal calibration peak is zero (|peak| = {0:e})")]
    ZeroCalibration(f64),

    /// Per-step phase advance is at or beyond π, so the direction of the
    /// phase progression is ambiguous.
    #[error("per-step phase advance {0:.4} rad is not below π; step too large for the carrier")]
    Aliasing(f64),

    #[error("no start converged within {max_iterations} iterations ({starts} starts tried)")]
    NoConvergence { starts: usize, max_iterations: usize },

    #[error("degenerate data: all reflection samples are below 1e-12, permittivity is unidentifiable")]
    DegenerateData,

    #[error("degenerate regression: all phases identical (slope {slope})")]
    DegenerateRegression { slope: f64 },

    #[error("malformed file (line {line}): {message}")]
    Malformed { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SdiError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SdiError::InvalidInput(msg.into())
    }

    pub(crate) fn malformed(line: usize, msg: impl Into<String>) -> Self {
        SdiError::Malformed { line, message: msg.into() }
    }

    /// Process exit code used by the `sdi` binary.
    ///
    /// `2` invalid input (bad flags, malformed or unwritable files), `3`
    /// numerical failure, `4` degenerate data.
    pub fn exit_code(&self) -> i32 {
        match self {
            SdiError::InvalidInput(_)
            | SdiError::Aliasing(_)
            | SdiError::Malformed { .. }
            | SdiError::Io(_) => 2,
            SdiError::DegenerateGeometry(_) | SdiError::NoConvergence { .. } => 3,
            SdiError::AllZeroSpectrum
            | SdiError::ZeroCalibration(_)
            | SdiError::DegenerateData
            | SdiError::DegenerateRegression { .. } => 4,
        }
    }
}

pub type Result<T, E = SdiError> = std::result::Result<T, E>;
