use core::fmt;

/// Errors raised by lattice construction, solvers and fits.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its domain invariant.
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// Offending value (SI units).
        value: f64,
        /// Constraint that was violated.
        reason: &'static str,
    },
    /// `lambda_brg > lambda_dip`: no incidence angle fulfils the classical condition.
    NoBraggAngle {
        /// Probe wavelength (m).
        lambda_brg: f64,
        /// Lattice-laser wavelength (m).
        lambda_dip: f64,
    },
    /// No emission angle in `(0, pi/2)` satisfies the requested condition.
    NoSolution {
        /// Argument or context that failed.
        detail: &'static str,
    },
    /// The aspect-ratio form of the generalized condition divides by `zeta - 1`.
    Degenerate,
    /// The intensity maximum sits on the boundary of the scanned domain.
    NoPeak,
    /// The fit objective has no interior minimum over the `log10(zeta)` range.
    FitDiverged {
        /// `log10(zeta)` at the boundary minimum.
        log10_zeta: f64,
    },
    /// Too few scan records for a fit.
    InsufficientData {
        /// Records available.
        got: usize,
        /// Records required.
        need: usize,
    },
}

/// Result alias for this crate.
pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                value,
                reason,
            } => write!(f, "invalid {name} = {value:e}: {reason}"),
            Error::NoBraggAngle {
                lambda_brg,
                lambda_dip,
            } => write!(
                f,
                "no Bragg angle: probe wavelength {:.3} nm exceeds lattice wavelength {:.3} nm",
                lambda_brg * 1e9,
                lambda_dip * 1e9
            ),
            Error::NoSolution { detail } => write!(f, "no emission angle in (0, 90 deg): {detail}"),
            Error::Degenerate => {
                f.write_str("aspect ratio zeta = 1 is degenerate for the root form")
            }
            Error::NoPeak => f.write_str("intensity maximum lies on the scan boundary"),
            Error::FitDiverged { log10_zeta } => write!(
                f,
                "fit diverged: objective minimum at the log10(zeta) boundary {log10_zeta}"
            ),
            Error::InsufficientData { got, need } => {
                write!(f, "insufficient data: {got} records, need at least {need}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn ensure(
    cond: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
