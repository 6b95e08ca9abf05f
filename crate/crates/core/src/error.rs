use thiserror::Error;

/// One violated density-operator invariant together with the measured residual.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Largest elementwise `|rho - rho^dagger|`.
    NotHermitian { residual: f64 },
    /// `trace - 1`.
    Trace { residual: f64 },
    /// The most negative eigenvalue.
    NegativeEigenvalue { eigenvalue: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotHermitian { residual } => {
                write!(f, "not Hermitian (max residual {residual:e})")
            }
            Violation::Trace { residual } => write!(f, "trace deviates from 1 by {residual:e}"),
            Violation::NegativeEigenvalue { eigenvalue } => {
                write!(f, "negative eigenvalue {eigenvalue:e}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("invalid density operator: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidDensity(Vec<Violation>),

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid subsystem selection: {0}")]
    Subsystems(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("Fock cutoff n_max = {n_max} is inadequate: Fock tail estimate {tail:e} exceeds {limit:e} (mode {mode}); try n_max >= {suggested}")]
    InadequateCutoff {
        mode: usize,
        n_max: usize,
        tail: f64,
        limit: f64,
        suggested: usize,
    },

    #[error("Hilbert space dimension {required} exceeds the cap {cap}")]
    DimensionCap { required: usize, cap: usize },

    #[error(
        "threshold {threshold} never reached on the grid (final coherence ratio {final_ratio:e})"
    )]
    ThresholdNotReached { threshold: f64, final_ratio: f64 },

    #[error("coefficients do not match the branch counts (residual {residual:e})")]
    CountMismatch { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
