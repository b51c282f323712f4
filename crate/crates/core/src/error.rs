use thiserror::Error;

/// Failures raised by the library. Each variant maps onto one of two
/// process-level categories: bad input (`is_domain`) or numerical breakdown.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quartic is not in M2: min of lambda^-2 a(lambda) on the unit circle is {min:.3e}")]
    Membership { min: f64 },
    #[error("root clustering is unstable at tolerance {tol:e} (backward error {err:.3e})")]
    AmbiguousRoot { tol: f64, err: f64 },
    #[error("class error: expected {expected}, found {found}")]
    Class { expected: String, found: String },
    #[error("step size collapsed to {h:.3e} at parameter {at:.6}")]
    StepCollapse { h: f64, at: f64 },
    #[error("grid too small: need at least 3x3 nodes, got {n1}x{n2}")]
    GridTooSmall { n1: usize, n2: usize },
    #[error("pole: argument is within {dist:.3e} of a lattice point")]
    Pole { dist: f64 },
    #[error("ill-conditioned system (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("singular system (determinant {det:.3e})")]
    SingularSystem { det: f64 },
    #[error("contour passes within {dist:.3e} of a branch point")]
    BranchCollision { dist: f64 },
    #[error("path integration failed: {0}")]
    PathIntegration(String),
    #[error("fit residual {residual:.3e} exceeds {limit:.1e}")]
    FitResidual { residual: f64, limit: f64 },
    #[error("closing condition violated: {0}")]
    ClosingViolation(String),
    #[error("degenerate frame: |det(psi1, psi2)| = {det:.3e}")]
    DegenerateFrame { det: f64 },
    #[error("degenerate lattice: generators are nearly R-dependent")]
    DegenerateLattice,
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    /// True for errors caused by inputs outside the mathematical domain.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Membership { .. }
                | Error::Class { .. }
                | Error::GridTooSmall { .. }
                | Error::Pole { .. }
                | Error::DegenerateLattice
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
