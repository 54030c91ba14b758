use alloc::string::String;

/// Errors raised by the chart pipeline.
///
/// Variants are grouped by the module that raises them; callers that only
/// care about "did a hypothesis fail" can use [`Error::is_hypothesis_failure`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// Operands disagree on dimension, truncation or radius.
    #[error("structural mismatch: {0}")]
    Structure(String),
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A Neumann series or other expansion does not converge.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// The fixed-point iteration did not settle; the contraction hypothesis is violated.
    #[error("contraction violated after {iterations} iterations (last change {last_change:e})")]
    ContractionViolated { iterations: usize, last_change: f64 },
    /// A reference tuple of fields has (numerically) vanishing wedge.
    #[error("rank error: {0}")]
    Rank(String),
    /// A tuple of fields is not tangent to the same n-plane as the reference tuple.
    #[error("tangency error: residual {residual:e} exceeds tolerance {tol:e}")]
    Tangency { residual: f64, tol: f64 },
    /// The fields vanish at the point; the orbit is a single point.
    #[error("degenerate point: all fields vanish")]
    DegeneratePoint,
    /// The bracket relation could not be fitted to the requested accuracy.
    #[error("finite-generation failure: fitted residual {residual:e} exceeds {tol:e}; increase the closure depth or polynomial degree")]
    FiniteGeneration { residual: f64, tol: f64 },
    /// A flow left the working box or the integrator failed.
    #[error("flow failure: {0}")]
    Flow(String),
    /// The numerical Jacobian of the chart is ill-conditioned.
    #[error("chart degeneracy: condition number {0:e}")]
    ChartDegeneracy(f64),
    /// More than half the sampled control paths failed.
    #[error("working domain too small: {failed} of {total} paths failed")]
    DomainTooSmall { failed: usize, total: usize },
    /// The rank at closure depth m differs from the rank at depth m + 1.
    #[error("closure depth too small: rank {rank_m} at depth m but {rank_next} at depth m + 1")]
    DepthTooSmall { rank_m: usize, rank_next: usize },
}

impl Error {
    /// True for failures of a mathematical hypothesis (as opposed to malformed input).
    pub fn is_hypothesis_failure(&self) -> bool {
        matches!(
            self,
            Error::Convergence(_)
                | Error::ContractionViolated { .. }
                | Error::Rank(_)
                | Error::Tangency { .. }
                | Error::DegeneratePoint
                | Error::FiniteGeneration { .. }
                | Error::Flow(_)
                | Error::ChartDegeneracy(_)
                | Error::DomainTooSmall { .. }
                | Error::DepthTooSmall { .. }
        )
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
