use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Matrix or vector shapes do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An iterative routine hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    /// A linear system has no unique solution.
    #[error("singular model: {0}")]
    Singular(String),
    /// The requested operating point cannot be reached by the hardware model.
    #[error("infeasible target: {0}")]
    Infeasible(String),
    /// The input is valid physics but outside what the routine supports.
    #[error("unsupported input: {0}")]
    Unsupported(String),
    /// Measured data carry no usable information.
    #[error("degenerate data: {0}")]
    Degenerate(String),
    /// A tomography dataset does not cover enough configurations.
    #[error("insufficient coverage: {found} configurations, at least {required} required")]
    Coverage { found: usize, required: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
