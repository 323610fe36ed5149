use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions (estimated error {error:.3e})")]
    QuadratureBudget { subdivisions: usize, error: f64 },

    #[error("characteristic function has not decayed by frequency {cutoff} (|phi|/w = {residual:.3e})")]
    NotDecayed { cutoff: f64, residual: f64 },

    #[error("no root of {op} in [{lo}, {hi}]")]
    NoRoot { op: &'static str, lo: f64, hi: f64 },

    #[error("regression constraints are infeasible: {0}")]
    Infeasible(String),

    #[error("invalid block shape: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
