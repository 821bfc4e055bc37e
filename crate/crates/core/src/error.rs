use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on bracket [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("function evaluated to a non-finite value at x={x}")]
    NonFinite { x: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("table has an empty margin: {0}")]
    ZeroMargin(&'static str),

    #[error("table has a zero cell; enable the 0.5 correction to estimate")]
    ZeroCell,

    #[error("series order {order} exceeds the cap of {cap}")]
    OrderTooLarge { order: usize, cap: usize },

    #[error("inconsistent parameters: {0}")]
    InconsistentParams(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Checks that `x` lies in the open unit interval.
pub(crate) fn check_open_unit(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {x}")))
    }
}

pub(crate) fn check_positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(domain(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

pub(crate) fn check_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(domain(format!("{name} must be finite, got {x}")))
    }
}
