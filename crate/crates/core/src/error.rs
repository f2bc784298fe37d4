use thiserror::Error;

use crate::metrics::Case;

/// Errors produced by the simulator and the analytic toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("invalid slot: no samples to compute an energy statistic from")]
    EmptySlot,

    #[error("metric `{0}` is undefined for this trace")]
    UndefinedMetric(&'static str),

    #[error("joint PU/SU chain is not ergodic, closed classes: {0:?}")]
    NonErgodic(Vec<Vec<Case>>),

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, value: impl ToString, expected: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value: value.to_string(),
        expected,
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(name, p, "a probability in [0, 1]"))
    }
}
