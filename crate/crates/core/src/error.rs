//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by samplers, solvers, diagnostics and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty sample set")]
    EmptySamples,

    #[error("empty trajectory: no states recorded after burn-in")]
    EmptyTrajectory,

    #[error("proximal inner solver did not converge after {iters} iterations (gradient norm {residual:e})")]
    ProxDidNotConverge { iters: usize, residual: f64 },

    #[error("envelope gradient self-consistency check failed: |h(prox) - (x - prox)/eps| = {gap:e} exceeds {tol:e}; inner_tol is too loose")]
    EnvelopeInconsistent { gap: f64, tol: f64 },

    #[error("kernel was built for (gamma={kernel_gamma}, lambda={kernel_lambda}) but the chain uses (gamma={config_gamma}, lambda={config_lambda})")]
    KernelMismatch {
        kernel_gamma: f64,
        kernel_lambda: f64,
        config_gamma: f64,
        config_lambda: f64,
    },

    #[error("one-step map is unstable: spectral radius {rho} >= 1")]
    UnstableStepMap { rho: f64 },

    #[error("strict parameter validation failed:\n{report}")]
    ValidationFailed { report: String },

    #[error("insufficient tail radius: boundary density is {ratio:e} of the peak")]
    InsufficientTailRadius { ratio: f64 },

    #[error("quantile query p={p} outside [0, 1]")]
    QuantileOutOfRange { p: f64 },

    #[error("mismatched sample counts: {left} vs {right}")]
    MismatchedSampleCounts { left: usize, right: usize },

    #[error("target has no recorded minimizer; excess risk needs u(x*)")]
    MissingMinimizer,

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// NaN-safe positivity gate for scalar parameters.
pub(crate) fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

/// NaN-safe nonnegativity gate.
pub(crate) fn require_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be nonnegative and finite, got {v}"),
        ))
    }
}
