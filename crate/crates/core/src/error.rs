use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VgError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("martingale correction undefined: 1 - theta*kappa - sigma^2*kappa/2 = {argument} <= 0")]
    MartingaleCorrectionUndefined { argument: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("characteristic function base {re} + {im}i lies on the branch cut")]
    BranchCut { re: f64, im: f64 },

    #[error("modified Bessel K_{nu}({x}) overflows double precision")]
    BesselOverflow { nu: f64, x: f64 },

    #[error("negative transition probability p{index} = {value:e} (skewness {skewness}, excess kurtosis {kurtosis})")]
    NegativeProbability {
        index: usize,
        value: f64,
        skewness: f64,
        kurtosis: f64,
    },

    #[error("closed-form and linear-system probabilities disagree by {discrepancy:e}")]
    ProbabilityMismatch { discrepancy: f64 },

    #[error("lattice overflow: log-price {log_price} outside the double-precision range")]
    LatticeOverflow { log_price: f64 },

    #[error("explicit scheme unstable at step {step}: max |V| = {max_value:e} exceeds bound {bound:e}")]
    Instability {
        step: usize,
        max_value: f64,
        bound: f64,
    },

    #[error("quadrature failed to converge: estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureFailure { error: f64, tolerance: f64 },

    #[error("{0}")]
    Unsupported(&'static str),

    #[error("series too short: {len} observations, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("kurtosis {kurtosis} <= 3: not fittable by a variance-gamma law, use a normal fit")]
    NotVgFittable { kurtosis: f64 },
}

impl VgError {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            VgError::BesselOverflow { .. }
                | VgError::NegativeProbability { .. }
                | VgError::ProbabilityMismatch { .. }
                | VgError::LatticeOverflow { .. }
                | VgError::Instability { .. }
                | VgError::QuadratureFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, VgError>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(VgError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(VgError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
