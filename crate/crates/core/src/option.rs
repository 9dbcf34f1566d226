//! Vanilla option contract description shared by every pricer.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Result, VgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExerciseStyle {
    European,
    American,
}

/// A vanilla call or put on a single underlying, valued at time zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub spot: f64,
    pub strike: f64,
    pub maturity: f64,
    pub kind: OptionKind,
    pub style: ExerciseStyle,
}

impl OptionSpec {
    pub fn new(
        spot: f64,
        strike: f64,
        maturity: f64,
        kind: OptionKind,
        style: ExerciseStyle,
    ) -> Result<Self> {
        let spec = Self {
            spot,
            strike,
            maturity,
            kind,
            style,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn european(spot: f64, strike: f64, maturity: f64, kind: OptionKind) -> Result<Self> {
        Self::new(spot, strike, maturity, kind, ExerciseStyle::European)
    }

    pub fn american(spot: f64, strike: f64, maturity: f64, kind: OptionKind) -> Result<Self> {
        Self::new(spot, strike, maturity, kind, ExerciseStyle::American)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("spot", self.spot)?;
        require_positive("strike", self.strike)?;
        require_positive("maturity", self.maturity)
    }

    /// Same contract with the other payoff type.
    pub fn with_kind(&self, kind: OptionKind) -> Self {
        Self { kind, ..*self }
    }

    pub fn with_style(&self, style: ExerciseStyle) -> Self {
        Self { style, ..*self }
    }

    pub fn with_spot(&self, spot: f64) -> Self {
        Self { spot, ..*self }
    }

    #[inline]
    pub fn payoff(&self, price: f64) -> f64 {
        match self.kind {
            OptionKind::Call => (price - self.strike).max(0.0),
            OptionKind::Put => (self.strike - price).max(0.0),
        }
    }

    pub fn is_american(&self) -> bool {
        self.style == ExerciseStyle::American
    }

    pub(crate) fn require_european(&self, what: &'static str) -> Result<()> {
        if self.is_american() {
            Err(VgError::Unsupported(what))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payoffs() {
        let call = OptionSpec::european(40.0, 40.0, 1.0, OptionKind::Call).unwrap();
        assert_eq!(call.payoff(45.0), 5.0);
        assert_eq!(call.payoff(35.0), 0.0);
        let put = call.with_kind(OptionKind::Put);
        assert_eq!(put.payoff(35.0), 5.0);
        assert_eq!(put.payoff(45.0), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(OptionSpec::european(0.0, 40.0, 1.0, OptionKind::Call).is_err());
        assert!(OptionSpec::european(40.0, -1.0, 1.0, OptionKind::Call).is_err());
        assert!(OptionSpec::american(40.0, 40.0, 0.0, OptionKind::Put).is_err());
        assert!(OptionSpec::european(f64::NAN, 40.0, 1.0, OptionKind::Put).is_err());
    }
}
