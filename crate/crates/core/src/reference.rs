//! Independent pricers used as oracles: density-space quadrature for
//! European VG options and the Black-Scholes closed form.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{require_positive, Result, VgError};
use crate::option::{OptionKind, OptionSpec};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::vg_model::{
    integrate_against_pdf, martingale_correction, pdf, truncation_interval, VgParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Truncation of the log-return law, in standard deviations of `X_T`.
    pub half_width_sd: f64,
    pub abs_tol: f64,
    /// Split the integral at `x = 0`, where the density has a cusp (or a
    /// pole for short horizons).
    pub split_at_zero: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            half_width_sd: 12.0,
            abs_tol: 1e-8,
            split_at_zero: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width_sd >= 6.0) || !self.half_width_sd.is_finite() {
            return Err(VgError::InvalidParameter {
                name: "half_width_sd",
                value: self.half_width_sd,
                reason: "must be finite and >= 6",
            });
        }
        require_positive("abs_tol", self.abs_tol)
    }
}

/// `e^{-rT} E[payoff(S0 e^{(r + omega) T + X_T})]` by adaptive quadrature
/// against the VG density.
pub fn quadrature_european_price(spec: &OptionSpec, params: &VgParams, q: &QuadratureConfig) -> Result<f64> {
    spec.validate()?;
    params.validate()?;
    q.validate()?;
    spec.require_european("quadrature supports European only")?;
    let t = spec.maturity;
    let drift = (params.r + martingale_correction(params)?) * t;
    let (lo, hi) = truncation_interval(params, t, q.half_width_sd)?;
    let (lo, hi) = widen_for_tails(params, t, spec, q.abs_tol, drift, (lo, hi));
    // payoff kink at S_T = K
    let kink = (spec.strike / spec.spot).ln() - drift;
    let lo = lo.min(kink - 1.0);
    let hi = hi.max(kink + 1.0);
    let s0 = spec.spot;
    let payoff = |x: f64| spec.payoff(s0 * (drift + x).exp());
    let opts = QuadOptions {
        abs_tol: q.abs_tol * (params.r * t).exp(),
        rel_tol: 0.0,
        max_intervals: 20_000,
    };
    let integral = if q.split_at_zero {
        integrate_against_pdf(params, t, payoff, lo, hi, &[kink], opts)?
    } else {
        let mut failure = None;
        let out = integrate_with_breaks(
            |x| match pdf(params, t, x) {
                Ok(f) => payoff(x) * f,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            &[kink],
            opts,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        out?
    };
    Ok((-params.r * t).exp() * integral.value)
}

/// Distance beyond which `|x|^{t/kappa - 1} e^{-rate |x|}` times the payoff
/// scale drops below `tol`.
fn tail_extent(rate: f64, power: f64, log_ratio: f64) -> f64 {
    let mut x = (log_ratio / rate).max(1.0);
    for _ in 0..20 {
        x = ((log_ratio + power.max(0.0) * x.ln()) / rate).max(1.0);
    }
    x
}

/// Stretches the standard-deviation window so that both exponential tails
/// of the density, weighted by the payoff, fall below the tolerance. The
/// window only matters for strongly skewed laws with a small variance.
fn widen_for_tails(
    params: &VgParams,
    t: f64,
    spec: &OptionSpec,
    tol: f64,
    drift: f64,
    (lo, hi): (f64, f64),
) -> (f64, f64) {
    let s2 = params.sigma * params.sigma;
    let root = (params.theta * params.theta + 2.0 * s2 / params.kappa).sqrt();
    let rate_up = (root - params.theta) / s2;
    let rate_down = (root + params.theta) / s2;
    let power = t / params.kappa - 1.0;
    // 7 extra e-folds leave a margin of ~1e-3 of the tolerance
    let margin = 7.0;
    let hi = match spec.kind {
        OptionKind::Call => {
            // payoff grows like S0 e^{drift + x}; rate_up > 1 whenever omega exists
            let scale = spec.spot * drift.exp();
            let growth_free = rate_up - 1.0;
            if growth_free > 0.0 {
                hi.max(tail_extent(growth_free, power, (scale / tol).ln().max(0.0) + margin))
            } else {
                hi
            }
        }
        OptionKind::Put => hi,
    };
    let lo = match spec.kind {
        OptionKind::Put => lo.min(-tail_extent(rate_down, power, (spec.strike / tol).ln().max(0.0) + margin)),
        OptionKind::Call => lo,
    };
    (lo, hi)
}

/// Black-Scholes price of a European option.
pub fn black_scholes_price(spec: &OptionSpec, sigma_bs: f64, r: f64) -> Result<f64> {
    spec.validate()?;
    spec.require_european("Black-Scholes closed form is European only")?;
    require_positive("sigma_bs", sigma_bs)?;
    if !r.is_finite() {
        return Err(VgError::InvalidParameter {
            name: "r",
            value: r,
            reason: "must be finite",
        });
    }
    let n = Normal::standard();
    let t = spec.maturity;
    let sd = sigma_bs * t.sqrt();
    let d1 = ((spec.spot / spec.strike).ln() + (r + 0.5 * sigma_bs * sigma_bs) * t) / sd;
    let d2 = d1 - sd;
    let df = (-r * t).exp();
    Ok(match spec.kind {
        OptionKind::Call => spec.spot * n.cdf(d1) - spec.strike * df * n.cdf(d2),
        OptionKind::Put => spec.strike * df * n.cdf(-d2) - spec.spot * n.cdf(-d1),
    })
}
