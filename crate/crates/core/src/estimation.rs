//! Method-of-moments fits of VG and Normal laws to a log-return series and
//! the histogram/density overlay used to compare them.
//!
//! All fitted quantities are per observation period.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Normal};

use crate::error::{Result, VgError};
use crate::vg_model::{cumulants, pdf, skew_kurt, VgParams};

/// Minimum number of observations accepted by the fitting routines.
pub const MIN_FIT_LEN: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub period_label: String,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>, period_label: impl Into<String>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(VgError::NonFinite(i));
        }
        Ok(Self {
            values,
            period_label: period_label.into(),
        })
    }

    /// Log-returns `ln(P_{i+1} / P_i)` of a price path.
    pub fn from_prices(prices: &[f64], period_label: impl Into<String>) -> Result<Self> {
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(VgError::InvalidParameter {
                name: "price",
                value: prices[i],
                reason: "prices must be finite and > 0",
            });
        }
        Self::new(
            prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect(),
            period_label,
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require_len(&self, min: usize) -> Result<()> {
        if self.len() < min {
            return Err(VgError::SeriesTooShort {
                len: self.len(),
                min,
            });
        }
        Ok(())
    }
}

/// Sample mean, unbiased variance, skewness `m3 / m2^{3/2}` and
/// (non-excess) kurtosis `m4 / m2^2` with `m_k` the central sample moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub n: usize,
}

pub fn sample_moments(series: &ReturnSeries) -> Result<SampleMoments> {
    series.require_len(2)?;
    let x = &series.values;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // relative to the scale of the data, so constant series are caught
    // despite rounding in the mean
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if m2.sqrt() <= 1e-14 * scale {
        return Err(VgError::ZeroVariance);
    }
    Ok(SampleMoments {
        mean,
        variance: m2 * n / (n - 1.0),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        n: x.len(),
    })
}

/// Model skewness/kurtosis of the fitted law against the sample values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResidual {
    pub model_skewness: f64,
    pub model_kurtosis: f64,
    pub skewness_error: f64,
    pub kurtosis_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgFit {
    pub theta: f64,
    pub sigma: f64,
    pub kappa: f64,
    /// Location shift: the fitted law is `drift + X_1`.
    pub drift: f64,
    pub residual: FitResidual,
}

impl VgFit {
    /// Parameters with zero rate, for density evaluation.
    pub fn params(&self) -> Result<VgParams> {
        VgParams::new(self.theta, self.sigma, self.kappa, 0.0)
    }

    /// Fitted density at `x` (one observation period, shifted by `drift`).
    pub fn density(&self, x: f64) -> Result<f64> {
        pdf(&self.params()?, 1.0, x - self.drift)
    }
}

/// Small-skew moment inversion: `sigma^2 = var`, `kappa = kurt / 3 - 1`,
/// `theta = skew sigma / (3 kappa)`, `drift = mean - theta`.
pub fn fit_vg_moments(m: &SampleMoments) -> Result<VgFit> {
    if !(m.variance > 0.0) {
        return Err(VgError::ZeroVariance);
    }
    if !(m.kurtosis > 3.0) {
        return Err(VgError::NotVgFittable {
            kurtosis: m.kurtosis,
        });
    }
    let sigma = m.variance.sqrt();
    let kappa = m.kurtosis / 3.0 - 1.0;
    if !(kappa > 0.0) {
        return Err(VgError::NotVgFittable {
            kurtosis: m.kurtosis,
        });
    }
    let theta = m.skewness * sigma / (3.0 * kappa);
    let params = VgParams::new(theta, sigma, kappa, 0.0)?;
    let (model_skewness, excess) = skew_kurt(&cumulants(&params, 1.0)?)?;
    let model_kurtosis = 3.0 + excess;
    Ok(VgFit {
        theta,
        sigma,
        kappa,
        drift: m.mean - theta,
        residual: FitResidual {
            model_skewness,
            model_kurtosis,
            skewness_error: model_skewness - m.skewness,
            kurtosis_error: model_kurtosis - m.kurtosis,
        },
    })
}

/// `(mu, sigma)` of the Normal law with the sample mean and variance.
pub fn fit_normal(m: &SampleMoments) -> Result<(f64, f64)> {
    if !(m.variance > 0.0) {
        return Err(VgError::ZeroVariance);
    }
    Ok((m.mean, m.variance.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub bin_center: f64,
    pub hist_density: f64,
    /// `None` when the VG fit was not possible.
    pub vg_density: Option<f64>,
    pub normal_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOverlay {
    pub moments: SampleMoments,
    pub vg: Option<VgFit>,
    /// Why the VG column is missing, if it is.
    pub vg_fallback: Option<String>,
    pub normal: (f64, f64),
    pub bin_width: f64,
    pub rows: Vec<DensityRow>,
}

/// Histogram of the series normalised to unit area, with the fitted VG and
/// Normal densities at the bin centres. A series that the VG law cannot fit
/// (kurtosis <= 3) yields the Normal column only.
pub fn density_overlay_table(series: &ReturnSeries, bins: usize) -> Result<DensityOverlay> {
    series.require_len(MIN_FIT_LEN)?;
    if bins == 0 {
        return Err(VgError::Domain("histogram needs at least one bin".into()));
    }
    let moments = sample_moments(series)?;
    let normal = fit_normal(&moments)?;
    let (vg, vg_fallback) = match fit_vg_moments(&moments) {
        Ok(fit) => (Some(fit), None),
        Err(e @ VgError::NotVgFittable { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    let lo = series.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in &series.values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let n = series.len() as f64;
    let normal_law = Normal::new(normal.0, normal.1).map_err(|e| VgError::Domain(e.to_string()))?;
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let center = lo + (i as f64 + 0.5) * width;
            let vg_density = vg.as_ref().map(|f| f.density(center)).transpose()?;
            Ok(DensityRow {
                bin_center: center,
                hist_density: c as f64 / (n * width),
                vg_density,
                normal_density: normal_law.pdf(center),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityOverlay {
        moments,
        vg,
        vg_fallback,
        normal,
        bin_width: width,
        rows,
    })
}

/// Fit that requires the minimum sample size.
pub fn fit_series(series: &ReturnSeries) -> Result<(SampleMoments, std::result::Result<VgFit, VgError>)> {
    series.require_len(MIN_FIT_LEN)?;
    let m = sample_moments(series)?;
    let fit = fit_vg_moments(&m);
    if let Err(ref e) = fit {
        if !matches!(e, VgError::NotVgFittable { .. }) {
            return Err(e.clone());
        }
    }
    Ok((m, fit))
}
