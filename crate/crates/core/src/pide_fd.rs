//! Explicit finite-difference scheme for the fourth-order PDE obtained by
//! Taylor-expanding the jump integral of the Variance-Gamma PIDE:
//!
//! ```text
//! V_t + (r + omega + c1) V_x + c2/2 V_xx + c3/6 V_xxx + c4/24 V_xxxx = r V
//! ```
//!
//! with `c_n` the per-unit-time cumulants (moments of the Lévy measure).
//! Central differences give a five-point update
//! `(1 + r dt) V^n_i = sum_k p_k V^{n+1}_{i+k}`, `k in {+2, +1, 0, -1, -2}`,
//! whose weights sum to one but can be negative. The scheme is run as is:
//! negative weights are reported, growth of the solution aborts the run.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Result, VgError};
use crate::lattice::step_scale;
use crate::option::{OptionKind, OptionSpec};
use crate::vg_model::{cumulants, martingale_correction, VgParams};

/// Per-unit-time cumulants `c~_n = int y^n nu(dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCumulants {
    pub ct1: f64,
    pub ct2: f64,
    pub ct3: f64,
    pub ct4: f64,
}

impl UnitCumulants {
    pub fn from_params(params: &VgParams) -> Result<Self> {
        let c = cumulants(params, 1.0)?;
        Ok(Self {
            ct1: c.c1,
            ct2: c.c2,
            ct3: c.c3,
            ct4: c.c4,
        })
    }
}

/// Weights of the explicit five-point update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCoefficients {
    pub p_plus_2h: f64,
    pub p_plus_h: f64,
    pub p_0: f64,
    pub p_minus_h: f64,
    pub p_minus_2h: f64,
    /// `1 / (1 + r dt)`.
    pub r_factor: f64,
}

impl FdCoefficients {
    /// Assembles the weights for log-price drift `drift` (per unit time,
    /// `r + omega + c~1` for the VG model).
    pub fn from_unit_cumulants(drift: f64, c: &UnitCumulants, r: f64, dt: f64, h: f64) -> Result<Self> {
        require_positive("dt", dt)?;
        require_positive("h", h)?;
        let h2 = h * h;
        let h3 = h2 * h;
        let h4 = h2 * h2;
        let first = drift * dt / (2.0 * h);
        let second = c.ct2 * dt / (2.0 * h2);
        let third = c.ct3 * dt / (6.0 * h3);
        let fourth = c.ct4 * dt / (6.0 * h4);
        Ok(Self {
            p_plus_h: first + second - third - fourth,
            p_minus_h: -first + second + third - fourth,
            p_plus_2h: c.ct3 * dt / (12.0 * h3) + c.ct4 * dt / (24.0 * h4),
            p_minus_2h: -c.ct3 * dt / (12.0 * h3) + c.ct4 * dt / (24.0 * h4),
            p_0: 1.0 - c.ct2 * dt / h2 + c.ct4 * dt / (4.0 * h4),
            r_factor: 1.0 / (1.0 + r * dt),
        })
    }

    /// Weights ordered `[+2h, +h, 0, -h, -2h]`.
    pub fn weights(&self) -> [f64; 5] {
        [
            self.p_plus_2h,
            self.p_plus_h,
            self.p_0,
            self.p_minus_h,
            self.p_minus_2h,
        ]
    }

    pub fn sum(&self) -> f64 {
        self.weights().iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights().iter().all(|&w| w >= 0.0)
    }
}

const WEIGHT_LABELS: [&str; 5] = ["p_plus_2h", "p_plus_h", "p_0", "p_minus_h", "p_minus_2h"];
const STENCIL: [f64; 5] = [2.0, 1.0, 0.0, -1.0, -2.0];

/// FD weights for the VG model.
pub fn fd_coefficients(params: &VgParams, dt: f64, h: f64) -> Result<FdCoefficients> {
    let c = UnitCumulants::from_params(params)?;
    let drift = params.r + martingale_correction(params)? + c.ct1;
    FdCoefficients::from_unit_cumulants(drift, &c, params.r, dt, h)
}

/// Raw moments `E[dX^k]`, k = 1..4, of the five-point increment law
/// `{+2h, +h, 0, -h, -2h}` weighted by the coefficients.
pub fn local_moments(coeffs: &FdCoefficients, h: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (w, k) in coeffs.weights().iter().zip(STENCIL) {
        let step = k * h;
        out[0] += w * step;
        out[1] += w * step.powi(2);
        out[2] += w * step.powi(3);
        out[3] += w * step.powi(4);
    }
    out
}

/// Spatial and temporal grid for the explicit scheme.
///
/// Nodes `x_i = x_min + i h`, `i = 0..=n_space`, are solved; two ghost
/// layers on each side carry far-field boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub h: f64,
    pub dt: f64,
}

impl GridConfig {
    pub fn new(x_min: f64, x_max: f64, n_space: usize, n_time: usize, maturity: f64) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(VgError::Domain(format!(
                "grid needs finite x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_space < 2 || n_time == 0 {
            return Err(VgError::Domain(format!(
                "grid needs n_space >= 2 and n_time >= 1, got {n_space} and {n_time}"
            )));
        }
        require_positive("maturity", maturity)?;
        Ok(Self {
            x_min,
            x_max,
            n_space,
            n_time,
            h: (x_max - x_min) / n_space as f64,
            dt: maturity / n_time as f64,
        })
    }

    /// Default grid: `h = 2 alpha(dt)` (the lattice spacing) unless
    /// overridden, centred on `ln S0 + (r + omega + c~1) T / 2` with the
    /// given half-width in standard deviations of `X_T`. The width is
    /// rounded up to a whole number of cells, keeping the centre.
    pub fn centered(
        spec: &OptionSpec,
        params: &VgParams,
        n_time: usize,
        h: Option<f64>,
        half_width_sd: f64,
    ) -> Result<Self> {
        spec.validate()?;
        require_positive("half_width_sd", half_width_sd)?;
        if n_time == 0 {
            return Err(VgError::Domain("grid needs n_time >= 1".into()));
        }
        let dt = spec.maturity / n_time as f64;
        let h = match h {
            Some(h) => {
                require_positive("h", h)?;
                h
            }
            None => 2.0 * step_scale(&cumulants(params, dt)?)?,
        };
        let unit = UnitCumulants::from_params(params)?;
        let drift = params.r + martingale_correction(params)? + unit.ct1;
        let center = spec.spot.ln() + 0.5 * drift * spec.maturity;
        let half_width = half_width_sd * (unit.ct2 * spec.maturity).sqrt();
        let n_space = ((2.0 * half_width / h).ceil() as usize).max(2);
        let x_min = center - 0.5 * n_space as f64 * h;
        Ok(Self {
            x_min,
            x_max: x_min + n_space as f64 * h,
            n_space,
            n_time,
            h,
            dt,
        })
    }

    pub fn node(&self, i: isize) -> f64 {
        self.x_min + i as f64 * self.h
    }
}

/// Outcome of an FD run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdResult {
    pub price: f64,
    pub coefficients: FdCoefficients,
    pub grid: GridConfig,
    /// Largest departure of an edge node from its far-field value seen
    /// during the run.
    pub boundary_leak: f64,
    pub warnings: Vec<String>,
}

const GROWTH_LIMIT: f64 = 10.0;
const LEAK_TOLERANCE: f64 = 1e-6;

/// Far-field values: deep in-the-money puts (low x) and calls (high x)
/// follow the forward intrinsic value, American puts the spot intrinsic.
fn far_field(spec: &OptionSpec, r: f64, x: f64, tau: f64, low_side: bool) -> f64 {
    let s = x.exp();
    let k = spec.strike;
    match (spec.kind, low_side) {
        (OptionKind::Put, true) => {
            let strike_pv = if spec.is_american() { k } else { k * (-r * tau).exp() };
            (strike_pv - s).max(0.0)
        }
        (OptionKind::Call, false) => (s - k * (-r * tau).exp()).max(0.0),
        _ => 0.0,
    }
}

/// Explicit backward time-stepping of the fourth-order PDE. American
/// contracts are projected onto the payoff after every step.
pub fn price_fd(spec: &OptionSpec, params: &VgParams, grid: &GridConfig) -> Result<FdResult> {
    spec.validate()?;
    params.validate()?;
    let coefficients = fd_coefficients(params, grid.dt, grid.h)?;
    let [w2p, w1p, w0, w1m, w2m] = coefficients.weights();
    let rf = coefficients.r_factor;
    let n = grid.n_space;
    let total = n + 5;
    let x: Vec<f64> = (0..total).map(|i| grid.node(i as isize - 2)).collect();
    let payoff: Vec<f64> = x.iter().map(|&xi| spec.payoff(xi.exp())).collect();

    let bound = match spec.kind {
        OptionKind::Put => spec.strike,
        OptionKind::Call => x[total - 1].exp(),
    };
    let mut values = payoff.clone();
    let mut next = values.clone();
    let mut boundary_leak: f64 = 0.0;

    for step in 1..=grid.n_time {
        let tau = step as f64 * grid.dt;
        for i in 2..total - 2 {
            next[i] = rf
                * (w2p * values[i + 2]
                    + w1p * values[i + 1]
                    + w0 * values[i]
                    + w1m * values[i - 1]
                    + w2m * values[i - 2]);
        }
        for i in [0, 1] {
            next[i] = far_field(spec, params.r, x[i], tau, true);
        }
        for i in [total - 2, total - 1] {
            next[i] = far_field(spec, params.r, x[i], tau, false);
        }
        if spec.is_american() {
            for (v, &p) in next.iter_mut().zip(&payoff) {
                if p > *v {
                    *v = p;
                }
            }
        }
        boundary_leak = boundary_leak
            .max((next[2] - far_field(spec, params.r, x[2], tau, true)).abs())
            .max((next[total - 3] - far_field(spec, params.r, x[total - 3], tau, false)).abs());

        let max_abs = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(max_abs <= GROWTH_LIMIT * bound) {
            return Err(VgError::Instability {
                step,
                max_value: max_abs,
                bound: GROWTH_LIMIT * bound,
            });
        }
        std::mem::swap(&mut values, &mut next);
    }

    let x0 = spec.spot.ln();
    if x0 < grid.x_min || x0 > grid.x_max {
        return Err(VgError::Domain(format!(
            "log spot {x0} outside the grid [{}, {}]",
            grid.x_min, grid.x_max
        )));
    }
    let pos = (x0 - grid.x_min) / grid.h;
    let left = (pos.floor() as usize).min(n - 1);
    let frac = pos - left as f64;
    let price = (1.0 - frac) * values[left + 2] + frac * values[left + 3];

    let mut warnings = Vec::new();
    if !coefficients.is_nonnegative() {
        let negative: Vec<String> = WEIGHT_LABELS
            .iter()
            .zip(coefficients.weights())
            .filter(|(_, w)| *w < 0.0)
            .map(|(l, w)| format!("{l}={w:.3e}"))
            .collect();
        warnings.push(format!("negative weights: {}", negative.join(", ")));
    }
    let scale = spec.strike;
    if boundary_leak > LEAK_TOLERANCE * scale {
        warnings.push(format!(
            "grid may be too narrow: edge nodes depart from far-field values by {boundary_leak:.3e}"
        ));
    }
    Ok(FdResult {
        price,
        coefficients,
        grid: *grid,
        boundary_leak,
        warnings,
    })
}

/// One point of the `p3` comparison curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P3Point {
    pub kbar: f64,
    pub p3_mm: f64,
    pub p3_pde: f64,
}

/// Centre weights of the moment-matched lattice and of the FD scheme as
/// functions of excess kurtosis.
///
/// `unit_c2` is the per-unit-time second cumulant; the step's `c2 dt` and
/// `c4 dt = kbar (c2 dt)^2` are rebuilt from it, and `h = 2 alpha(dt)`.
pub fn p3_curve(kbar_grid: &[f64], unit_c2: f64, dt: f64) -> Result<Vec<P3Point>> {
    require_positive("c2", unit_c2)?;
    require_positive("dt", dt)?;
    let c2_step = unit_c2 * dt;
    kbar_grid
        .iter()
        .map(|&kbar| {
            if !(kbar > 0.0) || !kbar.is_finite() {
                return Err(VgError::InvalidParameter {
                    name: "kbar",
                    value: kbar,
                    reason: "must be finite and > 0",
                });
            }
            let c4_step = kbar * c2_step * c2_step;
            let alpha = c2_step.sqrt() * ((3.0 + kbar) / 12.0).sqrt();
            let h = 2.0 * alpha;
            let h2 = h * h;
            Ok(P3Point {
                kbar,
                p3_mm: (3.0 + 2.0 * kbar) / (2.0 * (3.0 + kbar)),
                p3_pde: 1.0 - c2_step / h2 + c4_step / (4.0 * h2 * h2),
            })
        })
        .collect()
}

/// A negative weight found at one `(dt, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeWeight {
    pub label: String,
    pub value: f64,
}

/// Sign structure of the FD weights along an `h` scan at fixed `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub dt: f64,
    pub h: f64,
    pub coefficients: FdCoefficients,
    pub negative: Vec<NegativeWeight>,
    /// Closed sub-intervals of the scan where all five weights are >= 0.
    pub nonnegative_h: Vec<(f64, f64)>,
    /// Sub-intervals of the scan where at least one weight is negative.
    pub negative_h: Vec<(f64, f64)>,
}

impl PositivityReport {
    pub fn all_nonnegative(&self) -> bool {
        self.negative.is_empty()
    }
}

fn negative_weights(c: &FdCoefficients) -> Vec<NegativeWeight> {
    WEIGHT_LABELS
        .iter()
        .zip(c.weights())
        .filter(|(_, w)| *w < 0.0)
        .map(|(l, w)| NegativeWeight {
            label: (*l).to_string(),
            value: w,
        })
        .collect()
}

/// Scans `h` over `h_range` (`points` equally spaced values) with `make`
/// producing the weights, and builds the report around `h`.
pub fn positivity_scan<F>(dt: f64, h: f64, h_range: (f64, f64), points: usize, make: F) -> Result<PositivityReport>
where
    F: Fn(f64) -> Result<FdCoefficients>,
{
    let coefficients = make(h)?;
    let points = points.max(2);
    let (lo, hi) = h_range;
    require_positive("h_range.0", lo)?;
    if !(hi > lo) {
        return Err(VgError::Domain(format!("empty h range [{lo}, {hi}]")));
    }
    let mut nonnegative_h = Vec::new();
    let mut negative_h = Vec::new();
    let mut run: Option<(bool, f64, f64)> = None;
    for k in 0..points {
        let hk = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let ok = make(hk)?.is_nonnegative();
        run = match run {
            Some((state, start, _)) if state == ok => Some((state, start, hk)),
            Some((state, start, end)) => {
                if state {
                    nonnegative_h.push((start, end));
                } else {
                    negative_h.push((start, end));
                }
                Some((ok, hk, hk))
            }
            None => Some((ok, hk, hk)),
        };
    }
    if let Some((state, start, end)) = run {
        if state {
            nonnegative_h.push((start, end));
        } else {
            negative_h.push((start, end));
        }
    }
    Ok(PositivityReport {
        dt,
        h,
        negative: negative_weights(&coefficients),
        coefficients,
        nonnegative_h,
        negative_h,
    })
}

/// Positivity of the VG weights at `(dt, h)`, with an `h` scan over
/// `[alpha(dt)/2, 4 alpha(dt)]`.
pub fn positivity_report(params: &VgParams, dt: f64, h: f64) -> Result<PositivityReport> {
    let alpha = step_scale(&cumulants(params, dt)?)?;
    positivity_scan(dt, h, (0.5 * alpha, 4.0 * alpha), 701, |hk| {
        fd_coefficients(params, dt, hk)
    })
}
