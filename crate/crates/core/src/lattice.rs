//! Recombining pentanomial lattice for exponential Variance-Gamma prices.
//!
//! One step moves the log-price by `b dt + j alpha`, `j` in `{4, 2, 0, -2, -4}`,
//! where `b = r + omega + theta` and `alpha` is chosen from the second and
//! fourth cumulants of the `dt` increment. The five branch probabilities
//! match the increment's central moments up to order four. After `n` steps
//! the lattice has `4n + 1` distinct nodes, so backward induction costs
//! `O(N^2)` time and one vector of `4N + 1` values.
//!
//! [`binomial_bs_price`] is the two-branch Cox-Ross-Rubinstein lattice used
//! as the Black-Scholes baseline.

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Result, VgError};
use crate::option::OptionSpec;
use crate::vg_model::{central_moments_from_cumulants, cumulants, martingale_correction, skew_kurt, Cumulants, VgParams};

/// Number of branches per step.
pub const BRANCHES: usize = 5;

/// Branch multipliers of `alpha`, from the largest up-move to the largest down-move.
pub const BRANCH_OFFSETS: [f64; BRANCHES] = [4.0, 2.0, 0.0, -2.0, -4.0];

const PROBABILITY_FLOOR: f64 = -1e-12;
const CROSS_CHECK_TOL: f64 = 1e-10;
const LN_F64_MAX: f64 = 709.0;

/// Time discretisation of the lattice: `n_steps` steps from `t0` to the
/// option maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub n_steps: usize,
    pub t0: f64,
}

impl LatticeConfig {
    pub fn new(n_steps: usize) -> Self {
        Self { n_steps, t0: 0.0 }
    }

    pub fn dt(&self, maturity: f64) -> Result<f64> {
        if self.n_steps == 0 {
            return Err(VgError::InvalidParameter {
                name: "n_steps",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        require_finite("t0", self.t0)?;
        let span = maturity - self.t0;
        require_positive("maturity - t0", span)?;
        Ok(span / self.n_steps as f64)
    }
}

/// Per-step geometry of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    /// Half-spacing between adjacent branches in log-price.
    pub alpha: f64,
    /// Drift of one step, `b * dt`.
    pub b_step: f64,
    pub u: f64,
    pub d: f64,
}

/// Branch probabilities `p1..p5`, ordered from the largest up-move to the
/// largest down-move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(pub [f64; BRANCHES]);

impl ProbVector {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_array(&self) -> &[f64; BRANCHES] {
        &self.0
    }

    /// `E[(b_step + j alpha)^k]` for k = 1..4.
    pub fn raw_moments(&self, alpha: f64, b_step: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (p, j) in self.0.iter().zip(BRANCH_OFFSETS) {
            let y = b_step + j * alpha;
            let mut pw = 1.0;
            for m in out.iter_mut() {
                pw *= y;
                *m += p * pw;
            }
        }
        out
    }
}

/// `alpha = sqrt(c2) * sqrt((3 + kbar) / 12)`, `kbar = c4 / c2^2`, with the
/// cumulants taken at the step horizon.
pub fn step_scale(c_step: &Cumulants) -> Result<f64> {
    let (_, kbar) = skew_kurt(c_step)?;
    if !(c_step.c4 >= 0.0) {
        return Err(VgError::Domain(format!("step scale needs c4 >= 0, got {}", c_step.c4)));
    }
    Ok(c_step.c2.sqrt() * ((3.0 + kbar) / 12.0).sqrt())
}

/// Closed form of the moment-matched probabilities in terms of skewness `s`
/// and excess kurtosis `kbar`.
pub fn closed_form_probabilities(skewness: f64, kbar: f64) -> ProbVector {
    let a = 3.0 + kbar;
    let q = skewness * (9.0 + 3.0 * kbar).sqrt();
    let d = a * a;
    ProbVector([
        (a + q) / (4.0 * d),
        (a - q) / (2.0 * d),
        (3.0 + 2.0 * kbar) / (2.0 * a),
        (a + q) / (2.0 * d),
        (a - q) / (4.0 * d),
    ])
}

/// Solves `sum p = 1`, `sum p j = 0`, `alpha^k sum p j^k = mu_k` (k = 2, 3, 4).
fn solve_moment_system(alpha: f64, mu: (f64, f64, f64)) -> Result<ProbVector> {
    let mut m = Matrix5::zeros();
    for (col, &j) in BRANCH_OFFSETS.iter().enumerate() {
        let mut pw = 1.0;
        for row in 0..BRANCHES {
            m[(row, col)] = pw;
            pw *= j;
        }
    }
    let rhs = Vector5::new(
        1.0,
        0.0,
        mu.0 / alpha.powi(2),
        mu.1 / alpha.powi(3),
        mu.2 / alpha.powi(4),
    );
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| VgError::Domain("singular moment-matching system".into()))?;
    Ok(ProbVector([sol[0], sol[1], sol[2], sol[3], sol[4]]))
}

/// Moment-matched branch probabilities for the step increment.
///
/// The linear moment system is the primary computation; the closed form in
/// `(s, kbar)` must agree with it to `1e-10`. Entries in `(-1e-12, 0)` are
/// clamped to zero; anything more negative is an error.
pub fn transition_probabilities(c_step: &Cumulants) -> Result<ProbVector> {
    let (skewness, kbar) = skew_kurt(c_step)?;
    let alpha = step_scale(c_step)?;
    let mut probs = solve_moment_system(alpha, central_moments_from_cumulants(c_step))?;
    let closed = closed_form_probabilities(skewness, kbar);

    let discrepancy = probs
        .0
        .iter()
        .zip(closed.0.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(discrepancy <= CROSS_CHECK_TOL) {
        return Err(VgError::ProbabilityMismatch { discrepancy });
    }
    for (index, p) in probs.0.iter_mut().enumerate() {
        if *p < PROBABILITY_FLOOR {
            return Err(VgError::NegativeProbability {
                index: index + 1,
                value: *p,
                skewness,
                kurtosis: kbar,
            });
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    Ok(probs)
}

/// `u = exp(b dt / 4 + alpha)`, `d = exp(b dt / 4 - alpha)`, so that branch
/// `l` moves the log-price by `(5 - l) ln u + (l - 1) ln d = b dt + (6 - 2l) alpha`.
pub fn up_down_factors(b_per_unit: f64, dt: f64, alpha: f64) -> StepParams {
    let b_step = b_per_unit * dt;
    let shift = b_step / (BRANCHES - 1) as f64;
    StepParams {
        alpha,
        b_step,
        u: (shift + alpha).exp(),
        d: (shift - alpha).exp(),
    }
}

/// Log-price of node `j` (0-based, top first) after `level` steps.
#[inline]
fn node_log_price(ln_s0: f64, ln_u: f64, ln_d: f64, level: usize, j: usize) -> f64 {
    ln_s0 + (4 * level - j) as f64 * ln_u + j as f64 * ln_d
}

fn check_log_range(ln_s0: f64, ln_u: f64, ln_d: f64, n: usize) -> Result<()> {
    let top = node_log_price(ln_s0, ln_u, ln_d, n, 0);
    let bottom = node_log_price(ln_s0, ln_u, ln_d, n, 4 * n);
    for lp in [top, bottom] {
        if !(lp.abs() < LN_F64_MAX) {
            return Err(VgError::LatticeOverflow { log_price: lp });
        }
    }
    Ok(())
}

/// `S_N^{(j)} = u^{4N+1-j} d^{j-1} S0`, `j = 1..4N+1`, strictly decreasing.
pub fn terminal_prices(spot: f64, step: &StepParams, n: usize) -> Result<Vec<f64>> {
    require_positive("spot", spot)?;
    if n == 0 {
        return Err(VgError::InvalidParameter {
            name: "n_steps",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    let (ln_s0, ln_u, ln_d) = (spot.ln(), step.u.ln(), step.d.ln());
    check_log_range(ln_s0, ln_u, ln_d, n)?;
    Ok((0..=4 * n)
        .map(|j| node_log_price(ln_s0, ln_u, ln_d, n, j).exp())
        .collect())
}

/// A pentanomial lattice for one set of model parameters and one time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PentanomialLattice {
    pub params: VgParams,
    pub n_steps: usize,
    pub dt: f64,
    pub omega: f64,
    /// `b = r + omega + theta`, per unit time.
    pub drift: f64,
    pub step_cumulants: Cumulants,
    pub probabilities: ProbVector,
    pub step: StepParams,
}

impl PentanomialLattice {
    pub fn new(params: &VgParams, n_steps: usize, dt: f64) -> Result<Self> {
        params.validate()?;
        require_positive("dt", dt)?;
        if n_steps == 0 {
            return Err(VgError::InvalidParameter {
                name: "n_steps",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        let omega = martingale_correction(params)?;
        let drift = params.r + omega + params.theta;
        let step_cumulants = cumulants(params, dt)?;
        let alpha = step_scale(&step_cumulants)?;
        let probabilities = transition_probabilities(&step_cumulants)?;
        Ok(Self {
            params: *params,
            n_steps,
            dt,
            omega,
            drift,
            step_cumulants,
            probabilities,
            step: up_down_factors(drift, dt, alpha),
        })
    }

    pub fn for_option(spec: &OptionSpec, params: &VgParams, cfg: &LatticeConfig) -> Result<Self> {
        spec.validate()?;
        let dt = cfg.dt(spec.maturity)?;
        Self::new(params, cfg.n_steps, dt)
    }

    /// Backward induction from the terminal payoff. American contracts take
    /// the larger of continuation and intrinsic value at every node; on a
    /// tie the continuation value is kept.
    pub fn price(&self, spec: &OptionSpec) -> Result<f64> {
        spec.validate()?;
        let n = self.n_steps;
        let disc = (-self.params.r * self.dt).exp();
        let p = self.probabilities.0;
        let (ln_s0, ln_u, ln_d) = (spec.spot.ln(), self.step.u.ln(), self.step.d.ln());
        check_log_range(ln_s0, ln_u, ln_d, n)?;

        let mut values: Vec<f64> = (0..=4 * n)
            .map(|j| spec.payoff(node_log_price(ln_s0, ln_u, ln_d, n, j).exp()))
            .collect();

        for level in (0..n).rev() {
            for j in 0..=4 * level {
                let cont = disc
                    * (p[0] * values[j]
                        + p[1] * values[j + 1]
                        + p[2] * values[j + 2]
                        + p[3] * values[j + 3]
                        + p[4] * values[j + 4]);
                values[j] = if spec.is_american() {
                    let exercise = spec.payoff(node_log_price(ln_s0, ln_u, ln_d, level, j).exp());
                    if exercise > cont {
                        exercise
                    } else {
                        cont
                    }
                } else {
                    cont
                };
            }
            values.truncate(4 * level + 1);
        }
        Ok(values[0])
    }

    /// Exact law of the log-price after `n` steps, as `(log_price, probability)`
    /// pairs over the `4n + 1` nodes (top first). Intended for small `n`.
    pub fn node_distribution(&self, spot: f64, n: usize) -> Result<Vec<(f64, f64)>> {
        require_positive("spot", spot)?;
        let (ln_s0, ln_u, ln_d) = (spot.ln(), self.step.u.ln(), self.step.d.ln());
        let mut probs = vec![1.0];
        for _ in 0..n {
            let mut next = vec![0.0; probs.len() + 4];
            for (j, &q) in probs.iter().enumerate() {
                for (l, &pl) in self.probabilities.0.iter().enumerate() {
                    next[j + l] += q * pl;
                }
            }
            probs = next;
        }
        Ok(probs
            .into_iter()
            .enumerate()
            .map(|(j, q)| (node_log_price(ln_s0, ln_u, ln_d, n, j), q))
            .collect())
    }

    /// `e^{-rT} E[S_T] / S0 - 1` under the lattice law, computed in closed
    /// form from one step.
    pub fn martingale_residual(&self) -> f64 {
        let one_step: f64 = self
            .probabilities
            .0
            .iter()
            .zip(BRANCH_OFFSETS)
            .map(|(p, j)| p * (j * self.step.alpha).exp())
            .sum::<f64>()
            * (self.step.b_step - self.params.r * self.dt).exp();
        (self.n_steps as f64 * one_step.ln()).exp_m1()
    }
}

/// Prices `spec` on a pentanomial lattice with `cfg.n_steps` steps.
pub fn price_lattice(spec: &OptionSpec, params: &VgParams, cfg: &LatticeConfig) -> Result<f64> {
    PentanomialLattice::for_option(spec, params, cfg)?.price(spec)
}

/// Cox-Ross-Rubinstein binomial price under Black-Scholes dynamics with
/// volatility `sigma_bs` and rate `r`.
pub fn binomial_bs_price(spec: &OptionSpec, sigma_bs: f64, r: f64, n: usize) -> Result<f64> {
    spec.validate()?;
    require_positive("sigma_bs", sigma_bs)?;
    require_finite("r", r)?;
    if n == 0 {
        return Err(VgError::InvalidParameter {
            name: "n_steps",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    let dt = spec.maturity / n as f64;
    let ln_u = sigma_bs * dt.sqrt();
    let (u, d) = (ln_u.exp(), (-ln_u).exp());
    let growth = (r * dt).exp();
    let p = (growth - d) / (u - d);
    if !(0.0..=1.0).contains(&p) {
        return Err(VgError::Domain(format!(
            "CRR probability {p} outside [0, 1]; increase the number of steps"
        )));
    }
    let disc = 1.0 / growth;
    let ln_s0 = spec.spot.ln();
    // node j at level k: S0 u^{k-j} d^j = S0 exp((k - 2j) ln_u)
    let price_at = |k: usize, j: usize| (ln_s0 + (k as f64 - 2.0 * j as f64) * ln_u).exp();
    let mut values: Vec<f64> = (0..=n).map(|j| spec.payoff(price_at(n, j))).collect();
    for k in (0..n).rev() {
        for j in 0..=k {
            let cont = disc * (p * values[j] + (1.0 - p) * values[j + 1]);
            values[j] = if spec.is_american() {
                cont.max(spec.payoff(price_at(k, j)))
            } else {
                cont
            };
        }
        values.truncate(k + 1);
    }
    Ok(values[0])
}
