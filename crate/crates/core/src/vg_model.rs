//! Closed-form mathematics of the Variance-Gamma process
//! `X_t = theta * G_t + sigma * W(G_t)`, with `G_t` a Gamma subordinator of
//! unit mean rate and variance rate `kappa`.
//!
//! Everything here is a pure function of [`VgParams`]: cumulants, the Lévy
//! density, the characteristic function and Lévy symbol, the probability
//! density (through [`bessel_k`]) and the martingale correction `omega` that
//! makes `S_t = S_0 exp((r + omega) t + X_t)` a discounted martingale.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{require_finite, require_positive, Result, VgError};
use crate::quadrature::{integrate_with_breaks, Integral, QuadOptions};

pub use crate::bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};

/// Risk-neutral Variance-Gamma parameters plus the risk-free rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    /// Drift of the subordinated Brownian motion.
    pub theta: f64,
    /// Volatility of the subordinated Brownian motion.
    pub sigma: f64,
    /// Variance rate of the Gamma clock.
    pub kappa: f64,
    /// Continuously compounded risk-free rate.
    pub r: f64,
}

impl VgParams {
    /// Validated constructor; see [`VgParams::validate`].
    pub fn new(theta: f64, sigma: f64, kappa: f64, r: f64) -> Result<Self> {
        let p = Self {
            theta,
            sigma,
            kappa,
            r,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters of the reference experiments: r = 0.06, theta = -0.1,
    /// sigma = 0.2, kappa = 0.2.
    pub fn reference() -> Self {
        Self {
            theta: -0.1,
            sigma: 0.2,
            kappa: 0.2,
            r: 0.06,
        }
    }

    /// Checks sigma > 0, kappa > 0, r >= 0 and that the martingale
    /// correction exists.
    pub fn validate(&self) -> Result<()> {
        require_finite("theta", self.theta)?;
        require_positive("sigma", self.sigma)?;
        require_positive("kappa", self.kappa)?;
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(VgError::InvalidParameter {
                name: "r",
                value: self.r,
                reason: "must be finite and >= 0",
            });
        }
        let arg = self.omega_log_argument();
        if !(arg > 0.0) {
            return Err(VgError::MartingaleCorrectionUndefined { argument: arg });
        }
        Ok(())
    }

    fn omega_log_argument(&self) -> f64 {
        1.0 - self.theta * self.kappa - 0.5 * self.sigma * self.sigma * self.kappa
    }

    /// Risk-neutral log-price drift per unit time, `r + omega`.
    pub fn log_drift(&self) -> Result<f64> {
        Ok(self.r + martingale_correction(self)?)
    }
}

/// First four cumulants of `X_t` at horizon `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cumulants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub t: f64,
}

impl Cumulants {
    /// Shifts the mean by `drift` (only `c1` changes).
    pub fn with_drift(&self, drift: f64) -> Self {
        Self {
            c1: self.c1 + drift,
            ..*self
        }
    }

    /// Raw moments `E[X^k]`, k = 1..4.
    pub fn raw_moments(&self) -> [f64; 4] {
        let (c1, c2, c3, c4) = (self.c1, self.c2, self.c3, self.c4);
        [
            c1,
            c2 + c1 * c1,
            c3 + 3.0 * c2 * c1 + c1.powi(3),
            c4 + 4.0 * c3 * c1 + 3.0 * c2 * c2 + 6.0 * c2 * c1 * c1 + c1.powi(4),
        ]
    }
}

/// A point of the Variance-Gamma density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub x: f64,
    pub f: f64,
}

fn check_horizon(t: f64) -> Result<()> {
    require_positive("t", t)
}

pub fn cumulants(params: &VgParams, t: f64) -> Result<Cumulants> {
    params.validate()?;
    check_horizon(t)?;
    let VgParams {
        theta: th,
        sigma: s,
        kappa: k,
        ..
    } = *params;
    let s2 = s * s;
    Ok(Cumulants {
        c1: t * th,
        c2: t * (s2 + th * th * k),
        c3: t * (2.0 * th.powi(3) * k * k + 3.0 * s2 * th * k),
        c4: t * (3.0 * s2 * s2 * k + 12.0 * s2 * th * th * k * k + 6.0 * th.powi(4) * k.powi(3)),
        t,
    })
}

/// `omega = ln(1 - theta kappa - sigma^2 kappa / 2) / kappa`, per unit time.
pub fn martingale_correction(params: &VgParams) -> Result<f64> {
    params.validate()?;
    let arg = params.omega_log_argument();
    // ln_1p keeps precision as kappa -> 0, where omega -> -theta - sigma^2/2.
    Ok((arg - 1.0).ln_1p() / params.kappa)
}

/// Density of the Lévy measure at jump size `x != 0`.
pub fn levy_density(params: &VgParams, x: f64) -> Result<f64> {
    params.validate()?;
    if x == 0.0 || !x.is_finite() {
        return Err(VgError::Domain(format!(
            "Lévy density is defined for finite x != 0, got {x}"
        )));
    }
    let VgParams {
        theta,
        sigma,
        kappa,
        ..
    } = *params;
    let s2 = sigma * sigma;
    let decay = (2.0 / kappa + theta * theta / s2).sqrt() / sigma;
    Ok((theta * x / s2 - decay * x.abs()).exp() / (kappa * x.abs()))
}

/// `int x^n nu(dx)` by quadrature on each half-line.
///
/// The lower cut `eps` makes the omitted mass `int_0^eps x^{n-1}/kappa dx`
/// smaller than `1e-14`; the upper cut drops a tail below `1e-16` relative.
pub fn levy_moment(params: &VgParams, n: u32) -> Result<f64> {
    params.validate()?;
    if n == 0 {
        return Err(VgError::Domain("Lévy measure has infinite mass (n = 0)".into()));
    }
    let VgParams {
        theta,
        sigma,
        kappa,
        ..
    } = *params;
    let s2 = sigma * sigma;
    let decay = (2.0 / kappa + theta * theta / s2).sqrt() / sigma;
    let nf = n as f64;
    let eps = (1e-14 * nf * kappa).powf(1.0 / nf);
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let rate = decay - sign * theta / s2;
        // x^{n-1} e^{-rate x}: tail beyond (n - 1)/rate + 40/rate is ~e^-40
        let upper = (nf - 1.0) / rate + 45.0 / rate;
        let peak = (nf - 1.0) / rate;
        let r = integrate_with_breaks(
            |y: f64| {
                let x = sign * y;
                x.powi(n as i32) * levy_density(params, x).unwrap_or(0.0)
            },
            eps,
            upper,
            &[peak, 1.0 / rate, 5.0 / rate],
            QuadOptions {
                abs_tol: 0.0,
                rel_tol: 1e-13,
                max_intervals: 4000,
            },
        )?;
        total += r.value;
    }
    Ok(total)
}

fn char_base(params: &VgParams, u: Complex64) -> Complex64 {
    let VgParams {
        theta,
        sigma,
        kappa,
        ..
    } = *params;
    let i = Complex64::i();
    Complex64::new(1.0, 0.0) - i * theta * kappa * u + 0.5 * sigma * sigma * kappa * u * u
}

fn check_branch(z: Complex64) -> Result<()> {
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(VgError::BranchCut { re: z.re, im: z.im });
    }
    Ok(())
}

/// `phi(u) = E[exp(i u X_t)] = (1 - i theta kappa u + sigma^2 kappa u^2 / 2)^(-t/kappa)`,
/// principal branch.
pub fn characteristic_function(params: &VgParams, u: Complex64, t: f64) -> Result<Complex64> {
    params.validate()?;
    check_horizon(t)?;
    let z = char_base(params, u);
    check_branch(z)?;
    Ok(z.powc(Complex64::new(-t / params.kappa, 0.0)))
}

/// Lévy symbol `eta(u) = -ln(1 - i theta kappa u + sigma^2 kappa u^2 / 2) / kappa`.
pub fn levy_symbol(params: &VgParams, u: Complex64) -> Result<Complex64> {
    params.validate()?;
    let z = char_base(params, u);
    check_branch(z)?;
    Ok(-z.ln() / params.kappa)
}

/// Natural log of the density of `X_t` at `x`. `+inf` at the origin when
/// `t / kappa <= 1/2`.
pub fn ln_pdf(params: &VgParams, t: f64, x: f64) -> Result<f64> {
    params.validate()?;
    check_horizon(t)?;
    if !x.is_finite() {
        return Err(VgError::Domain(format!("density argument must be finite, got {x}")));
    }
    let VgParams {
        theta,
        sigma,
        kappa,
        ..
    } = *params;
    let s2 = sigma * sigma;
    let shape = t / kappa;
    let order = shape - 0.5;
    let a = 2.0 * s2 / kappa + theta * theta;
    let norm = std::f64::consts::LN_2
        - shape * kappa.ln()
        - 0.5 * (2.0 * std::f64::consts::PI).ln()
        - sigma.ln()
        - ln_gamma(shape);
    if x == 0.0 {
        if order <= 0.0 {
            return Ok(f64::INFINITY);
        }
        // K_v(z) ~ Gamma(v)/2 (2/z)^v as z -> 0
        return Ok(norm + ln_gamma(order) - std::f64::consts::LN_2
            + order * (2.0 * s2 / a).ln());
    }
    let arg = x.abs() * a.sqrt() / s2;
    Ok(norm + theta * x / s2 + 0.5 * order * (x * x / a).ln() + ln_bessel_k(order, arg)?)
}

/// Density of `X_t` (no drift) at `x`.
pub fn pdf(params: &VgParams, t: f64, x: f64) -> Result<f64> {
    Ok(ln_pdf(params, t, x)?.exp())
}

/// Integrates `g(x) f_{X_t}(x)` over `[lo, hi]`, splitting at the origin and
/// at `breaks`. Density failures surface as the returned error.
pub fn integrate_against_pdf<G: FnMut(f64) -> f64>(
    params: &VgParams,
    t: f64,
    mut g: G,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Integral> {
    params.validate()?;
    check_horizon(t)?;
    let mut failure = None;
    let mut all_breaks = Vec::with_capacity(breaks.len() + 1);
    all_breaks.push(0.0);
    all_breaks.extend_from_slice(breaks);
    let out = integrate_with_breaks(
        |x| match ln_pdf(params, t, x) {
            Ok(lf) => {
                let gx = g(x);
                if gx == 0.0 {
                    0.0
                } else {
                    gx * lf.exp()
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        &all_breaks,
        opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    out
}

/// Interval `[c1 - w sd, c1 + w sd]` that carries all but a negligible part
/// of the law of `X_t`.
pub fn truncation_interval(params: &VgParams, t: f64, half_width_sd: f64) -> Result<(f64, f64)> {
    let c = cumulants(params, t)?;
    let sd = c.c2.sqrt();
    Ok((c.c1 - half_width_sd * sd, c.c1 + half_width_sd * sd))
}

/// `(mu2, mu3, mu4)` from the cumulant recursion
/// `mu_n = sum_{k=1}^{n} C(n-1, k-1) c_k mu_{n-k}` with `mu_0 = 1`, `mu_1 = 0`.
pub fn central_moments_from_cumulants(c: &Cumulants) -> (f64, f64, f64) {
    let kappas = [c.c1, c.c2, c.c3, c.c4];
    let mut mu = [1.0, 0.0, 0.0, 0.0, 0.0];
    for n in 2..=4usize {
        // c_1 multiplies mu_{n-1} and is excluded: central moments ignore the mean.
        let mut acc = 0.0;
        for k in 2..=n {
            acc += binomial(n - 1, k - 1) * kappas[k - 1] * mu[n - k];
        }
        mu[n] = acc;
    }
    (mu[2], mu[3], mu[4])
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Skewness `c3 / c2^{3/2}` and excess kurtosis `c4 / c2^2`.
pub fn skew_kurt(c: &Cumulants) -> Result<(f64, f64)> {
    if !(c.c2 > 0.0) {
        return Err(VgError::Domain(format!(
            "skewness and kurtosis need c2 > 0, got {}",
            c.c2
        )));
    }
    Ok((c.c3 / c.c2.powf(1.5), c.c4 / (c.c2 * c.c2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_params() -> VgParams {
        VgParams::reference()
    }

    #[test]
    fn cumulants_reference_values() {
        let c = cumulants(&reference_params(), 1.0).unwrap();
        assert_relative_eq!(c.c1, -0.1, max_relative = 1e-15);
        assert_relative_eq!(c.c2, 0.042, max_relative = 1e-14);
        assert_relative_eq!(c.c3, -0.00248, max_relative = 1e-13);
        assert_relative_eq!(c.c4, 0.0011568, max_relative = 1e-13);
    }

    #[test]
    fn cumulants_symmetric_case() {
        let p = VgParams::new(0.0, 0.2, 0.2, 0.06).unwrap();
        let c = cumulants(&p, 1.0).unwrap();
        assert_eq!(c.c1, 0.0);
        assert_eq!(c.c3, 0.0);
        assert_relative_eq!(c.c2, 0.04, max_relative = 1e-15);
        assert_relative_eq!(c.c4, 0.00096, max_relative = 1e-14);
    }

    #[test]
    fn cumulants_linear_in_horizon() {
        let p = reference_params();
        let one = cumulants(&p, 1.0).unwrap();
        let two = cumulants(&p, 2.0).unwrap();
        assert_eq!(two.c1, 2.0 * one.c1);
        assert_eq!(two.c2, 2.0 * one.c2);
        assert_eq!(two.c3, 2.0 * one.c3);
        assert_eq!(two.c4, 2.0 * one.c4);
    }

    /// Cumulants as Taylor coefficients of t*eta(u) at 0, by the Cauchy
    /// integral on a circle of radius 1 (well inside the branch points).
    #[test]
    fn cumulants_match_levy_symbol_derivatives() {
        let p = reference_params();
        let m = 128;
        let radius = 1.0;
        let mut coeffs = [Complex64::new(0.0, 0.0); 5];
        for j in 0..m {
            let phase = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let z = Complex64::from_polar(radius, phase);
            let eta = levy_symbol(&p, z).unwrap();
            for (n, c) in coeffs.iter_mut().enumerate() {
                *c += eta * z.powi(-(n as i32)) / m as f64;
            }
        }
        // eta(u) = sum c_n (iu)^n / n!  =>  c_n = n! a_n / i^n
        let c = cumulants(&p, 1.0).unwrap();
        let expected = [c.c1, c.c2, c.c3, c.c4];
        let mut fact = 1.0;
        for n in 1..=4 {
            fact *= n as f64;
            let cn = coeffs[n] * fact / Complex64::i().powi(n as i32);
            assert!(cn.im.abs() < 1e-14);
            assert_relative_eq!(cn.re, expected[n - 1], max_relative = 1e-12);
        }
    }

    #[test]
    fn omega_reference_value() {
        let w = martingale_correction(&reference_params()).unwrap();
        assert_relative_eq!(w, 5.0 * 1.016f64.ln(), max_relative = 1e-14);
        assert!((w - 0.0793667).abs() < 1e-7);
        let phi = characteristic_function(&reference_params(), Complex64::new(0.0, -1.0), 1.0).unwrap();
        assert_relative_eq!(phi.re * w.exp(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn omega_brownian_limit() {
        let p = VgParams::new(-1e-9, 0.2, 1e-9, 0.0).unwrap();
        let w = martingale_correction(&p).unwrap();
        assert!((w + 0.02).abs() < 1e-8, "{w}");
    }

    #[test]
    fn omega_zero_when_log_argument_is_one() {
        // theta = 0, sigma -> 0: the sigma = 0 corner is outside the validated
        // domain, so check the limit from above.
        let p = VgParams::new(0.0, 1e-12, 0.2, 0.0).unwrap();
        assert!(martingale_correction(&p).unwrap().abs() < 1e-23);
    }

    #[test]
    fn omega_undefined() {
        let p = VgParams {
            theta: 3.0,
            sigma: 0.2,
            kappa: 0.5,
            r: 0.0,
        };
        assert!(matches!(
            martingale_correction(&p),
            Err(VgError::MartingaleCorrectionUndefined { .. })
        ));
    }

    #[test]
    fn levy_density_symmetric_when_theta_zero() {
        let p = VgParams::new(0.0, 0.25, 0.3, 0.0).unwrap();
        for &x in &[1e-4, 0.01, 0.3, 2.0] {
            assert_eq!(levy_density(&p, x).unwrap(), levy_density(&p, -x).unwrap());
        }
        assert!(levy_density(&p, 0.0).is_err());
    }

    #[test]
    fn levy_moments_are_cumulant_rates() {
        let p = reference_params();
        let c = cumulants(&p, 1.0).unwrap();
        let expected = [c.c1, c.c2, c.c3, c.c4];
        for n in 1..=4 {
            let m = levy_moment(&p, n).unwrap();
            assert_relative_eq!(m, expected[n as usize - 1], max_relative = 1e-6);
        }
    }

    #[test]
    fn char_fn_basics() {
        let p = reference_params();
        let one = characteristic_function(&p, Complex64::new(0.0, 0.0), 1.3).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
        let v = characteristic_function(&p, Complex64::new(0.0, -1.0), 1.0).unwrap();
        assert!((v.re - 1.016f64.powi(-5)).abs() < 1e-15);
        assert!((v.re - 0.923701).abs() < 1e-6);
        let sym = VgParams::new(0.0, 0.2, 0.2, 0.0).unwrap();
        for &u in &[0.5, 3.0, 40.0] {
            let v = characteristic_function(&sym, Complex64::new(u, 0.0), 1.0).unwrap();
            assert!(v.im.abs() < 1e-16 && v.re > 0.0);
        }
    }

    #[test]
    fn char_fn_branch_cut() {
        // base 1 + theta*kappa*v + sigma^2 kappa (-v^2)/2 at u = -iv, real and
        // crosses zero for large v
        let p = reference_params();
        assert!(matches!(
            characteristic_function(&p, Complex64::new(0.0, -20.0), 1.0),
            Err(VgError::BranchCut { .. })
        ));
    }

    #[test]
    fn pdf_reference_normalization_and_moments() {
        let p = reference_params();
        let (lo, hi) = truncation_interval(&p, 1.0, 20.0).unwrap();
        let opts = QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 0.0,
            max_intervals: 4000,
        };
        let mass = integrate_against_pdf(&p, 1.0, |_| 1.0, lo, hi, &[], opts).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-10, "{}", mass.value);
        let mean = integrate_against_pdf(&p, 1.0, |x| x, lo, hi, &[], opts).unwrap();
        assert!((mean.value + 0.1).abs() < 1e-10);
        let var = integrate_against_pdf(&p, 1.0, |x| (x + 0.1).powi(2), lo, hi, &[], opts).unwrap();
        assert_relative_eq!(var.value, 0.042, max_relative = 1e-9);
    }

    #[test]
    fn pdf_symmetric_when_theta_zero() {
        let p = VgParams::new(0.0, 0.2, 0.2, 0.0).unwrap();
        let scale = pdf(&p, 1.0, 0.0).unwrap();
        for i in 1..60 {
            let x = 0.02 * i as f64;
            let d = (pdf(&p, 1.0, x).unwrap() - pdf(&p, 1.0, -x).unwrap()).abs();
            assert!(d <= 1e-12 * scale);
        }
    }

    #[test]
    fn pdf_value_at_origin_is_continuous() {
        let p = reference_params();
        let f0 = pdf(&p, 1.0, 0.0).unwrap();
        let f_eps = pdf(&p, 1.0, 1e-7).unwrap();
        assert_relative_eq!(f0, f_eps, max_relative = 1e-5);
        // unbounded at the origin once t / kappa <= 1/2
        assert_eq!(pdf(&p, 0.1, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn singular_density_still_integrates_to_one() {
        let p = reference_params();
        for &t in &[0.1, 0.05, 0.02] {
            let (lo, hi) = truncation_interval(&p, t, 40.0).unwrap();
            let mass = integrate_against_pdf(
                &p,
                t,
                |_| 1.0,
                lo,
                hi,
                &[],
                QuadOptions {
                    abs_tol: 1e-10,
                    rel_tol: 0.0,
                    max_intervals: 8000,
                },
            )
            .unwrap();
            assert!((mass.value - 1.0).abs() < 1e-6, "t={t}: {}", mass.value);
        }
    }

    #[test]
    fn central_moment_recursion() {
        let c = Cumulants {
            c1: -0.1,
            c2: 0.042,
            c3: -0.00248,
            c4: 0.0011568,
            t: 1.0,
        };
        let (m2, m3, m4) = central_moments_from_cumulants(&c);
        assert_eq!(m2, 0.042);
        assert_eq!(m3, -0.00248);
        assert_relative_eq!(m4, 0.0064488, max_relative = 1e-14);

        let gauss = Cumulants {
            c1: 5.0,
            c2: 1.0,
            c3: 0.0,
            c4: 0.0,
            t: 1.0,
        };
        assert_eq!(central_moments_from_cumulants(&gauss), (1.0, 0.0, 3.0));
        let zero = Cumulants {
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            c4: 0.0,
            t: 1.0,
        };
        assert_eq!(central_moments_from_cumulants(&zero), (0.0, 0.0, 0.0));
    }

    #[test]
    fn skew_kurt_reference() {
        let c = cumulants(&reference_params(), 1.0).unwrap();
        let (s, k) = skew_kurt(&c).unwrap();
        assert!((s + 0.28812).abs() < 5e-6, "{s}");
        assert!((k - 0.65578).abs() < 5e-6, "{k}");

        let c4 = cumulants(&reference_params(), 4.0).unwrap();
        let (s4, k4) = skew_kurt(&c4).unwrap();
        assert_relative_eq!(s4, s / 2.0, max_relative = 1e-13);
        assert_relative_eq!(k4, k / 4.0, max_relative = 1e-13);

        let sym = cumulants(&VgParams::new(0.0, 0.3, 0.1, 0.0).unwrap(), 1.0).unwrap();
        assert_eq!(skew_kurt(&sym).unwrap().0, 0.0);

        let bad = Cumulants { c2: 0.0, ..c };
        assert!(skew_kurt(&bad).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(VgParams::new(0.0, 0.0, 0.2, 0.0).is_err());
        assert!(VgParams::new(0.0, 0.2, -0.2, 0.0).is_err());
        assert!(VgParams::new(0.0, 0.2, 0.2, -0.01).is_err());
        assert!(cumulants(&reference_params(), 0.0).is_err());
    }
}
