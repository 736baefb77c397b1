//! One-parameter Mittag-Leffler function on the real line.
//!
//! `E_ν(z) = Σ_r z^r / Γ(νr + 1)` for `0 < ν ≤ 1`. Evaluation is split into
//! regimes on the negative axis:
//!
//! * `|z|^{1/ν} ≤ 1`: the Taylor series, where cancellation is negligible;
//! * `|z| ≥ crossover`: the inverse-power asymptotic series
//!   `E_ν(−x) = Σ_{k≥1} (−1)^{k+1} x^{−k} / Γ(1 − νk)`, accepted only when its
//!   optimal-truncation error is below the configured tolerance;
//! * everything else: the Laplace-type integral
//!   `E_ν(−x) = sin(νπ)/(νπ) ∫_0^∞ exp(−ρ^{1/ν} x^{1/ν}) / (ρ² + 2ρ cos(νπ) + 1) dρ`,
//!   whose integrand is positive, so quadrature has no cancellation.
//!
//! Positive arguments use the series directly (all terms positive).

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{FbpError, Result};
use crate::quad::tanh_sinh;

/// Numerical policy for [`mittag_leffler`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlConfig {
    /// Target relative error of the series and the asymptotic expansion.
    pub series_tolerance: f64,
    /// `|z|` beyond which the asymptotic expansion is tried. `None` selects
    /// `5·(1 + 1/ν)`.
    pub asymptotic_crossover: Option<f64>,
    /// Cap on the number of series terms.
    pub max_terms: usize,
}

impl Default for MlConfig {
    fn default() -> Self {
        MlConfig {
            series_tolerance: 1e-12,
            asymptotic_crossover: None,
            max_terms: 10_000,
        }
    }
}

impl MlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_tolerance > 0.0) || !self.series_tolerance.is_finite() {
            return Err(FbpError::invalid("series_tolerance must be positive"));
        }
        if self.max_terms < 1 {
            return Err(FbpError::invalid("max_terms must be at least 1"));
        }
        if let Some(c) = self.asymptotic_crossover {
            if !(c > 0.0) || !c.is_finite() {
                return Err(FbpError::invalid("asymptotic_crossover must be positive"));
            }
        }
        Ok(())
    }

    /// Crossover actually used for order `nu`.
    pub fn crossover(&self, nu: f64) -> f64 {
        self.asymptotic_crossover
            .unwrap_or_else(|| default_crossover(nu))
    }
}

pub fn default_crossover(nu: f64) -> f64 {
    5.0 * (1.0 + 1.0 / nu)
}

fn check_order(nu: f64) -> Result<()> {
    if !nu.is_finite() {
        return Err(FbpError::NonFinite("Mittag-Leffler order"));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(FbpError::invalid(format!("order nu={nu} outside (0, 1]")));
    }
    Ok(())
}

/// Evaluate `E_ν(z)`.
pub fn mittag_leffler(nu: f64, z: f64, cfg: &MlConfig) -> Result<f64> {
    check_order(nu)?;
    if !z.is_finite() {
        return Err(FbpError::NonFinite("Mittag-Leffler argument"));
    }
    cfg.validate()?;

    if z == 0.0 {
        return Ok(1.0);
    }
    if nu == 1.0 {
        let v = z.exp();
        if !v.is_finite() {
            return Err(FbpError::Overflow("Mittag-Leffler function"));
        }
        return Ok(v);
    }
    if z > 0.0 {
        // E_ν(z) ~ exp(z^{1/ν}) / ν
        if z.powf(1.0 / nu) > 700.0 {
            return Err(FbpError::Overflow("Mittag-Leffler function"));
        }
        return ml_series(nu, z, cfg.series_tolerance, cfg.max_terms);
    }

    let x = -z;
    if x.powf(1.0 / nu) <= 1.0 {
        return ml_series(nu, z, cfg.series_tolerance, cfg.max_terms);
    }
    if x >= cfg.crossover(nu) {
        if let Some(v) = accurate_asymptotic(nu, x, cfg) {
            return Ok(v);
        }
    }
    Ok(ml_integral(nu, x))
}

fn accurate_asymptotic(nu: f64, x: f64, cfg: &MlConfig) -> Option<f64> {
    let asym = ml_asymptotic_series(nu, x, cfg.max_terms);
    (asym.truncation_bound <= cfg.series_tolerance * asym.value.abs()).then_some(asym.value)
}

/// Smallest `x` (to 1e-9 relative) at which [`mittag_leffler`] hands
/// `E_ν(−x)` from the integral to the asymptotic series. Close to one the
/// series needs a larger argument than the configured crossover.
pub fn effective_crossover(nu: f64, cfg: &MlConfig) -> Result<f64> {
    check_order(nu)?;
    cfg.validate()?;
    if nu == 1.0 {
        return Err(FbpError::invalid("no asymptotic regime at nu = 1"));
    }
    let lo = cfg.crossover(nu);
    if accurate_asymptotic(nu, lo, cfg).is_some() {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo;
    while accurate_asymptotic(nu, hi, cfg).is_none() {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(FbpError::NoConvergence {
                what: "asymptotic crossover search",
                limit: 0,
            });
        }
    }
    let mut lo = hi / 2.0;
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if accurate_asymptotic(nu, mid, cfg).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Leading large-`x` term of `E_ν(−x)`: `1 / (Γ(1−ν) x)`.
///
/// Equivalently `a₀(ν)/(πx)` with `a₀(ν) = π/Γ(1−ν)`.
pub fn ml_leading_asymptotic(nu: f64, x: f64) -> Result<f64> {
    if !nu.is_finite() || !x.is_finite() {
        return Err(FbpError::NonFinite("asymptotic Mittag-Leffler argument"));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(FbpError::invalid(format!("order nu={nu} outside (0, 1)")));
    }
    if !(x > 0.0) {
        return Err(FbpError::invalid("asymptotic argument must be positive"));
    }
    Ok(ml_tail_coefficient(nu) / x)
}

/// `a₀(ν)/π = 1/Γ(1−ν)`, the coefficient of the `1/x` tail of `E_ν(−x)`.
///
/// Zero at `ν = 1`, where the tail is exponential.
pub fn ml_tail_coefficient(nu: f64) -> f64 {
    recip_gamma(1.0 - nu)
}

/// Truncated asymptotic expansion of `E_ν(−x)` with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticSum {
    pub value: f64,
    /// Envelope of the first omitted term.
    pub truncation_bound: f64,
    pub terms: usize,
}

/// Sum `Σ_{k≥1} (−1)^{k+1} x^{−k} / Γ(1−νk)` up to its smallest term.
///
/// Terms are sized by the envelope `x^{−k} Γ(νk)/π`, which drops the
/// `sin(πνk)` factor of the reflection formula: an individual term can
/// vanish when `νk` is an integer while the series is already diverging.
pub fn ml_asymptotic_series(nu: f64, x: f64, max_terms: usize) -> AsymptoticSum {
    let mut sum = 0.0;
    let mut prev_env = f64::INFINITY;
    let mut terms = 0;
    let ln_x = x.ln();
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        let arg = 1.0 - nu * kf;
        let env = (-kf * ln_x + ln_gamma(nu * kf) - PI.ln()).exp();
        // reflection needs Γ(1 − arg) finite
        if -arg > 160.0 || k > max_terms || env > prev_env {
            return AsymptoticSum {
                value: sum,
                truncation_bound: env.min(prev_env),
                terms,
            };
        }
        prev_env = env;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * x.powi(-(k as i32)) * recip_gamma(arg);
        terms += 1;
        k += 1;
        if env <= f64::EPSILON * 1e-3 * sum.abs() {
            return AsymptoticSum {
                value: sum,
                truncation_bound: env,
                terms,
            };
        }
    }
}

/// Taylor series `Σ z^r / Γ(νr+1)`.
pub fn ml_series(nu: f64, z: f64, tol: f64, max_terms: usize) -> Result<f64> {
    let ln_abs = z.abs().ln();
    let mut sum = 1.0;
    let mut prev_mag = 1.0_f64;
    for r in 1..max_terms {
        let rf = r as f64;
        let g_arg = nu * rf + 1.0;
        let log_mag = rf * ln_abs;
        let mag = if g_arg < 170.0 && log_mag.abs() < 600.0 {
            z.abs().powi(r as i32) / gamma(g_arg)
        } else {
            (log_mag - ln_gamma(g_arg)).exp()
        };
        let term = if z < 0.0 && r % 2 == 1 { -mag } else { mag };
        sum += term;
        if !sum.is_finite() {
            return Err(FbpError::Overflow("Mittag-Leffler series"));
        }
        let decreasing = mag <= prev_mag;
        prev_mag = mag;
        if decreasing && mag <= tol * 1e-2 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(FbpError::NoConvergence {
        what: "Mittag-Leffler series",
        limit: max_terms,
    })
}

/// `E_ν(−x)` for `0 < ν < 1`, `x > 0`, from its integral representation.
pub fn ml_integral(nu: f64, x: f64) -> f64 {
    let scale = x.powf(1.0 / nu);
    // 1 + cos(νπ) and sin(νπ) through 1 − ν, which is exact; the direct
    // forms lose all their digits to cancellation as ν → 1
    let h = 2.0 * ((1.0 - nu) * PI / 2.0).sin().powi(2);
    let p = 1.0 / nu;
    let f = |rho: f64| (-(rho.powf(p)) * scale).exp() / ((rho - 1.0) * (rho - 1.0) + 2.0 * rho * h);

    // exp(-750) underflows, so the integrand vanishes beyond `upper`
    let upper = (750.0 / scale).powf(nu);
    let mut cuts = vec![0.0, (1.0 / x).min(upper), 1.0_f64.min(upper), upper];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let total: f64 = cuts
        .windows(2)
        .map(|w| tanh_sinh(f, w[0], w[1], 1e-13).0)
        .sum();
    ((1.0 - nu) * PI).sin() / (nu * PI) * total
}

/// `sin(πy)` with exact zeros at the integers.
fn sin_pi(y: f64) -> f64 {
    if y == y.round() {
        return 0.0;
    }
    let r = y.rem_euclid(2.0);
    (PI * r).sin()
}

/// `1/Γ(y)`, zero at the poles.
pub(crate) fn recip_gamma(y: f64) -> f64 {
    if y <= 0.0 && y == y.round() {
        return 0.0;
    }
    if y < 0.5 {
        sin_pi(y) * gamma(1.0 - y) / PI
    } else {
        1.0 / gamma(y)
    }
}
