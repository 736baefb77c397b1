//! Closed-form first and second moments of the fractional binomial process,
//! their large-time forms, and power-law decay fits.
//!
//! Every quantity is a combination of `E(t) = E_ν(−(λ+μ)t^ν)` and
//! `E(t)₂ = E_ν(−2(λ+μ)t^ν)` with constant coefficients, collected once in
//! [`Moments`].

use std::io::Write;

use serde::Serialize;

use crate::error::{FbpError, Result};
use crate::params::ProcessParams;
use crate::special::{mittag_leffler, ml_tail_coefficient, MlConfig};

/// Mean, variance and raw second moment at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPoint {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    pub second_moment: f64,
}

/// Log-log least-squares fit `|corr| ≈ e^intercept · t^(−exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependenceFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DependenceClass {
    LongRange,
    ShortRange,
    Unclassified,
}

impl DependenceFit {
    /// Exponent in `(0, 1)` is long-range, in `(1, 2)` short-range.
    pub fn classify(&self) -> DependenceClass {
        let d = self.exponent;
        if d > 0.0 && d < 1.0 {
            DependenceClass::LongRange
        } else if d > 1.0 && d < 2.0 {
            DependenceClass::ShortRange
        } else {
            DependenceClass::Unclassified
        }
    }
}

/// Precomputed coefficients of the moment formulas for one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    params: ProcessParams,
    ml: MlConfig,
    c: f64,
    /// coefficient of `E₂` in the variance
    a: f64,
    /// coefficient of `E` in the variance
    b: f64,
    /// `(M − Nξ)²`
    cc: f64,
    /// `Nξ(1−ξ)`
    d: f64,
    /// `M − Nξ`
    k: f64,
    n_xi: f64,
}

impl Moments {
    pub fn new(params: &ProcessParams) -> Result<Self> {
        Moments::with_config(params, MlConfig::default())
    }

    pub fn with_config(params: &ProcessParams, ml: MlConfig) -> Result<Self> {
        params.validate()?;
        ml.validate()?;
        let n = params.capacity as f64;
        let m = params.initial as f64;
        let xi = params.xi();
        let n_xi = n * xi;
        Ok(Moments {
            params: *params,
            ml,
            c: params.total_rate(),
            a: xi * xi * n * (n - 1.0) - 2.0 * xi * m * (n - 1.0) + m * (m - 1.0),
            b: 2.0 * xi * xi * n - xi * (n + 2.0 * m) + m,
            cc: (m - n_xi) * (m - n_xi),
            d: n_xi * (1.0 - xi),
            k: m - n_xi,
            n_xi,
        })
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    /// `E_ν(−(λ+μ)t^ν)`.
    pub fn relaxation(&self, t: f64) -> Result<f64> {
        self.ml_at(1.0, t)
    }

    fn ml_at(&self, scale: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        mittag_leffler(
            self.params.nu,
            -scale * self.c * t.powf(self.params.nu),
            &self.ml,
        )
    }

    pub fn mean(&self, t: f64) -> Result<f64> {
        Ok(self.k * self.relaxation(t)? + self.n_xi)
    }

    /// Transient part of the variance, `Var(t) − Nξ(1−ξ)`, without the
    /// cancellation a subtraction would cost.
    pub fn variance_excess(&self, t: f64) -> Result<f64> {
        let e = self.relaxation(t)?;
        let e2 = self.ml_at(2.0, t)?;
        Ok(self.a * e2 + self.b * e - self.cc * e * e)
    }

    /// Variance, with roundoff negatives clamped to zero.
    pub fn variance(&self, t: f64) -> Result<f64> {
        let v = self.variance_excess(t)? + self.d;
        let n = self.params.capacity as f64;
        if v >= 0.0 {
            Ok(v)
        } else if v > -1e-9 * n * n {
            Ok(0.0)
        } else {
            Err(FbpError::NegativeVariance { value: v, t })
        }
    }

    /// Raw second moment from the expanded polynomial in `E` and `E₂`; an
    /// independent route to `variance + mean²`.
    pub fn second_moment(&self, t: f64) -> Result<f64> {
        Ok(self.raw_moments(t)?.1)
    }

    /// `(mean, second_moment)` from a single pair of ML evaluations.
    pub fn raw_moments(&self, t: f64) -> Result<(f64, f64)> {
        let e = self.relaxation(t)?;
        let e2 = self.ml_at(2.0, t)?;
        let mean = self.k * e + self.n_xi;
        let second =
            self.a * e2 + (self.b + 2.0 * self.n_xi * self.k) * e + self.d + self.n_xi * self.n_xi;
        Ok((mean, second))
    }

    pub fn point(&self, t: f64) -> Result<MomentPoint> {
        let mean = self.mean(t)?;
        let variance = self.variance(t)?;
        Ok(MomentPoint {
            t,
            mean,
            variance,
            second_moment: variance + mean * mean,
        })
    }

    /// Equilibrium product moment `(Nξ)² + Nξ(1−ξ)·E(t−s)`.
    pub fn product_moment(&self, s: f64, t: f64) -> Result<f64> {
        check_order(s, t)?;
        Ok(self.n_xi * self.n_xi + self.d * self.relaxation(t - s)?)
    }

    /// Autocovariance
    /// `Nξ(1−ξ)E(t−s) − (M−Nξ)²E(s)E(t) − (M−Nξ)Nξ[E(s)+E(t)]`.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        check_order(s, t)?;
        let (es, et) = (self.relaxation(s)?, self.relaxation(t)?);
        Ok(self.d * self.relaxation(t - s)? - self.cc * es * et - self.k * self.n_xi * (es + et))
    }

    /// Value the covariance settles to as `t → ∞` at fixed `s`:
    /// `−(M−Nξ)Nξ·E(s)`. Zero only for a centred start.
    pub fn covariance_limit(&self, s: f64) -> Result<f64> {
        Ok(-self.k * self.n_xi * self.relaxation(s)?)
    }

    /// `covariance / sqrt(Var(s)·Var(t))`.
    pub fn correlation(&self, s: f64, t: f64) -> Result<f64> {
        check_order(s, t)?;
        let vs = self.variance(s)?;
        let vt = self.variance(t)?;
        if vs <= 0.0 || vt <= 0.0 {
            return Err(FbpError::invalid(format!(
                "correlation undefined: zero variance at s={s} or t={t}"
            )));
        }
        Ok(self.covariance(s, t)? / (vs * vt).sqrt())
    }

    /// Correlation of the decaying parts: the covariance minus its large-`t`
    /// limit, over `sqrt(Var(s)·|Var(t) − Nξ(1−ξ)|)`. This is the quantity
    /// whose power-law decay the dependence diagnostics measure.
    pub fn transient_correlation(&self, s: f64, t: f64) -> Result<f64> {
        check_order(s, t)?;
        let vs = self.variance(s)?;
        let ex = self.variance_excess(t)?.abs();
        if vs <= 0.0 || ex == 0.0 {
            return Err(FbpError::invalid(format!(
                "transient correlation undefined at s={s}, t={t}"
            )));
        }
        Ok(self.covariance_excess(s, t)? / (vs * ex).sqrt())
    }

    /// `Cov(s,t)` minus [`Moments::covariance_limit`], evaluated directly.
    pub fn covariance_excess(&self, s: f64, t: f64) -> Result<f64> {
        check_order(s, t)?;
        let (es, et) = (self.relaxation(s)?, self.relaxation(t)?);
        Ok(self.d * self.relaxation(t - s)? - (self.cc * es + self.k * self.n_xi) * et)
    }

    /// `1/(Γ(1−ν)(λ+μ))`, the tail constant of `E(t) ~ r·t^{−ν}`.
    fn tail_rate(&self) -> f64 {
        ml_tail_coefficient(self.params.nu) / self.c
    }

    /// Leading `t^{−ν}` term of `Var(t) − Nξ(1−ξ)`.
    pub fn asymptotic_variance(&self, t: f64) -> Result<f64> {
        check_positive_time(t)?;
        Ok(self.tail_rate() * t.powf(-self.params.nu) * (self.a / 2.0 + self.b))
    }

    /// Leading `t^{−ν}` term of `Cov(s,t)` minus its limit, at fixed `s`.
    pub fn asymptotic_covariance(&self, s: f64, t: f64) -> Result<f64> {
        check_positive_time(s)?;
        check_order(s, t)?;
        let bracket = self.d - self.cc * self.relaxation(s)? - self.k * self.n_xi;
        Ok(self.tail_rate() * t.powf(-self.params.nu) * bracket)
    }

    /// Covariance of the increments `N(s+δ) − N(s)` and `N(t+δ) − N(t)`.
    pub fn fbn_covariance(&self, s: f64, t: f64, delta: f64) -> Result<f64> {
        check_lag(delta)?;
        check_order(s + delta, t)?;
        // the four covariances grouped so the (M−Nξ)Nξ terms cancel exactly
        // and only differences of E remain
        let lag = t - s;
        let second_diff = 2.0 * self.relaxation(lag)?
            - self.relaxation(lag - delta)?
            - self.relaxation(lag + delta)?;
        let ds = self.relaxation(s + delta)? - self.relaxation(s)?;
        let dt = self.relaxation(t + delta)? - self.relaxation(t)?;
        Ok(self.d * second_diff - self.cc * ds * dt)
    }

    /// `Var(t+δ) + Var(t) − 2Cov(t, t+δ)` with the covariance formula as is.
    pub fn fbn_variance(&self, t: f64, delta: f64) -> Result<f64> {
        check_lag(delta)?;
        Ok(self.variance(t + delta)? + self.variance(t)? - 2.0 * self.covariance(t, t + delta)?)
    }

    /// Large-`t` value of [`Moments::fbn_variance`]: `2Nξ(1−ξ)(1 − E(δ))`.
    pub fn fbn_variance_limit(&self, delta: f64) -> Result<f64> {
        check_lag(delta)?;
        Ok(2.0 * self.d * (1.0 - self.relaxation(delta)?))
    }

    /// Increment analogue of [`Moments::transient_correlation`].
    pub fn fbn_transient_correlation(&self, s: f64, t: f64, delta: f64) -> Result<f64> {
        let vs = self.fbn_variance(s, delta)?.abs();
        let ex = (self.fbn_variance(t, delta)? - self.fbn_variance_limit(delta)?).abs();
        if vs == 0.0 || ex == 0.0 {
            return Err(FbpError::invalid(format!(
                "increment correlation undefined at s={s}, t={t}"
            )));
        }
        Ok(self.fbn_covariance(s, t, delta)? / (vs * ex).sqrt())
    }

    /// Leading `t^{−(1+ν)}` term of [`Moments::fbn_covariance`]:
    /// `−rνδ(M−Nξ)²[E(s) − E(s+δ)]·t^{−(1+ν)}`.
    pub fn asymptotic_fbn_covariance(&self, s: f64, t: f64, delta: f64) -> Result<f64> {
        check_lag(delta)?;
        check_positive_time(t)?;
        let nu = self.params.nu;
        let diff = self.relaxation(s)? - self.relaxation(s + delta)?;
        Ok(-self.tail_rate() * nu * delta * self.cc * diff * t.powf(-(1.0 + nu)))
    }

    /// Decay exponent of the transient correlation over `ts` at fixed `s`.
    pub fn lrd_fit(&self, s: f64, ts: &[f64]) -> Result<DependenceFit> {
        let pts = ts
            .iter()
            .map(|&t| Ok((t, self.transient_correlation(s, t)?.abs())))
            .collect::<Result<Vec<_>>>()?;
        fit_decay_exponent(&pts)
    }

    /// Decay exponent of the increment correlation over `ts` at fixed `s`.
    pub fn fbn_fit(&self, s: f64, delta: f64, ts: &[f64]) -> Result<DependenceFit> {
        let pts = ts
            .iter()
            .map(|&t| Ok((t, self.fbn_transient_correlation(s, t, delta)?.abs())))
            .collect::<Result<Vec<_>>>()?;
        fit_decay_exponent(&pts)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FbpError::invalid(format!("time {t} must be non-negative")));
    }
    Ok(())
}

fn check_positive_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FbpError::invalid(format!("time {t} must be positive")));
    }
    Ok(())
}

fn check_order(s: f64, t: f64) -> Result<()> {
    check_time(s)?;
    check_time(t)?;
    if s > t {
        return Err(FbpError::invalid(format!("need s <= t, got s={s}, t={t}")));
    }
    Ok(())
}

fn check_lag(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(FbpError::invalid(format!(
            "lag {delta} must be non-negative"
        )));
    }
    Ok(())
}

pub fn theoretical_mean(params: &ProcessParams, t: f64) -> Result<f64> {
    Moments::new(params)?.mean(t)
}

pub fn theoretical_variance(params: &ProcessParams, t: f64) -> Result<f64> {
    Moments::new(params)?.variance(t)
}

pub fn theoretical_second_moment(params: &ProcessParams, t: f64) -> Result<f64> {
    Moments::new(params)?.second_moment(t)
}

pub fn stationary_product_moment(params: &ProcessParams, s: f64, t: f64) -> Result<f64> {
    Moments::new(params)?.product_moment(s, t)
}

pub fn covariance(params: &ProcessParams, s: f64, t: f64) -> Result<f64> {
    Moments::new(params)?.covariance(s, t)
}

pub fn correlation(params: &ProcessParams, s: f64, t: f64) -> Result<f64> {
    Moments::new(params)?.correlation(s, t)
}

pub fn asymptotic_variance(params: &ProcessParams, t: f64) -> Result<f64> {
    Moments::new(params)?.asymptotic_variance(t)
}

pub fn asymptotic_covariance(params: &ProcessParams, s: f64, t: f64) -> Result<f64> {
    Moments::new(params)?.asymptotic_covariance(s, t)
}

pub fn fbn_covariance(params: &ProcessParams, s: f64, t: f64, delta: f64) -> Result<f64> {
    Moments::new(params)?.fbn_covariance(s, t, delta)
}

/// Least-squares slope of `ln y` against `ln t`; the exponent is minus the
/// slope.
pub fn fit_decay_exponent(points: &[(f64, f64)]) -> Result<DependenceFit> {
    if points.len() < 3 {
        return Err(FbpError::invalid("need at least 3 points to fit a decay"));
    }
    if points
        .iter()
        .any(|&(t, y)| !(t > 0.0 && y > 0.0 && t.is_finite() && y.is_finite()))
    {
        return Err(FbpError::invalid(
            "decay fit needs positive finite t and values",
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-12 * xs.iter().map(|x| x * x).sum::<f64>().max(1.0) {
        return Err(FbpError::invalid("decay fit needs distinct times"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(DependenceFit {
        exponent: -slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// `n` points from `a` to `b`, evenly spaced in `ln t`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > a && n >= 2) {
        return Err(FbpError::invalid(format!(
            "log grid needs 0 < a < b and n >= 2 (a={a}, b={b}, n={n})"
        )));
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// Moment table with columns `t,mean,variance,second_moment`.
pub fn write_moment_table<W: Write>(mut w: W, points: &[MomentPoint]) -> Result<()> {
    writeln!(w, "t,mean,variance,second_moment")?;
    for p in points {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.t, p.mean, p.variance, p.second_moment
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a covariance grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovariancePoint {
    pub s: f64,
    pub t: f64,
    pub covariance: f64,
    pub correlation: f64,
    pub transient_correlation: f64,
    pub asymptotic_covariance: f64,
}

impl Moments {
    pub fn covariance_point(&self, s: f64, t: f64) -> Result<CovariancePoint> {
        let nan_on_err = |r: Result<f64>| r.unwrap_or(f64::NAN);
        Ok(CovariancePoint {
            s,
            t,
            covariance: self.covariance(s, t)?,
            correlation: nan_on_err(self.correlation(s, t)),
            transient_correlation: nan_on_err(self.transient_correlation(s, t)),
            asymptotic_covariance: nan_on_err(self.asymptotic_covariance(s, t)),
        })
    }
}

/// Covariance grid with columns
/// `s,t,covariance,correlation,transient_correlation,asymptotic_covariance`.
/// Undefined entries (zero variance at `t = 0`) are written as `NaN`.
pub fn write_covariance_grid<W: Write>(mut w: W, points: &[CovariancePoint]) -> Result<()> {
    writeln!(
        w,
        "s,t,covariance,correlation,transient_correlation,asymptotic_covariance"
    )?;
    for p in points {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.s, p.t, p.covariance, p.correlation, p.transient_correlation, p.asymptotic_covariance
        )?;
    }
    w.flush()?;
    Ok(())
}
