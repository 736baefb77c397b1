use serde::{Deserialize, Serialize};

use crate::error::{FbpError, Result};

/// Parameters of the (fractional) binomial process.
///
/// Births occur at rate `λ(N − n)` and deaths at rate `μn` in state `n`;
/// `ν = 1` is the classical process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    #[serde(rename = "N")]
    pub capacity: u32,
    #[serde(rename = "M")]
    pub initial: u32,
}

impl ProcessParams {
    /// Validated parameters: `λ, μ > 0`, `0 < ν ≤ 1`, `1 ≤ M ≤ N`.
    pub fn new(lambda: f64, mu: f64, nu: f64, capacity: u32, initial: u32) -> Result<Self> {
        let p = ProcessParams {
            lambda,
            mu,
            nu,
            capacity,
            initial,
        };
        p.validate()?;
        Ok(p)
    }

    /// Like [`ProcessParams::new`] but admits `λ = 0` or `μ = 0` (not both).
    ///
    /// Only the simulators accept such parameters; a zero total rate freezes
    /// the path. The closed-form moments require [`ProcessParams::new`].
    pub fn with_degenerate_rates(
        lambda: f64,
        mu: f64,
        nu: f64,
        capacity: u32,
        initial: u32,
    ) -> Result<Self> {
        let p = ProcessParams {
            lambda,
            mu,
            nu,
            capacity,
            initial,
        };
        p.validate_common()?;
        if !(lambda >= 0.0 && mu >= 0.0 && lambda + mu > 0.0) {
            return Err(FbpError::invalid(
                "rates must be non-negative and not both zero",
            ));
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if !(self.lambda > 0.0) || !(self.mu > 0.0) {
            return Err(FbpError::invalid(format!(
                "rates must be positive (lambda={}, mu={})",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }

    fn validate_common(&self) -> Result<()> {
        if !self.lambda.is_finite() || !self.mu.is_finite() || !self.nu.is_finite() {
            return Err(FbpError::NonFinite("process parameters"));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(FbpError::invalid(format!("nu={} outside (0, 1]", self.nu)));
        }
        if self.initial < 1 || self.initial > self.capacity {
            return Err(FbpError::invalid(format!(
                "initial population M={} must lie in [1, N={}]",
                self.initial, self.capacity
            )));
        }
        Ok(())
    }

    /// `ξ = λ/(λ+μ)`, the stationary occupation probability of one slot.
    pub fn xi(&self) -> f64 {
        self.lambda / (self.lambda + self.mu)
    }

    /// `λ + μ`, the relaxation rate.
    pub fn total_rate(&self) -> f64 {
        self.lambda + self.mu
    }

    /// Stationary mean `Nξ`.
    pub fn stationary_mean(&self) -> f64 {
        self.capacity as f64 * self.xi()
    }

    /// Stationary variance `Nξ(1−ξ)`.
    pub fn stationary_variance(&self) -> f64 {
        let xi = self.xi();
        self.capacity as f64 * xi * (1.0 - xi)
    }

    /// Total jump rate `λ(N−n) + μn` in state `n`.
    #[inline]
    pub fn event_rate(&self, n: u32) -> f64 {
        self.birth_rate(n) + self.mu * n as f64
    }

    #[inline]
    pub fn birth_rate(&self, n: u32) -> f64 {
        self.lambda * (self.capacity - n) as f64
    }

    /// Copy with a different `(λ, ν)`.
    pub fn with_lambda_nu(&self, lambda: f64, nu: f64) -> Result<Self> {
        ProcessParams::new(lambda, self.mu, nu, self.capacity, self.initial)
    }
}
