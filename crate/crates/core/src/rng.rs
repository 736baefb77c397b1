//! Reproducible random streams and the variates the simulators need.
//!
//! Every stream is a ChaCha8 generator keyed by a master seed and switched to
//! its own 64-bit stream id, so a stream's draws depend only on
//! `(master_seed, stream_id)` and never on how many other streams exist.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FbpError, Result};

/// A single deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RngStream {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// Stream positioned at a given draw counter (in 32-bit words).
    pub fn at(master_seed: u64, stream_id: u64, counter: u128) -> Self {
        let mut s = RngStream::new(master_seed, stream_id);
        s.rng.set_word_pos(counter);
        s
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform draw strictly inside `(0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        // 53 random bits centred in their cell: never 0, never 1
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential waiting time with the given rate.
    pub fn exponential(&mut self, rate: f64) -> Result<f64> {
        check_rate(rate)?;
        Ok(self.exponential_unchecked(rate))
    }

    #[inline]
    pub(crate) fn exponential_unchecked(&mut self, rate: f64) -> f64 {
        exponential_from_uniform(self.uniform(), rate)
    }

    /// Positive ν-stable variate with Laplace transform `exp(−s^ν)`.
    pub fn one_sided_stable(&mut self, nu: f64) -> Result<f64> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(FbpError::invalid(format!(
                "stable index nu={nu} outside (0, 1)"
            )));
        }
        Ok(self.one_sided_stable_unchecked(nu))
    }

    pub(crate) fn one_sided_stable_unchecked(&mut self, nu: f64) -> f64 {
        loop {
            let u = self.uniform();
            let w = self.uniform();
            let v = stable_from_uniforms(nu, u, w);
            // only the extreme corners of (0,1)² can over/underflow
            if v.is_finite() && v > 0.0 {
                return v;
            }
        }
    }

    /// Sojourn time with survival function `P{S ≥ t} = E_ν(−rate·t^ν)`.
    pub fn ml_sojourn(&mut self, nu: f64, rate: f64) -> Result<SojournSample> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(FbpError::invalid(format!("order nu={nu} outside (0, 1]")));
        }
        check_rate(rate)?;
        Ok(SojournSample {
            duration: self.ml_sojourn_unchecked(nu, rate),
        })
    }

    #[inline]
    pub(crate) fn ml_sojourn_unchecked(&mut self, nu: f64, rate: f64) -> f64 {
        if nu == 1.0 {
            return self.exponential_unchecked(rate);
        }
        let e = self.exponential_unchecked(rate);
        let v = self.one_sided_stable_unchecked(nu);
        e.powf(1.0 / nu) * v
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(FbpError::invalid(format!("rate {rate} must be positive")));
    }
    Ok(())
}

/// A single holding time drawn by [`RngStream::ml_sojourn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournSample {
    pub duration: f64,
}

/// Inverse-CDF transform of a uniform to an exponential with `rate`.
#[inline]
pub fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

/// Kanter's representation of a one-sided ν-stable variate from two
/// independent uniforms:
///
/// `V = sin(νπu) sin((1−ν)πu)^{1/ν−1} / (sin(πu)^{1/ν} |ln w|^{1/ν−1})`.
///
/// Evaluated in log space so that small `ν` does not underflow the powers.
pub fn stable_from_uniforms(nu: f64, u: f64, w: f64) -> f64 {
    let a = 1.0 / nu - 1.0;
    let ln_v = (nu * PI * u).sin().ln() + a * ((1.0 - nu) * PI * u).sin().ln()
        - (PI * u).sin().ln() / nu
        - a * (-w.ln()).ln();
    ln_v.exp()
}
