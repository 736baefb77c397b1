//! Sample paths of the classical and fractional binomial processes.

use std::io::Write;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{FbpError, Result};
use crate::params::ProcessParams;
use crate::rng::RngStream;

/// Hard limit on the number of jumps in one path.
pub const EVENT_CAP: usize = 10_000_000;

/// A right-continuous step path starting from `(0, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub initial: u32,
    pub events: Vec<(f64, u32)>,
    pub horizon: f64,
}

impl SamplePath {
    /// Population at time `t`, inclusive of a jump exactly at `t`.
    pub fn value_at(&self, t: f64) -> Result<u32> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(FbpError::invalid(format!(
                "t={t} outside [0, {}]",
                self.horizon
            )));
        }
        let k = self.events.partition_point(|&(s, _)| s <= t);
        Ok(if k == 0 {
            self.initial
        } else {
            self.events[k - 1].1
        })
    }

    pub fn terminal(&self) -> u32 {
        self.events.last().map_or(self.initial, |e| e.1)
    }

    /// Completed holding times as `(state, duration)`; the final, censored
    /// holding period is left out.
    pub fn sojourns(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        let mut prev = (0.0, self.initial);
        self.events.iter().map(move |&(t, n)| {
            let out = (prev.1, t - prev.0);
            prev = (t, n);
            out
        })
    }

    pub fn max_sojourn(&self) -> f64 {
        self.sojourns().map(|s| s.1).fold(0.0, f64::max)
    }
}

/// Population at time `t` on `path`.
pub fn path_value_at(path: &SamplePath, t: f64) -> Result<u32> {
    path.value_at(t)
}

/// Which simulator to use for cross-sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classical CTMC, ignores `ν`.
    Classical,
    /// Mittag-Leffler sojourns along the embedded chain.
    Fractional,
    /// Classical process run to an inverse-stable random time.
    Marginal,
}

enum Stop {
    Horizon(f64),
    Events(usize),
}

/// Core event loop. `record` receives every jump; without it only the
/// terminal state is kept.
fn run(
    p: &ProcessParams,
    nu: f64,
    stop: Stop,
    stream: &mut RngStream,
    mut record: Option<&mut Vec<(f64, u32)>>,
) -> Result<(u32, f64)> {
    let (horizon, max_events) = match stop {
        Stop::Horizon(h) => (h, EVENT_CAP),
        Stop::Events(k) => (f64::INFINITY, k),
    };
    let mut n = p.initial;
    let mut t = 0.0;
    let mut count = 0usize;
    loop {
        if count == max_events {
            if horizon.is_finite() {
                return Err(FbpError::EventCapExceeded {
                    events: count,
                    time: t,
                    horizon,
                });
            }
            return Ok((n, t));
        }
        let birth = p.birth_rate(n);
        let rate = birth + p.mu * n as f64;
        if rate <= 0.0 {
            // absorbing: frozen until the horizon
            return Ok((n, if horizon.is_finite() { horizon } else { t }));
        }
        let s = stream.ml_sojourn_unchecked(nu, rate);
        if t + s > horizon {
            return Ok((n, horizon));
        }
        // sojourns below one ulp of t still move the clock forward
        t = (t + s).max(t.next_up());
        if stream.uniform() * rate < birth {
            n += 1;
        } else {
            n -= 1;
        }
        count += 1;
        if let Some(ev) = record.as_deref_mut() {
            ev.push((t, n));
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(FbpError::invalid(format!(
            "horizon {horizon} must be positive"
        )));
    }
    Ok(())
}

fn validate_sim(p: &ProcessParams) -> Result<()> {
    ProcessParams::with_degenerate_rates(p.lambda, p.mu, p.nu, p.capacity, p.initial).map(|_| ())
}

fn path_with(
    p: &ProcessParams,
    nu: f64,
    horizon: f64,
    stream: &mut RngStream,
) -> Result<SamplePath> {
    validate_sim(p)?;
    check_horizon(horizon)?;
    let mut events = Vec::new();
    run(p, nu, Stop::Horizon(horizon), stream, Some(&mut events))?;
    Ok(SamplePath {
        initial: p.initial,
        events,
        horizon,
    })
}

/// Classical birth-death path on `[0, horizon]`; `params.nu` is ignored.
pub fn simulate_binomial_path(
    params: &ProcessParams,
    horizon: f64,
    stream: &mut RngStream,
) -> Result<SamplePath> {
    path_with(params, 1.0, horizon, stream)
}

/// Fractional path on `[0, horizon]`: the classical jump chain with
/// Mittag-Leffler holding times.
pub fn simulate_fbp_path(
    params: &ProcessParams,
    horizon: f64,
    stream: &mut RngStream,
) -> Result<SamplePath> {
    path_with(params, params.nu, horizon, stream)
}

/// Fractional path stopped after a fixed number of jumps; the horizon is the
/// time of the last jump.
pub fn simulate_fbp_events(
    params: &ProcessParams,
    events: usize,
    stream: &mut RngStream,
) -> Result<SamplePath> {
    validate_sim(params)?;
    if events == 0 || events > EVENT_CAP {
        return Err(FbpError::invalid(format!(
            "event count {events} must lie in [1, {EVENT_CAP}]"
        )));
    }
    let mut ev = Vec::with_capacity(events);
    let (_, t) = run(
        params,
        params.nu,
        Stop::Events(events),
        stream,
        Some(&mut ev),
    )?;
    Ok(SamplePath {
        initial: params.initial,
        events: ev,
        horizon: t,
    })
}

/// One draw of the fractional process at time `t` via the inverse-stable
/// time change `E(t) = (t/V)^ν`.
pub fn sample_fbp_marginal(params: &ProcessParams, t: f64, stream: &mut RngStream) -> Result<u32> {
    validate_sim(params)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FbpError::invalid(format!("time {t} must be non-negative")));
    }
    marginal_unchecked(params, t, stream)
}

fn marginal_unchecked(p: &ProcessParams, t: f64, stream: &mut RngStream) -> Result<u32> {
    if t == 0.0 {
        return Ok(p.initial);
    }
    let tau = if p.nu == 1.0 {
        t
    } else {
        let v = stream.one_sided_stable_unchecked(p.nu);
        (t / v).powf(p.nu)
    };
    Ok(run(p, 1.0, Stop::Horizon(tau), stream, None)?.0)
}

/// `count` independent cross-sections at time `t`, one stream per draw
/// (`first_stream + i`), computed in parallel. Output order is stream order.
pub fn cross_sections(
    params: &ProcessParams,
    method: Method,
    t: f64,
    count: usize,
    seed: u64,
    first_stream: u64,
) -> Result<Vec<u32>> {
    validate_sim(params)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FbpError::invalid(format!("time {t} must be non-negative")));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = RngStream::new(seed, first_stream + i);
            if t == 0.0 {
                return Ok(params.initial);
            }
            match method {
                Method::Classical => Ok(run(params, 1.0, Stop::Horizon(t), &mut s, None)?.0),
                Method::Fractional => Ok(run(params, params.nu, Stop::Horizon(t), &mut s, None)?.0),
                Method::Marginal => marginal_unchecked(params, t, &mut s),
            }
        })
        .collect()
}

/// Stationary law `C(N,n) ξⁿ (1−ξ)^{N−n}` for `n = 0..=N`.
pub fn stationary_pmf(params: &ProcessParams) -> Vec<f64> {
    let n_cap = params.capacity;
    let xi = params.xi();
    let mut out = vec![0.0; n_cap as usize + 1];
    if xi <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if xi >= 1.0 {
        out[n_cap as usize] = 1.0;
        return out;
    }
    let (lx, l1x) = (xi.ln(), (-xi).ln_1p());
    let lnf = ln_gamma(n_cap as f64 + 1.0);
    for (n, slot) in out.iter_mut().enumerate() {
        let k = n as f64;
        let rest = (n_cap as usize - n) as f64;
        *slot = (lnf - ln_gamma(k + 1.0) - ln_gamma(rest + 1.0) + k * lx + rest * l1x).exp();
    }
    out
}

/// Write paths as `path_id,time,population`. Each path gets a row at time 0
/// and, if the last jump is earlier, a closing row at its horizon.
pub fn write_paths_csv<W: Write>(mut w: W, paths: &[SamplePath]) -> Result<()> {
    writeln!(w, "path_id,time,population")?;
    for (id, p) in paths.iter().enumerate() {
        writeln!(w, "{id},{:.16e},{}", 0.0, p.initial)?;
        for &(t, n) in &p.events {
            writeln!(w, "{id},{t:.16e},{n}")?;
        }
        let last = p.events.last().map_or(0.0, |e| e.0);
        if p.horizon > last && p.horizon.is_finite() {
            writeln!(w, "{id},{:.16e},{}", p.horizon, p.terminal())?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_params(nu: f64) -> ProcessParams {
        ProcessParams::new(0.015, 0.05, nu, 500, 300).unwrap()
    }

    fn assert_legal(p: &SamplePath, cap: u32) {
        let mut prev = (0.0, p.initial);
        for &(t, n) in &p.events {
            assert!(t > prev.0 && t <= p.horizon);
            assert_eq!((n as i64 - prev.1 as i64).abs(), 1);
            assert!(n <= cap);
            prev = (t, n);
        }
    }

    #[test]
    fn frozen_at_capacity_without_deaths() {
        let p = ProcessParams::with_degenerate_rates(0.2, 0.0, 1.0, 7, 7).unwrap();
        let path = simulate_binomial_path(&p, 1e6, &mut RngStream::new(1, 0)).unwrap();
        assert!(path.events.is_empty());
        assert_eq!(path.value_at(1e6).unwrap(), 7);
        let frac = ProcessParams { nu: 0.5, ..p };
        let path = simulate_fbp_path(&frac, 10.0, &mut RngStream::new(1, 0)).unwrap();
        assert!(path.events.is_empty());
    }

    #[test]
    fn paths_are_legal() {
        let mut s = RngStream::new(2, 0);
        for &nu in &[0.3, 0.8, 1.0] {
            for &(n_cap, m) in &[(1u32, 1u32), (5, 2), (50, 50)] {
                let p = ProcessParams::new(0.7, 0.4, nu, n_cap, m).unwrap();
                for _ in 0..20 {
                    let path = simulate_fbp_path(&p, 30.0, &mut s).unwrap();
                    assert_legal(&path, n_cap);
                }
            }
        }
    }

    #[test]
    fn single_slot_always_flips() {
        let p = ProcessParams::new(0.3, 0.5, 1.0, 1, 1).unwrap();
        let path = simulate_binomial_path(&p, 100.0, &mut RngStream::new(3, 0)).unwrap();
        for (i, &(_, n)) in path.events.iter().enumerate() {
            assert_eq!(n, if i % 2 == 0 { 0 } else { 1 });
        }
    }

    #[test]
    fn value_at_is_right_continuous() {
        let path = SamplePath {
            initial: 4,
            events: vec![(1.0, 5), (2.5, 4)],
            horizon: 3.0,
        };
        assert_eq!(path.value_at(0.0).unwrap(), 4);
        assert_eq!(path.value_at(1.0 - 1e-12).unwrap(), 4);
        assert_eq!(path.value_at(1.0).unwrap(), 5);
        assert_eq!(path.value_at(2.6).unwrap(), 4);
        assert_eq!(path.value_at(3.0).unwrap(), 4);
        assert!(path.value_at(3.1).is_err());
        assert!(path.value_at(-0.1).is_err());
    }

    #[test]
    fn sojourns_skip_the_censored_tail() {
        let path = SamplePath {
            initial: 4,
            events: vec![(1.0, 5), (2.5, 4)],
            horizon: 9.0,
        };
        let s: Vec<_> = path.sojourns().collect();
        assert_eq!(s, vec![(4, 1.0), (5, 1.5)]);
        assert_eq!(path.max_sojourn(), 1.5);
    }

    #[test]
    fn marginal_at_zero_is_initial() {
        let p = path_params(0.8);
        let mut s = RngStream::new(4, 0);
        for _ in 0..10 {
            assert_eq!(sample_fbp_marginal(&p, 0.0, &mut s).unwrap(), 300);
        }
        assert!(sample_fbp_marginal(&p, -1.0, &mut s).is_err());
    }

    #[test]
    fn events_mode_stops_at_count() {
        let p = path_params(0.8);
        let path = simulate_fbp_events(&p, 250, &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(path.events.len(), 250);
        assert_eq!(path.horizon, path.events[249].0);
        assert!(simulate_fbp_events(&p, 0, &mut RngStream::new(5, 0)).is_err());
    }

    #[test]
    fn event_cap_is_reported() {
        // ~5e8 events would be needed; the cap trips first
        let p = ProcessParams::new(1e3, 1e3, 1.0, 500, 250).unwrap();
        let err = simulate_binomial_path(&p, 1e3, &mut RngStream::new(6, 0)).unwrap_err();
        assert!(matches!(
            err,
            FbpError::EventCapExceeded {
                events: EVENT_CAP,
                ..
            }
        ));
    }

    #[test]
    fn same_stream_same_path() {
        let p = path_params(0.6);
        let a = simulate_fbp_path(&p, 50.0, &mut RngStream::new(8, 3)).unwrap();
        let b = simulate_fbp_path(&p, 50.0, &mut RngStream::new(8, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cross_sections_are_deterministic() {
        let p = path_params(0.8);
        let a = cross_sections(&p, Method::Fractional, 5.0, 64, 1, 0).unwrap();
        let b = cross_sections(&p, Method::Fractional, 5.0, 64, 1, 0).unwrap();
        assert_eq!(a, b);
        let direct: Vec<u32> = (0..4)
            .map(|i| {
                simulate_fbp_path(&p, 5.0, &mut RngStream::new(1, i))
                    .unwrap()
                    .terminal()
            })
            .collect();
        assert_eq!(&a[..4], &direct[..]);
    }

    #[test]
    fn pmf_small_cases() {
        let p = ProcessParams::new(0.3, 0.5, 1.0, 1, 1).unwrap();
        let pmf = stationary_pmf(&p);
        assert!((pmf[0] - 0.625).abs() < 1e-15 && (pmf[1] - 0.375).abs() < 1e-15);

        let p = ProcessParams::new(0.4, 0.4, 1.0, 10, 1).unwrap();
        let pmf = stationary_pmf(&p);
        let binom = [1., 10., 45., 120., 210., 252., 210., 120., 45., 10., 1.];
        for (a, b) in pmf.iter().zip(binom) {
            assert!((a - b / 1024.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pmf_mode_and_mass() {
        let pmf = stationary_pmf(&path_params(1.0));
        let sum: f64 = pmf.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let mode = (0..pmf.len())
            .max_by(|&a, &b| pmf[a].total_cmp(&pmf[b]))
            .unwrap();
        assert_eq!(mode, 115);
    }

    #[test]
    fn csv_layout() {
        let path = SamplePath {
            initial: 3,
            events: vec![(0.5, 4)],
            horizon: 2.0,
        };
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &[path.clone(), path]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path_id,time,population");
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[1], "0,0.0000000000000000e0,3");
        assert_eq!(lines[3], "0,2.0000000000000000e0,4");
        assert!(lines[4].starts_with("1,"));
    }
}
