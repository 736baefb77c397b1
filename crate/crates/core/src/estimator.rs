//! Method-of-moments recovery of `(λ, ν)` from a cross-section at a fixed
//! time, and the replicated Monte Carlo study built on it.
//!
//! `μ`, `M` and `N` are known. The two moment equations are solved as a
//! least-squares problem on scaled residuals: a 16×16 grid scan, Nelder–Mead
//! from the three best cells, then a short Newton polish on the root.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FbpError, Result};
use crate::moments::Moments;
use crate::nelder_mead::{self, Bounds};
use crate::params::ProcessParams;
use crate::rng::RngStream;
use crate::sim::{sample_fbp_marginal, simulate_fbp_path, Method};
use crate::special::{mittag_leffler, MlConfig};

/// Smallest order the solver will consider.
pub const NU_FLOOR: f64 = 0.05;
const GRID: usize = 16;
const STARTS: usize = 3;

/// First two sample moments of a cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub sample_size: usize,
    pub observation_time: f64,
}

impl MomentSummary {
    pub fn new(m1: f64, m2: f64, sample_size: usize, observation_time: f64) -> Result<Self> {
        let s = MomentSummary {
            m1,
            m2,
            sample_size,
            observation_time,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m1.is_finite() || !self.m2.is_finite() {
            return Err(FbpError::NonFinite("sample moments"));
        }
        if self.sample_size < 2 {
            return Err(FbpError::invalid("sample size must be at least 2"));
        }
        if self.m1 < 0.0 || self.m2 < self.m1 * self.m1 - 1e-9 {
            return Err(FbpError::invalid(format!(
                "inconsistent moments m1={}, m2={}",
                self.m1, self.m2
            )));
        }
        if !(self.observation_time > 0.0) || !self.observation_time.is_finite() {
            return Err(FbpError::invalid("observation time must be positive"));
        }
        Ok(())
    }
}

/// Mean and mean of squares of `values`, observed at time `t`.
pub fn sample_moments(values: &[u32], t: f64) -> Result<MomentSummary> {
    if values.len() < 2 {
        return Err(FbpError::invalid("need at least 2 observations"));
    }
    let n = values.len() as f64;
    let m1 = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let m2 = values.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / n;
    MomentSummary::new(m1, m2, values.len(), t)
}

/// Constants held fixed during estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnownParams {
    pub mu: f64,
    #[serde(rename = "M")]
    pub initial: u32,
    #[serde(rename = "N")]
    pub capacity: u32,
}

impl From<&ProcessParams> for KnownParams {
    fn from(p: &ProcessParams) -> Self {
        KnownParams {
            mu: p.mu,
            initial: p.initial,
            capacity: p.capacity,
        }
    }
}

/// Search box for `λ` and the convergence threshold on the scaled residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            lambda_min: 1e-3,
            lambda_max: 100.0,
            tolerance: 1e-8,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_max > self.lambda_min)
            || !self.lambda_max.is_finite()
        {
            return Err(FbpError::invalid(format!(
                "lambda bounds must satisfy 0 < min < max (got {}, {})",
                self.lambda_min, self.lambda_max
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(FbpError::invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    pub lambda_hat: f64,
    pub nu_hat: f64,
    /// Euclidean norm of the scaled residuals at the estimate.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Problem {
    known: KnownParams,
    summary: MomentSummary,
    ml: MlConfig,
}

impl Problem {
    /// Scaled residuals in the `(ln λ, ν)` coordinates the solver works in.
    fn residuals(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let lambda = x[0].exp();
        let p = ProcessParams::new(
            lambda,
            self.known.mu,
            x[1],
            self.known.capacity,
            self.known.initial,
        )
        .ok()?;
        let (m1, m2) = Moments::with_config(&p, self.ml)
            .ok()?
            .raw_moments(self.summary.observation_time)
            .ok()?;
        let r = [
            (m1 - self.summary.m1) / self.summary.m1.max(1.0),
            (m2 - self.summary.m2) / self.summary.m2.max(1.0),
        ];
        (r[0].is_finite() && r[1].is_finite()).then_some(r)
    }

    fn objective(&self, x: [f64; 2]) -> f64 {
        self.residuals(x)
            .map_or(f64::INFINITY, |r| r[0] * r[0] + r[1] * r[1])
    }
}

/// Solve the moment equations for `(λ, ν)` with `μ`, `M`, `N` known.
///
/// Not finding a root inside the box is not an error: the best point is
/// returned with `converged = false`.
pub fn solve_moment_equations(
    summary: &MomentSummary,
    known: KnownParams,
    options: &SolverOptions,
) -> Result<EstimateResult> {
    summary.validate()?;
    options.validate()?;
    if !(known.mu > 0.0) || !known.mu.is_finite() {
        return Err(FbpError::invalid("mu must be positive"));
    }
    if known.initial < 1 || known.initial > known.capacity {
        return Err(FbpError::invalid("need 1 <= M <= N"));
    }
    if summary.m1 > known.capacity as f64 {
        return Err(FbpError::invalid("sample mean exceeds capacity N"));
    }
    let prob = Problem {
        known,
        summary: *summary,
        ml: MlConfig::default(),
    };
    let bounds = Bounds {
        lo: [options.lambda_min.ln(), NU_FLOOR],
        hi: [options.lambda_max.ln(), 1.0],
    };
    let span = [bounds.hi[0] - bounds.lo[0], bounds.hi[1] - bounds.lo[1]];
    let cell = [span[0] / GRID as f64, span[1] / GRID as f64];

    // grid of cell centres, evaluated in parallel, kept in index order
    let mut grid: Vec<([f64; 2], f64)> = (0..GRID * GRID)
        .into_par_iter()
        .map(|k| {
            let x = [
                bounds.lo[0] + cell[0] * ((k / GRID) as f64 + 0.5),
                bounds.lo[1] + cell[1] * ((k % GRID) as f64 + 0.5),
            ];
            (x, prob.objective(x))
        })
        .collect();
    grid.sort_by(|a, b| a.1.total_cmp(&b.1));
    if !grid[0].1.is_finite() {
        return Err(FbpError::NonFinite("moment equations on the search grid"));
    }

    let target = (options.tolerance * 1e-3).powi(2);
    let mut best: Option<([f64; 2], f64)> = None;
    let mut iterations = 0;
    for &(x0, _) in grid.iter().take(STARTS) {
        let nm = nelder_mead::minimize(
            |x| prob.objective(x),
            x0,
            [0.5 * cell[0], 0.5 * cell[1]],
            &bounds,
            target,
            1e-14,
            400,
        );
        iterations += nm.iterations;
        let (x, f, steps) = newton_polish(&prob, nm.x, nm.f, &bounds, target);
        iterations += steps;
        if best.is_none_or(|b| f < b.1) {
            best = Some((x, f));
        }
    }
    let (x, f) = best.expect("at least one start");
    let residual_norm = f.sqrt();
    Ok(EstimateResult {
        lambda_hat: x[0].exp(),
        nu_hat: x[1],
        residual_norm,
        iterations,
        converged: residual_norm <= options.tolerance,
    })
}

/// Damped Newton on the two residual equations with a forward-difference
/// Jacobian; a step is only taken if it lowers the objective.
fn newton_polish(
    prob: &Problem,
    mut x: [f64; 2],
    mut f: f64,
    bounds: &Bounds,
    target: f64,
) -> ([f64; 2], f64, usize) {
    let mut steps = 0;
    for _ in 0..30 {
        if f <= target {
            break;
        }
        let Some(r) = prob.residuals(x) else { break };
        let mut jac = [[0.0; 2]; 2];
        for d in 0..2 {
            let h = 1e-7 * (1.0 + x[d].abs());
            let mut xp = x;
            // step inward at the upper face
            xp[d] = if x[d] + h <= bounds.hi[d] {
                x[d] + h
            } else {
                x[d] - h
            };
            let Some(rp) = prob.residuals(xp) else {
                return (x, f, steps);
            };
            let dh = xp[d] - x[d];
            jac[0][d] = (rp[0] - r[0]) / dh;
            jac[1][d] = (rp[1] - r[1]) / dh;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
        ];
        let mut dirs = vec![dx];
        // a root on a face: hold the clipped coordinate and solve the
        // remaining one in the least-squares sense
        for d in 0..2 {
            let stepped = x[d] - dx[d];
            if stepped < bounds.lo[d] || stepped > bounds.hi[d] {
                let o = 1 - d;
                let norm = jac[0][o] * jac[0][o] + jac[1][o] * jac[1][o];
                if norm > 0.0 {
                    let mut red = [0.0; 2];
                    red[o] = (jac[0][o] * r[0] + jac[1][o] * r[1]) / norm;
                    dirs.push(red);
                }
            }
        }
        let mut accepted = false;
        'dirs: for dir in dirs {
            let mut scale = 1.0;
            for _ in 0..20 {
                let xn = bounds.project([x[0] - scale * dir[0], x[1] - scale * dir[1]]);
                let fn_ = prob.objective(xn);
                if fn_ < f {
                    x = xn;
                    f = fn_;
                    accepted = true;
                    break 'dirs;
                }
                scale *= 0.5;
            }
        }
        steps += 1;
        if !accepted {
            break;
        }
    }
    (x, f, steps)
}

/// Observation time at which `E_ν(−(λ+μ)T^ν) = 0.3`: halfway through the
/// relaxation, where both moment equations carry information.
pub fn default_observation_time(params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    const LEVEL: f64 = 0.3;
    let cfg = MlConfig::default();
    let g = |x: f64| mittag_leffler(params.nu, -x, &cfg).map(|v| v - LEVEL);
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok((0.5 * (lo + hi) / params.total_rate()).powf(1.0 / params.nu))
}

/// Dispersion of one parameter's estimates about their mean and the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamStats {
    pub mean: f64,
    pub mad: f64,
    pub mse: f64,
    pub bias_pct: f64,
    pub cv: f64,
}

impl ParamStats {
    /// All moments are population (divide by K) moments.
    pub fn from_estimates(estimates: &[f64], truth: f64) -> Result<Self> {
        if estimates.is_empty() {
            return Err(FbpError::invalid("no estimates to summarise"));
        }
        let k = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / k;
        let mad = estimates.iter().map(|e| (e - mean).abs()).sum::<f64>() / k;
        let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / k;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / k;
        Ok(ParamStats {
            mean,
            mad,
            mse,
            bias_pct: (mean - truth).abs() / truth * 100.0,
            cv: var.sqrt() / mean * 100.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    /// Paths per replicate.
    pub j: usize,
    /// Replicates.
    pub k: usize,
    /// Observation time; `None` selects [`default_observation_time`].
    pub t: Option<f64>,
    pub seed: u64,
    pub solver: SolverOptions,
    pub method: Method,
}

impl StudyConfig {
    pub fn new(j: usize, k: usize, seed: u64) -> Self {
        StudyConfig {
            j,
            k,
            t: None,
            seed,
            solver: SolverOptions::default(),
            method: Method::Fractional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub summary: MomentSummary,
    pub estimate: EstimateResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McStudyReport {
    pub true_params: ProcessParams,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub seed: u64,
    pub lambda: ParamStats,
    pub nu: ParamStats,
    pub failures: usize,
    #[serde(skip)]
    pub replicates: Vec<ReplicateResult>,
}

/// Cross-section of `j` draws at `t` from one replicate's stream.
fn replicate_sample(
    params: &ProcessParams,
    method: Method,
    t: f64,
    j: usize,
    stream: &mut RngStream,
) -> Result<Vec<u32>> {
    (0..j)
        .map(|_| match method {
            Method::Marginal => sample_fbp_marginal(params, t, stream),
            Method::Fractional => Ok(simulate_fbp_path(params, t, stream)?.terminal()),
            Method::Classical => {
                let classical = ProcessParams { nu: 1.0, ..*params };
                Ok(simulate_fbp_path(&classical, t, stream)?.terminal())
            }
        })
        .collect()
}

/// Simulate `K` replicates of `J` cross-sections, estimate `(λ, ν)` from
/// each, and summarise the converged estimates. Replicate `i` draws from
/// stream `i`, so the report does not depend on the thread count.
pub fn run_mc_study(true_params: &ProcessParams, cfg: &StudyConfig) -> Result<McStudyReport> {
    true_params.validate()?;
    cfg.solver.validate()?;
    if cfg.j < 2 || cfg.k < 1 {
        return Err(FbpError::invalid("need J >= 2 and K >= 1"));
    }
    let t = match cfg.t {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => {
            return Err(FbpError::invalid(format!(
                "observation time {t} must be positive"
            )))
        }
        None => default_observation_time(true_params)?,
    };
    let known = KnownParams::from(true_params);
    let replicates = (0..cfg.k)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(cfg.seed, i as u64);
            let xs = replicate_sample(true_params, cfg.method, t, cfg.j, &mut stream)?;
            let summary = sample_moments(&xs, t)?;
            let estimate = solve_moment_equations(&summary, known, &cfg.solver)?;
            Ok(ReplicateResult {
                replicate: i,
                summary,
                estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ok: Vec<&ReplicateResult> = replicates.iter().filter(|r| r.estimate.converged).collect();
    let failures = cfg.k - ok.len();
    if ok.is_empty() || failures * 5 > cfg.k {
        return Err(FbpError::StudyFailed {
            failed: failures,
            total: cfg.k,
        });
    }
    let lambdas: Vec<f64> = ok.iter().map(|r| r.estimate.lambda_hat).collect();
    let nus: Vec<f64> = ok.iter().map(|r| r.estimate.nu_hat).collect();
    Ok(McStudyReport {
        true_params: *true_params,
        j: cfg.j,
        k: cfg.k,
        t,
        seed: cfg.seed,
        lambda: ParamStats::from_estimates(&lambdas, true_params.lambda)?,
        nu: ParamStats::from_estimates(&nus, true_params.nu)?,
        failures,
        replicates,
    })
}

/// Per-replicate log with columns `replicate,lambda_hat,nu_hat,residual,converged`.
pub fn write_replicates_csv<W: Write>(mut w: W, replicates: &[ReplicateResult]) -> Result<()> {
    writeln!(w, "replicate,lambda_hat,nu_hat,residual,converged")?;
    for r in replicates {
        let e = &r.estimate;
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.replicate, e.lambda_hat, e.nu_hat, e.residual_norm, e.converged
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_summary(p: &ProcessParams, t: f64) -> MomentSummary {
        let (m1, m2) = Moments::new(p).unwrap().raw_moments(t).unwrap();
        MomentSummary::new(m1, m2, 500, t).unwrap()
    }

    #[test]
    fn sample_moment_arithmetic() {
        let s = sample_moments(&[3, 5], 1.0).unwrap();
        assert_eq!((s.m1, s.m2, s.sample_size), (4.0, 17.0, 2));
        let s = sample_moments(&[7; 10], 2.0).unwrap();
        assert_eq!((s.m1, s.m2), (7.0, 49.0));
        assert!(sample_moments(&[1], 1.0).is_err());
        assert!(sample_moments(&[], 1.0).is_err());
        assert!(sample_moments(&[1, 2], 0.0).is_err());
        assert!(MomentSummary::new(5.0, 20.0, 3, 1.0).is_err());
    }

    #[test]
    fn exact_moments_round_trip() {
        for (lam, nu) in [(0.3, 0.8), (0.5, 0.4), (0.6, 0.9), (0.9, 0.5), (0.4, 1.0)] {
            let p = ProcessParams::new(lam, 0.5, nu, 500, 30).unwrap();
            let t = default_observation_time(&p).unwrap();
            let s = exact_summary(&p, t);
            let r = solve_moment_equations(&s, KnownParams::from(&p), &SolverOptions::default())
                .unwrap();
            assert!(r.converged, "{lam} {nu} {r:?}");
            assert!((r.lambda_hat - lam).abs() < 1e-6, "{r:?}");
            assert!((r.nu_hat - nu).abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let p = ProcessParams::new(0.3, 0.5, 0.8, 500, 30).unwrap();
        let s = MomentSummary::new(120.0, 120.0f64.powi(2) + 90.0, 500, 1.5).unwrap();
        let opts = SolverOptions::default();
        let a = solve_moment_equations(&s, KnownParams::from(&p), &opts).unwrap();
        let b = solve_moment_equations(&s, KnownParams::from(&p), &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.lambda_hat >= opts.lambda_min && a.lambda_hat <= opts.lambda_max);
        assert!(a.nu_hat > 0.0 && a.nu_hat <= 1.0);
    }

    #[test]
    fn solver_rejects_bad_options() {
        let p = ProcessParams::new(0.3, 0.5, 0.8, 500, 30).unwrap();
        let s = exact_summary(&p, 1.0);
        let known = KnownParams::from(&p);
        let o = SolverOptions {
            lambda_min: 0.0,
            ..SolverOptions::default()
        };
        assert!(solve_moment_equations(&s, known, &o).is_err());
        let o = SolverOptions {
            tolerance: -1.0,
            ..SolverOptions::default()
        };
        assert!(solve_moment_equations(&s, known, &o).is_err());
    }

    #[test]
    fn default_time_hits_level() {
        for nu in [0.2, 0.8, 1.0] {
            let p = ProcessParams::new(0.3, 0.5, nu, 500, 30).unwrap();
            let t = default_observation_time(&p).unwrap();
            let e = Moments::new(&p).unwrap().relaxation(t).unwrap();
            assert!((e - 0.3).abs() < 1e-12, "{nu} {e}");
        }
        let p = ProcessParams::new(0.3, 0.5, 1.0, 500, 30).unwrap();
        let t = default_observation_time(&p).unwrap();
        assert!((t - (1.0f64 / 0.3).ln() / 0.8).abs() < 1e-12);
    }

    #[test]
    fn stats_formulas() {
        let s = ParamStats::from_estimates(&[0.31; 4], 0.3).unwrap();
        assert!((s.bias_pct - 10.0 / 3.0).abs() < 1e-12);
        assert!(s.mad.abs() < 1e-15 && s.cv.abs() < 1e-12);
        let s = ParamStats::from_estimates(&[0.2, 0.4], 0.3).unwrap();
        assert!((s.mean - 0.3).abs() < 1e-15);
        assert!((s.mad - 0.1).abs() < 1e-15);
        assert!((s.mse - 0.01).abs() < 1e-15);
        assert!((s.cv - 0.1 / 0.3 * 100.0).abs() < 1e-12);
        let one = ParamStats::from_estimates(&[0.7], 0.5).unwrap();
        assert_eq!((one.mad, one.cv), (0.0, 0.0));
    }

    #[test]
    fn small_study_is_reproducible() {
        let p = ProcessParams::new(0.3, 0.5, 0.8, 500, 30).unwrap();
        let cfg = StudyConfig::new(50, 6, 42);
        let a = run_mc_study(&p, &cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_mc_study(&p, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.replicates.len(), 6);
        let mut buf = Vec::new();
        write_replicates_csv(&mut buf, &a.replicates).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("replicate,lambda_hat,nu_hat,residual,converged\n0,"));
        let json = serde_json::to_value(&a).unwrap();
        for key in [
            "true_params",
            "J",
            "K",
            "T",
            "seed",
            "lambda",
            "nu",
            "failures",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["lambda"].get("bias_pct").is_some());
    }
}
