//! Statistical helpers shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().sf(x)
}

/// Goodness of fit of integer `samples` to `pmf` (indexed by value).
/// Adjacent cells are merged until each expected count is at least 5.
/// Returns the p-value.
pub fn chi2_gof(samples: &[u32], pmf: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mut counts = vec![0usize; pmf.len()];
    for &s in samples {
        counts[s as usize] += 1;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(pmf) {
        obs += *c as f64;
        exp += p * n;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += obs;
        last.1 += exp;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    chi2_sf(stat, cells.len() - 1)
}

/// Two-sample chi-square homogeneity test on integer samples. Adjacent
/// values are pooled until each cell holds at least 10 pooled draws.
pub fn chi2_two_sample(a: &[u32], b: &[u32]) -> f64 {
    let max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut ca = vec![0.0; max + 1];
    let mut cb = vec![0.0; max + 1];
    for &x in a {
        ca[x as usize] += 1.0;
    }
    for &x in b {
        cb[x as usize] += 1.0;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut x, mut y) = (0.0, 0.0);
    for (p, q) in ca.iter().zip(&cb) {
        x += p;
        y += q;
        if x + y >= 10.0 {
            cells.push((x, y));
            x = 0.0;
            y = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += x;
        last.1 += y;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let tot = x + y;
            let ea = tot * na / n;
            let eb = tot * nb / n;
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    if cells.len() < 2 {
        return 1.0;
    }
    chi2_sf(stat, cells.len() - 1)
}

/// One-sample Kolmogorov–Smirnov p-value (asymptotic, with the usual
/// small-sample correction) of `xs` against `cdf`.
pub fn ks_pvalue(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Sample mean, sample variance, and standard errors of both.
pub struct SampleStats {
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

pub fn sample_stats(xs: &[u32]) -> SampleStats {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let m2 = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|&x| (x as f64 - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    SampleStats {
        mean,
        var,
        se_mean: (var / n).sqrt(),
        se_var: ((m4 - m2 * m2) / n).sqrt(),
    }
}

/// `e^{x²} erfc(x)` for `x ≥ 0`: power series for erf below 2, Laplace
/// continued fraction above. Good to ~1e-14 relative.
pub fn erfcx(x: f64) -> f64 {
    let sqrt_pi = PI.sqrt();
    if x < 2.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0.0;
        while term > 1e-18 * sum {
            n += 1.0;
            term *= 2.0 * x * x / (2.0 * n + 1.0);
            sum += term;
        }
        (x * x).exp() - 2.0 * x / sqrt_pi * sum
    } else {
        let mut f = x;
        for n in (1..=400).rev() {
            f = x + (n as f64 / 2.0) / f;
        }
        1.0 / (sqrt_pi * f)
    }
}
