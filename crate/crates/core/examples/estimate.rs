//! Method-of-moments estimation of (λ, ν) from a single simulated sample
//! with μ, M and N known.

use fbp::estimator::{
    default_observation_time, sample_moments, solve_moment_equations, KnownParams, SolverOptions,
};
use fbp::sim::{cross_sections, Method};
use fbp::ProcessParams;

fn main() -> fbp::Result<()> {
    let truth = ProcessParams::new(0.3, 0.5, 0.8, 500, 30)?;
    let t = default_observation_time(&truth)?;
    println!("observation time T = {t:.4}");

    for j in [100, 1000, 10_000] {
        let xs = cross_sections(&truth, Method::Fractional, t, j, 42, 0)?;
        let summary = sample_moments(&xs, t)?;
        let fit = solve_moment_equations(
            &summary,
            KnownParams::from(&truth),
            &SolverOptions::default(),
        )?;
        println!(
            "J={j:>6}: lambda {:.4}  nu {:.4}  residual {:.1e}  converged {}",
            fit.lambda_hat, fit.nu_hat, fit.residual_norm, fit.converged
        );
    }
    Ok(())
}
