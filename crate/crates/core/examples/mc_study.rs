//! A replicated estimation study: mean, MAD, MSE and percent bias of
//! (λ̂, ν̂) over K samples of size J, at two fractional orders.

use fbp::estimator::{run_mc_study, StudyConfig};
use fbp::ProcessParams;

fn main() -> fbp::Result<()> {
    for (lambda, nu) in [(0.7, 0.2), (0.6, 0.9)] {
        let p = ProcessParams::new(lambda, 0.5, nu, 500, 30)?;
        let report = run_mc_study(&p, &StudyConfig::new(500, 40, 3))?;
        println!(
            "lambda={lambda} nu={nu}  T={:.4}  failures {}",
            report.t, report.failures
        );
        for (name, s) in [("lambda", report.lambda), ("nu", report.nu)] {
            println!(
                "  {name:>6}: mean {:.4}  MAD {:.4}  MSE {:.2e}  |bias| {:.2}%  CV {:.2}%",
                s.mean, s.mad, s.mse, s.bias_pct, s.cv
            );
        }
    }
    Ok(())
}
