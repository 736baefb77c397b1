//! Evaluate E_ν(−x) across the three numerical regimes and compare with
//! the closed forms available at ν = 1 and ν = 1/2.

use fbp::special::{effective_crossover, mittag_leffler, ml_leading_asymptotic, MlConfig};

fn main() -> fbp::Result<()> {
    let cfg = MlConfig::default();
    println!(
        "{:>6} {:>8} {:>22} {:>22}",
        "nu", "x", "E_nu(-x)", "1/(Gamma(1-nu) x)"
    );
    for nu in [0.3, 0.5, 0.8, 0.95] {
        for x in [0.5, 5.0, 50.0, 5000.0] {
            let v = mittag_leffler(nu, -x, &cfg)?;
            let lead = ml_leading_asymptotic(nu, x)?;
            println!("{nu:>6} {x:>8} {v:>22.15e} {lead:>22.15e}");
        }
        println!(
            "       asymptotic series takes over at x = {:.3}",
            effective_crossover(nu, &cfg)?
        );
    }

    // E_1(z) = exp(z)
    let z = -12.5;
    println!(
        "E_1({z}) = {:e}, exp = {:e}",
        mittag_leffler(1.0, z, &cfg)?,
        f64::exp(z)
    );
    Ok(())
}
