//! Power-law decay of correlations: the process itself is long-range
//! dependent, its increments are short-range dependent.

use fbp::moments::{log_grid, Moments};
use fbp::ProcessParams;

fn main() -> fbp::Result<()> {
    let grid = log_grid(1e2, 1e5, 7)?;
    for nu in [0.3, 0.5, 0.8] {
        let m = Moments::new(&ProcessParams::new(0.3, 0.5, nu, 500, 30)?)?;
        let lrd = m.lrd_fit(1.0, &grid)?;
        let fbn = m.fbn_fit(1.0, 1.0, &grid)?;
        println!(
            "nu={nu}: process decays like t^-{:.4} ({:?}, nu/2 = {}), increments like t^-{:.4} ({:?}, 1+nu/2 = {})",
            lrd.exponent,
            lrd.classify(),
            nu / 2.0,
            fbn.exponent,
            fbn.classify(),
            1.0 + nu / 2.0
        );
    }

    let m = Moments::new(&ProcessParams::new(0.3, 0.5, 0.8, 500, 30)?)?;
    println!("\n{:>10} {:>14} {:>14}", "t", "cov excess", "t^-0.8 law");
    for t in log_grid(1e2, 1e6, 5)? {
        println!(
            "{t:>10.0} {:>14.6e} {:>14.6e}",
            m.covariance_excess(1.0, t)?,
            m.asymptotic_covariance(1.0, t)?
        );
    }
    Ok(())
}
