//! Draw Mittag-Leffler sojourns and compare their empirical survival with
//! E_ν(−r t^ν). Heavier tails show up as the order drops.

use fbp::special::{mittag_leffler, MlConfig};
use fbp::RngStream;

fn main() -> fbp::Result<()> {
    let cfg = MlConfig::default();
    let rate = 2.0;
    let n = 200_000;
    for nu in [0.4, 0.7, 1.0] {
        let mut stream = RngStream::new(7, 0);
        let d: Vec<f64> = (0..n)
            .map(|_| stream.ml_sojourn(nu, rate).map(|s| s.duration))
            .collect::<fbp::Result<_>>()?;
        println!("nu = {nu}");
        for t in [0.1, 1.0, 10.0, 100.0] {
            let emp = d.iter().filter(|&&x| x > t).count() as f64 / n as f64;
            let exact = mittag_leffler(nu, -rate * f64::powf(t, nu), &cfg)?;
            println!("  P(D > {t:>5}) simulated {emp:.5}  exact {exact:.5}");
        }
    }
    Ok(())
}
