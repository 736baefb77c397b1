//! Five sample paths of the classical (ν = 1) and fractional (ν = 0.8)
//! processes with λ = 0.015, μ = 0.05, N = 500, M = 300, written as CSV
//! ready for plotting.
//!
//! ```text
//! cargo run --release --example figure_paths -- out_dir
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use fbp::sim::{simulate_fbp_path, write_paths_csv};
use fbp::{ProcessParams, RngStream};

fn main() -> fbp::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    for (nu, name) in [(1.0, "paths_nu1.csv"), (0.8, "paths_nu08.csv")] {
        let p = ProcessParams::new(0.015, 0.05, nu, 500, 300)?;
        let paths = (0..5)
            .map(|i| simulate_fbp_path(&p, 200.0, &mut RngStream::new(2024, i)))
            .collect::<fbp::Result<Vec<_>>>()?;
        for (i, path) in paths.iter().enumerate() {
            println!(
                "nu={nu} path {i}: {} jumps, N(200) = {}, longest stay {:.2}",
                path.events.len(),
                path.terminal(),
                path.max_sojourn()
            );
        }
        let out = dir.join(name);
        write_paths_csv(BufWriter::new(File::create(&out)?), &paths)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
