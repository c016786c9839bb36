//! Generate a latent-class toy population and print its summary statistics.
//!
//!     cargo run --release --example toy_population -- 20000

use popsynth::stats::compute_stats;
use popsynth::toy::{generate_toy_population, ToyPopulationSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_rows = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    let spec = ToyPopulationSpec {
        n_rows,
        ..ToyPopulationSpec::default()
    };
    let population = generate_toy_population(&spec)?;
    println!("{}", compute_stats(&population).to_json());

    let mut preview = Vec::new();
    population
        .select_rows(&[0, 1, 2, 3, 4])
        .write_csv(&mut preview)?;
    print!("{}", String::from_utf8(preview)?);
    Ok(())
}
