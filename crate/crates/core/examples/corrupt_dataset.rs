//! Blank a share of the cells of chosen attributes, completely at random,
//! and compare the fraction of incomplete rows with `1 - (1 - r)^q`.

use popsynth::corrupt::{inject_missingness, CorruptionSpec};
use popsynth::stats::compute_stats;
use popsynth::toy::{generate_toy_population, ToyPopulationSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let complete = generate_toy_population(&ToyPopulationSpec::default())?;
    for (q, r) in [(2, 0.1), (2, 0.4), (5, 0.4)] {
        let targets: Vec<String> = (0..q).map(|a| format!("attr{a}")).collect();
        let spec = CorruptionSpec::new(targets, r, 1);
        let stats = compute_stats(&inject_missingness(&complete, &spec)?);
        let expected = 1.0 - (1.0 - r).powi(q as i32);
        println!(
            "{:<10} rows with a missing cell: {:>6} ({:.2}%, expected {:.2}%)",
            spec.label(),
            stats.rows_with_any_missing,
            100.0 * stats.rows_with_any_missing_fraction,
            100.0 * expected
        );
    }
    Ok(())
}
