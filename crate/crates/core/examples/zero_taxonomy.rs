//! General samples, sampling zeros and structural zeros as the number of
//! drawn rows grows. The pool here is an independent draw from the
//! ground-truth mixture, the best a generator could do.

use popsynth::eval::{sampling_curve, SampleSource};
use popsynth::toy::{generate_toy_population, ToyPopulationSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // One mixture, two halves: the second half is a fresh draw.
    let both = generate_toy_population(&ToyPopulationSpec {
        n_rows: 200_000,
        ..Default::default()
    })?;
    let gt = both.select_rows(&(0..100_000).collect::<Vec<_>>());
    let pool = both.select_rows(&(100_000..200_000).collect::<Vec<_>>());
    let train = gt.sample_fraction(0.1, 1)?.remove_combinations(200, 2)?;
    let attrs: Vec<String> = gt
        .schema()
        .attributes()
        .iter()
        .map(|a| a.name.clone())
        .collect();

    let curve = sampling_curve(
        &gt,
        &train,
        SampleSource::Pool(&pool),
        &attrs,
        &[10_000, 25_000, 50_000, 100_000],
        3,
    )?;
    println!(
        "{:>7} {:>6} {:>6} {:>6} {:>9} {:>6}",
        "level", "gs", "sz", "stz", "precision", "recall"
    );
    let v = |m: &popsynth::eval::MetricValue| m.value.unwrap_or(f64::NAN);
    for p in &curve {
        println!(
            "{:>7} {:>6.3} {:>6.3} {:>6.3} {:>9.3} {:>6.3}",
            p.level,
            v(&p.score_gs),
            v(&p.score_sz),
            v(&p.score_stz),
            v(&p.precision),
            v(&p.recall)
        );
    }
    Ok(())
}
