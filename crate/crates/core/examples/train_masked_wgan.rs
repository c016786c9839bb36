//! Train a small masked WGAN-GP on a corrupted toy sample and compare the
//! generated marginals with the ground truth.

use popsynth::corrupt::{inject_missingness, CorruptionSpec};
use popsynth::encoding::DecodeMode;
use popsynth::eval::tv_complement;
use popsynth::toy::{generate_toy_population, ToyPopulationSpec};
use popsynth::wgan::{generate_population, train_observed, TrainingConfig};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20);
    let population = generate_toy_population(&ToyPopulationSpec {
        n_rows: 20_000,
        ..ToyPopulationSpec::default()
    })?;
    let sample = population.sample_fraction(0.1, 1)?;
    let spec = CorruptionSpec::new(vec!["attr2".into(), "attr4".into()], 0.2, 2);
    let train = inject_missingness(&sample, &spec)?;

    let config = TrainingConfig {
        epochs,
        batch_size: 128,
        seed: 3,
        ..TrainingConfig::default()
    };
    let trained = train_observed(&train, &config, |r, _, _| {
        println!(
            "epoch {:>3}  critic {:>9.4}  generator {:>9.4}  gp {:>8.4}  bd {:.4}  ad {:.4}",
            r.epoch, r.critic_loss, r.generator_loss, r.gradient_penalty, r.r_bd, r.r_ad
        );
    })?;

    let synthetic = generate_population(
        &trained.generator,
        population.n_rows(),
        DecodeMode::Sample,
        4,
    )?;
    for a in population.schema().attributes() {
        println!(
            "{:<6} TV complement {:.3}",
            a.name,
            tv_complement(&population, &synthetic, &a.name)?
        );
    }
    Ok(())
}
