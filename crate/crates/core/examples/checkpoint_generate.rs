//! Save a trained model, load it back and draw populations from it.

use popsynth::encoding::DecodeMode;
use popsynth::toy::{generate_toy_population, ToyPopulationSpec};
use popsynth::wgan::{
    generate_population, load_checkpoint, save_checkpoint, train, TrainingConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_toy_population(&ToyPopulationSpec {
        n_rows: 2_000,
        ..ToyPopulationSpec::default()
    })?;
    let config = TrainingConfig {
        epochs: 2,
        batch_size: 128,
        hidden_units: 32,
        latent_dim: 16,
        ..TrainingConfig::default()
    };
    let trained = train(&data, &config)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.bin");
    save_checkpoint(&trained.generator, &trained.critic, &config, &path)?;
    let ck = load_checkpoint(&path)?;
    ck.require_schema(data.schema())?;
    println!(
        "checkpoint {} bytes, schema {}",
        std::fs::metadata(&path)?.len(),
        ck.schema.digest_hex()
    );

    let a = generate_population(&ck.generator, 1_000, DecodeMode::Sample, 1)?;
    let b = generate_population(&ck.generator, 1_000, DecodeMode::Sample, 1)?;
    let c = generate_population(&ck.generator, 1_000, DecodeMode::Sample, 2)?;
    println!(
        "same seed identical: {}, other seed identical: {}",
        a == b,
        a == c
    );
    println!(
        "argmax rows share combinations: {} unique of 1000",
        generate_population(&ck.generator, 1_000, DecodeMode::Argmax, 1)?
            .unique_combinations()
            .len()
    );
    Ok(())
}
