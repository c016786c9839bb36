//! The whole pipeline at a small scale: toy population, benchmark and
//! corrupted training sets, one model each, evaluation and the summary.
//!
//!     cargo run --release --example run_experiment -- /tmp/popsynth-demo

use std::path::PathBuf;

use popsynth::pipeline::{run_experiment, PipelineConfig};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("popsynth-demo"));
    let config = PipelineConfig::from_toml(
        r#"
seed = 1
toy_rows = 20000
removed_combinations = 50
corruptions = ["attr2,attr4:0.10", "attr2,attr4:0.40"]
epochs = 10
batch_size = 128
reference_size = 512
sampling_levels = [5000, 10000, 20000]
"#,
    )?;
    let summary = run_experiment(&config, &out, &mut |model, r| {
        if r.epoch % 5 == 0 {
            eprintln!(
                "[{model}] epoch {} critic {:.3} generator {:.3}",
                r.epoch, r.critic_loss, r.generator_loss
            );
        }
    })?;
    for m in &summary.models {
        let worst = m
            .attributes
            .iter()
            .filter(|c| c.metric == "tv_complement")
            .filter_map(|c| c.abs_diff)
            .fold(0.0, f64::max);
        println!("{}: largest TV gap to the benchmark {worst:.3}", m.model);
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
