use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use popsynth::encoding::DecodeMode;
use popsynth::pipeline::{
    evaluate_stage, generate_stage, layout, prepare, resolve_schema, run_experiment, toy_gen,
    train_stage, Manifest, PipelineConfig, PipelineError, StageRecord,
};
use popsynth::wgan::EpochRecord;

// The training loop allocates many short-lived matrices.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(
    name = "popsynth",
    version,
    about = "Masked WGAN-GP population synthesis"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "popsynth-out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a toy ground-truth population.
    ToyGen {
        #[arg(long)]
        rows: Option<usize>,
        /// Category counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        categories: Option<Vec<usize>>,
        #[arg(long)]
        classes: Option<usize>,
    },
    /// Build the benchmark training set and its corrupted copies.
    Prepare {
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Train one model on a prepared dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Model name; defaults to the dataset file stem.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Sample complete rows from a checkpoint.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "sample")]
        mode: DecodeMode,
        /// Output CSV; defaults to synthetic/<name>.csv in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "model")]
        name: String,
    },
    /// Score a synthetic population against the ground truth.
    Evaluate {
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(long, default_value = "model")]
        name: String,
    },
    /// Run every stage end to end.
    RunExperiment {
        #[arg(long)]
        quiet: bool,
    },
}

fn progress(quiet: bool) -> impl FnMut(&str, &EpochRecord) {
    move |name, r| {
        if !quiet {
            eprintln!(
                "[{name}] epoch {:>4}  critic {:>10.4}  generator {:>10.4}  gp {:>9.4}  bd {:.4}  ad {:.4}",
                r.epoch, r.critic_loss, r.generator_loss, r.gradient_penalty, r.r_bd, r.r_ad
            );
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

fn single_stage(
    root: &Path,
    command: &str,
    config: &PipelineConfig,
    seed: u64,
    stages: Vec<StageRecord>,
) -> Result<(), PipelineError> {
    let path = layout::manifest(root, command);
    if path.exists() {
        return Err(PipelineError::Exists(path));
    }
    let mut m = Manifest::new(command, config.digest(), seed);
    m.stages = stages;
    m.complete = true;
    m.write(&path)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut config = match &cli.common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.common.seed {
        config.seed = s;
    }
    let root = cli.common.out_dir;
    std::fs::create_dir_all(&root)?;

    match cli.command {
        Command::ToyGen {
            rows,
            categories,
            classes,
        } => {
            config.toy_rows = rows.unwrap_or(config.toy_rows);
            config.toy_categories = categories.unwrap_or(config.toy_categories);
            config.toy_latent_classes = classes.unwrap_or(config.toy_latent_classes);
            let (record, stats) = toy_gen(&config, &root)?;
            println!("{}", stats.to_json());
            single_stage(&root, "toy-gen", &config, config.seed, vec![record])
        }
        Command::Prepare { ground_truth } => {
            let gt = ground_truth
                .or_else(|| config.ground_truth.clone())
                .unwrap_or_else(|| layout::ground_truth(&root));
            let schema = resolve_schema(&config, &gt)?;
            let records = prepare(&config, &gt, &schema, &root)?;
            for r in &records {
                for path in r.outputs.keys().filter(|p| p.ends_with(".stats.json")) {
                    println!("{path}");
                    println!("{}", std::fs::read_to_string(root.join(path))?);
                }
            }
            single_stage(&root, "prepare", &config, config.seed, records)
        }
        Command::Train {
            dataset,
            name,
            quiet,
        } => {
            let name = name.unwrap_or_else(|| stem(&dataset));
            let schema = resolve_schema(&config, &dataset)?;
            let record = train_stage(
                &config,
                &dataset,
                &schema,
                &name,
                &root,
                &mut progress(quiet),
            )?;
            single_stage(
                &root,
                &format!("train-{name}"),
                &config,
                config.seed,
                vec![record],
            )
        }
        Command::Generate {
            checkpoint,
            n,
            mode,
            output,
            name,
        } => {
            let out = output.unwrap_or_else(|| layout::synthetic(&root, &name));
            let schema = match &config.schema {
                Some(p) => Some(popsynth::schema::CategoricalSchema::load(p)?),
                None => None,
            };
            let record = generate_stage(
                &checkpoint,
                schema.as_ref(),
                n,
                mode,
                config.seed,
                out,
                &root,
            )?;
            single_stage(
                &root,
                &format!("generate-{name}"),
                &config,
                config.seed,
                vec![record],
            )
        }
        Command::Evaluate {
            ground_truth,
            train,
            synthetic,
            name,
        } => {
            let schema = resolve_schema(&config, &ground_truth)?;
            let (record, report) = evaluate_stage(
                &config,
                &ground_truth,
                &train,
                &synthetic,
                &schema,
                &name,
                &root,
            )?;
            println!("{}", report.to_json());
            single_stage(
                &root,
                &format!("evaluate-{name}"),
                &config,
                config.seed,
                vec![record],
            )
        }
        Command::RunExperiment { quiet } => {
            let summary = run_experiment(&config, &root, &mut progress(quiet))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
