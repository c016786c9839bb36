use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::PipelineConfig;
use super::manifest::{display_path, fresh, Manifest, StageRecord};
use super::PipelineError;
use crate::corrupt::inject_missingness;
use crate::dataset::Dataset;
use crate::encoding::DecodeMode;
use crate::eval::{evaluate, export_forty_five_degree, joint_table, MetricsReport};
use crate::schema::CategoricalSchema;
use crate::seed::derive_seed;
use crate::stats::{compute_stats, DatasetStats};
use crate::toy::generate_toy_population;
use crate::wgan::{
    generate_population, load_checkpoint, save_checkpoint, train_observed, EpochRecord,
};

/// Name of the model trained on complete data.
pub const BENCHMARK: &str = "nomis";

/// File locations inside an output directory.
pub mod layout {
    use std::path::{Path, PathBuf};

    pub fn ground_truth(root: &Path) -> PathBuf {
        root.join("ground_truth.csv")
    }

    pub fn schema(root: &Path) -> PathBuf {
        root.join("schema.json")
    }

    pub fn dataset(root: &Path, name: &str) -> PathBuf {
        root.join("data").join(format!("{name}.csv"))
    }

    pub fn checkpoint(root: &Path, name: &str) -> PathBuf {
        root.join("models").join(name).join("checkpoint.bin")
    }

    pub fn training_log(root: &Path, name: &str) -> PathBuf {
        root.join("models").join(name).join("log.jsonl")
    }

    pub fn synthetic(root: &Path, name: &str) -> PathBuf {
        root.join("synthetic").join(format!("{name}.csv"))
    }

    pub fn report(root: &Path, name: &str) -> PathBuf {
        root.join("reports").join(format!("{name}.json"))
    }

    pub fn forty_five_degree(root: &Path, name: &str, attributes: &[String]) -> PathBuf {
        root.join("reports")
            .join(name)
            .join(format!("45deg-{}.csv", attributes.join("-")))
    }

    pub fn summary(root: &Path) -> PathBuf {
        root.join("summary.json")
    }

    pub fn manifest(root: &Path, command: &str) -> PathBuf {
        if command == "run-experiment" {
            root.join("manifest.json")
        } else {
            root.join(format!("manifest.{command}.json"))
        }
    }
}

fn stats_path(csv: &Path) -> PathBuf {
    csv.with_extension("stats.json")
}

fn write_dataset(
    d: &Dataset,
    path: PathBuf,
    root: &Path,
    record: &mut StageRecord,
) -> Result<DatasetStats, PipelineError> {
    let path = fresh(path)?;
    d.save_csv(&path)?;
    record.output(root, &path)?;
    let stats = compute_stats(d);
    let sp = fresh(stats_path(&path))?;
    std::fs::write(&sp, stats.to_json() + "\n")?;
    record.output(root, &sp)?;
    Ok(stats)
}

/// Schema from the config, else `schema.json` beside the dataset or one
/// directory up, else inferred from the CSV itself.
pub fn resolve_schema(
    config: &PipelineConfig,
    dataset: &Path,
) -> Result<CategoricalSchema, PipelineError> {
    if let Some(p) = &config.schema {
        return Ok(CategoricalSchema::load(p)?);
    }
    let dir = dataset.parent().unwrap_or(Path::new("."));
    for candidate in [dir.join("schema.json"), dir.join("..").join("schema.json")] {
        if candidate.is_file() {
            return Ok(CategoricalSchema::load(&candidate)?);
        }
    }
    Ok(Dataset::load_csv(dataset, None)?.schema().clone())
}

fn load(path: &Path, schema: &CategoricalSchema) -> Result<Dataset, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::Input {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        });
    }
    Ok(Dataset::load_csv(path, Some(schema))?)
}

/// Writes the toy ground truth, its schema and statistics.
pub fn toy_gen(
    config: &PipelineConfig,
    root: &Path,
) -> Result<(StageRecord, DatasetStats), PipelineError> {
    let spec = config.toy_spec();
    let mut record = StageRecord::new("toy-gen", spec.seed);
    let gt = generate_toy_population(&spec).map_err(|e| PipelineError::Config(e.to_string()))?;
    let sp = fresh(layout::schema(root))?;
    gt.schema().save(&sp)?;
    record.output(root, &sp)?;
    let stats = write_dataset(&gt, layout::ground_truth(root), root, &mut record)?;
    Ok((record, stats))
}

/// Writes the benchmark training set and one corrupted copy per spec.
pub fn prepare(
    config: &PipelineConfig,
    ground_truth: &Path,
    schema: &CategoricalSchema,
    root: &Path,
) -> Result<Vec<StageRecord>, PipelineError> {
    config.validate(schema)?;
    let gt = load(ground_truth, schema)?;
    let sample_seed = derive_seed(config.seed, "sample");
    let mut record = StageRecord::new(format!("prepare-{BENCHMARK}"), sample_seed);
    record.input(root, ground_truth)?;
    let nomis = gt
        .sample_fraction(config.sample_fraction, sample_seed)?
        .remove_combinations(
            config.removed_combinations,
            derive_seed(config.seed, "remove-combinations"),
        )?;
    let nomis_path = layout::dataset(root, BENCHMARK);
    write_dataset(&nomis, nomis_path.clone(), root, &mut record)?;
    let mut records = vec![record];
    for spec in config.corruption_specs()? {
        let name = spec.label();
        let mut record = StageRecord::new(format!("prepare-{name}"), spec.seed);
        record.input(root, &nomis_path)?;
        let corrupted = inject_missingness(&nomis, &spec)?;
        write_dataset(&corrupted, layout::dataset(root, &name), root, &mut record)?;
        records.push(record);
    }
    Ok(records)
}

/// Trains one model and writes its checkpoint and per-epoch log.
pub fn train_stage(
    config: &PipelineConfig,
    dataset: &Path,
    schema: &CategoricalSchema,
    name: &str,
    root: &Path,
    observer: &mut dyn FnMut(&str, &EpochRecord),
) -> Result<StageRecord, PipelineError> {
    let mut training = config.training.clone();
    training.seed = derive_seed(config.seed, &format!("train-{name}"));
    let mut record = StageRecord::new(format!("train-{name}"), training.seed);
    record.input(root, dataset)?;
    let ck = fresh(layout::checkpoint(root, name))?;
    let log_path = fresh(layout::training_log(root, name))?;
    let data = load(dataset, schema)?;
    let trained = train_observed(&data, &training, |r, _, _| observer(name, r))?;
    save_checkpoint(&trained.generator, &trained.critic, &training, &ck)?;
    std::fs::write(&log_path, trained.log.to_json_lines())?;
    record.output(root, &ck)?;
    record.output(root, &log_path)?;
    Ok(record)
}

/// Samples `n` complete rows from a checkpoint into `out`.
pub fn generate_stage(
    checkpoint: &Path,
    schema: Option<&CategoricalSchema>,
    n: usize,
    mode: DecodeMode,
    seed: u64,
    out: PathBuf,
    root: &Path,
) -> Result<StageRecord, PipelineError> {
    let mut record = StageRecord::new(format!("generate-{}", display_path(root, &out)), seed);
    record.input(root, checkpoint)?;
    let out = fresh(out)?;
    let ck = load_checkpoint(checkpoint)?;
    if let Some(s) = schema {
        ck.require_schema(s)?;
    }
    let syn = generate_population(&ck.generator, n, mode, seed)?;
    syn.save_csv(&out)?;
    record.output(root, &out)?;
    Ok(record)
}

/// Scores a synthetic population and writes the report and 45-degree CSVs.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_stage(
    config: &PipelineConfig,
    ground_truth: &Path,
    train: &Path,
    synthetic: &Path,
    schema: &CategoricalSchema,
    name: &str,
    root: &Path,
) -> Result<(StageRecord, MetricsReport), PipelineError> {
    config.validate(schema)?;
    let seed = derive_seed(config.seed, &format!("evaluate-{name}"));
    let mut record = StageRecord::new(format!("evaluate-{name}"), seed);
    for p in [ground_truth, train, synthetic] {
        record.input(root, p)?;
    }
    let report_path = fresh(layout::report(root, name))?;
    let gt = load(ground_truth, schema)?;
    let tr = load(train, schema)?;
    let syn = load(synthetic, schema)?;
    let plan = config.evaluation_plan(schema);
    let report = evaluate(&gt, &tr, &syn, None, &plan, seed)?;
    std::fs::write(&report_path, report.to_json() + "\n")?;
    record.output(root, &report_path)?;
    for subset in &plan.joint_subsets {
        let (Ok(g), Ok(s)) = (joint_table(&gt, subset), joint_table(&syn, subset)) else {
            continue;
        };
        let path = fresh(layout::forty_five_degree(root, name, subset))?;
        export_forty_five_degree(&g, &s, &path)?;
        record.output(root, &path)?;
    }
    Ok((record, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeComparison {
    pub attribute: String,
    pub metric: String,
    pub model: Option<f64>,
    pub benchmark: Option<f64>,
    pub abs_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointComparison {
    pub attributes: Vec<String>,
    pub srmse_model: Option<f64>,
    pub srmse_benchmark: Option<f64>,
    pub srmse_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelComparison {
    pub model: String,
    pub attributes: Vec<AttributeComparison>,
    pub joints: Vec<JointComparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub benchmark: String,
    pub models: Vec<ModelComparison>,
    #[serde(skip)]
    pub reports: Vec<(String, MetricsReport)>,
}

fn compare(name: &str, model: &MetricsReport, bench: &MetricsReport) -> ModelComparison {
    let mut attributes = Vec::new();
    for (m, b) in model.attributes.iter().zip(&bench.attributes) {
        for (metric, mv, bv) in [
            (
                "category_coverage",
                &m.category_coverage,
                &b.category_coverage,
            ),
            ("tv_complement", &m.tv_complement, &b.tv_complement),
            (
                "category_adherence",
                &m.category_adherence,
                &b.category_adherence,
            ),
        ] {
            attributes.push(AttributeComparison {
                attribute: m.attribute.clone(),
                metric: metric.into(),
                model: mv.value,
                benchmark: bv.value,
                abs_diff: mv.value.zip(bv.value).map(|(x, y)| (x - y).abs()),
            });
        }
    }
    let joints = model
        .joints
        .iter()
        .zip(&bench.joints)
        .map(|(m, b)| JointComparison {
            attributes: m.attributes.clone(),
            srmse_model: m.srmse.value,
            srmse_benchmark: b.srmse.value,
            srmse_ratio: m
                .srmse
                .value
                .zip(b.srmse.value)
                .filter(|&(_, y)| y > 0.0)
                .map(|(x, y)| x / y),
        })
        .collect();
    ModelComparison {
        model: name.into(),
        attributes,
        joints,
    }
}

fn staged<T>(
    manifest: &mut Manifest,
    manifest_path: &Path,
    stage: &str,
    result: Result<T, PipelineError>,
) -> Result<T, PipelineError> {
    match result {
        Ok(v) => Ok(v),
        Err(e) => {
            let e = PipelineError::Stage {
                stage: stage.into(),
                source: Box::new(e),
            };
            manifest.failure = Some(e.to_string());
            manifest.write(manifest_path)?;
            Err(e)
        }
    }
}

/// Every stage in order: ground truth, training sets, one model per set,
/// one synthetic population per model, evaluation and the comparison with
/// the benchmark. Stops at the first failure, keeping the outputs and a
/// manifest of the completed stages.
pub fn run_experiment(
    config: &PipelineConfig,
    root: &Path,
    observer: &mut dyn FnMut(&str, &EpochRecord),
) -> Result<Summary, PipelineError> {
    if root.exists() && std::fs::read_dir(root)?.next().is_some() {
        return Err(PipelineError::Exists(root.to_path_buf()));
    }
    std::fs::create_dir_all(root)?;
    let manifest_path = layout::manifest(root, "run-experiment");
    let mut manifest = Manifest::new("run-experiment", config.digest(), config.seed);
    manifest.write(&manifest_path)?;

    let (gt_path, schema) = match &config.ground_truth {
        Some(p) => {
            let schema = staged(
                &mut manifest,
                &manifest_path,
                "load-ground-truth",
                resolve_schema(config, p),
            )?;
            (p.clone(), schema)
        }
        None => {
            let (record, _) = staged(
                &mut manifest,
                &manifest_path,
                "toy-gen",
                toy_gen(config, root),
            )?;
            manifest.stages.push(record);
            manifest.write(&manifest_path)?;
            let schema = CategoricalSchema::load(&layout::schema(root))?;
            (layout::ground_truth(root), schema)
        }
    };
    staged(
        &mut manifest,
        &manifest_path,
        "validate",
        config.validate(&schema),
    )?;

    let records = staged(
        &mut manifest,
        &manifest_path,
        "prepare",
        prepare(config, &gt_path, &schema, root),
    )?;
    manifest.stages.extend(records);
    manifest.write(&manifest_path)?;

    let mut names = vec![BENCHMARK.to_string()];
    names.extend(config.corruption_specs()?.iter().map(|s| s.label()));
    let gt_rows = Dataset::load_csv(&gt_path, Some(&schema))?.n_rows();
    let n_syn = config.synthetic_rows.unwrap_or(gt_rows);

    let mut reports = Vec::new();
    for name in &names {
        let data = layout::dataset(root, name);
        let stage = format!("train-{name}");
        let record = staged(
            &mut manifest,
            &manifest_path,
            &stage,
            train_stage(config, &data, &schema, name, root, observer),
        )?;
        manifest.stages.push(record);
        manifest.write(&manifest_path)?;

        let stage = format!("generate-{name}");
        let seed = derive_seed(config.seed, &stage);
        let record = staged(
            &mut manifest,
            &manifest_path,
            &stage,
            generate_stage(
                &layout::checkpoint(root, name),
                Some(&schema),
                n_syn,
                config.decode_mode,
                seed,
                layout::synthetic(root, name),
                root,
            ),
        )?;
        manifest.stages.push(record);
        manifest.write(&manifest_path)?;

        let stage = format!("evaluate-{name}");
        let (record, report) = staged(
            &mut manifest,
            &manifest_path,
            &stage,
            evaluate_stage(
                config,
                &gt_path,
                &data,
                &layout::synthetic(root, name),
                &schema,
                name,
                root,
            ),
        )?;
        manifest.stages.push(record);
        manifest.write(&manifest_path)?;
        reports.push((name.clone(), report));
    }

    let bench = &reports[0].1;
    let summary = Summary {
        benchmark: BENCHMARK.into(),
        models: reports[1..]
            .iter()
            .map(|(name, r)| compare(name, r, bench))
            .collect(),
        reports: reports.clone(),
    };
    let sp = fresh(layout::summary(root))?;
    std::fs::write(
        &sp,
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    let mut record = StageRecord::new("summary", config.seed);
    record.output(root, &sp)?;
    manifest.stages.push(record);
    manifest.complete = true;
    manifest.write(&manifest_path)?;
    Ok(summary)
}
