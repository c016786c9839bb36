//! The batch experiment: toy population, training sets, models, synthetic
//! populations and their evaluation against the ground truth.
//!
//! Every stage draws its seed from the global one through the stage name, so
//! adding a corruption spec leaves the other stages untouched. Outputs are
//! never overwritten; reruns need a fresh output directory.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;

use thiserror::Error;

pub use config::PipelineConfig;
pub use manifest::{file_digest, Manifest, StageRecord};
pub use stages::{
    evaluate_stage, generate_stage, layout, prepare, resolve_schema, run_experiment, toy_gen,
    train_stage, AttributeComparison, JointComparison, ModelComparison, Summary, BENCHMARK,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("refusing to overwrite {0}")]
    Exists(PathBuf),
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        source: Box<PipelineError>,
    },
    #[error(transparent)]
    Data(#[from] crate::DataError),
    #[error(transparent)]
    Training(#[from] crate::wgan::WganError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// 2 for bad arguments or configuration, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
