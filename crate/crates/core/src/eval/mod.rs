//! Quality metrics comparing a synthetic population with the ground truth.
//!
//! Metrics that have no meaning for their inputs (an empty support, a zero
//! denominator) return [`EvalError::Undefined`]. Reports keep them as a null
//! value with the reason instead of dropping them.

mod joint;
mod marginal;
mod report;
mod taxonomy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use joint::{
    export_forty_five_degree, joint_table, precision_recall, r_squared, srmse,
    write_forty_five_degree, Combination, JointTable,
};
pub use marginal::{category_adherence, category_coverage, marginal, tv_complement, Marginal};
pub use report::{
    evaluate, AttributeRecord, EvaluationPlan, JointRecord, MetricsReport, REPORT_SCHEMA,
};
pub use taxonomy::{
    classify_taxonomy, sampling_curve, zero_scores, CurvePoint, SampleSource, Taxonomy, ZeroScores,
};

/// Upstream errors are kept as messages so evaluation results stay comparable.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: String,
    },
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("generation failed: {0}")]
    Generation(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

impl From<crate::wgan::WganError> for EvalError {
    fn from(e: crate::wgan::WganError) -> Self {
        EvalError::Generation(e.to_string())
    }
}

/// A metric value, or null with the reason it is undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl MetricValue {
    pub fn defined(value: f64) -> Self {
        Self {
            value: Some(value),
            reason: None,
        }
    }
}

impl From<Result<f64, EvalError>> for MetricValue {
    fn from(r: Result<f64, EvalError>) -> Self {
        match r {
            Ok(v) => Self::defined(v),
            Err(e) => Self {
                value: None,
                reason: Some(e.to_string()),
            },
        }
    }
}
