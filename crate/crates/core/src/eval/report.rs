//! The metrics report: attribute table, k-joint table and sampling curve.

use serde::{Deserialize, Serialize};

use super::joint::{joint_table, precision_recall, r_squared, srmse};
use super::marginal::{category_adherence, category_coverage, tv_complement};
use super::taxonomy::{sampling_curve, CurvePoint, SampleSource};
use super::{EvalError, MetricValue};
use crate::dataset::Dataset;

/// JSON Schema every serialized [`MetricsReport`] satisfies.
pub const REPORT_SCHEMA: &str = include_str!("report.schema.json");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationPlan {
    /// Attribute subsets for the k-joint table.
    pub joint_subsets: Vec<Vec<String>>,
    /// Attributes defining the combinations of the taxonomy. Empty means all.
    pub taxonomy_attributes: Vec<String>,
    /// Strictly ascending sample sizes. Empty means one level at the full
    /// synthetic size.
    pub sampling_levels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeRecord {
    pub attribute: String,
    pub category_coverage: MetricValue,
    pub tv_complement: MetricValue,
    pub category_adherence: MetricValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub attributes: Vec<String>,
    pub k: usize,
    /// Possible cells.
    pub n_b: u64,
    pub gt_combinations: usize,
    pub syn_combinations: usize,
    pub srmse: MetricValue,
    pub r_squared: MetricValue,
    pub precision: MetricValue,
    pub recall: MetricValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n_rows_gt: usize,
    pub n_rows_train: usize,
    pub n_rows_syn: usize,
    pub attributes: Vec<AttributeRecord>,
    pub joints: Vec<JointRecord>,
    pub taxonomy_attributes: Vec<String>,
    pub sampling_curve: Vec<CurvePoint>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn joint_record(
    gt: &Dataset,
    syn: &Dataset,
    attributes: &[String],
) -> Result<JointRecord, EvalError> {
    let g = joint_table(gt, attributes)?;
    let s = joint_table(syn, attributes);
    let (srmse_v, r2, pr, syn_combinations) = match &s {
        Ok(s) => (
            srmse(&g, s),
            r_squared(&g, s),
            precision_recall(&g, s),
            s.probabilities().len(),
        ),
        Err(e) => (Err(e.clone()), Err(e.clone()), Err(e.clone()), 0),
    };
    Ok(JointRecord {
        attributes: attributes.to_vec(),
        k: attributes.len(),
        n_b: g.n_cells(),
        gt_combinations: g.probabilities().len(),
        syn_combinations,
        srmse: srmse_v.into(),
        r_squared: r2.into(),
        precision: pr.clone().map(|p| p.0).into(),
        recall: pr.map(|p| p.1).into(),
    })
}

/// Scores `syn` against `gt` under `plan`. The sampling curve draws from
/// `curve_source`, or from `syn` without replacement when none is given.
pub fn evaluate(
    gt: &Dataset,
    train: &Dataset,
    syn: &Dataset,
    curve_source: Option<SampleSource<'_>>,
    plan: &EvaluationPlan,
    seed: u64,
) -> Result<MetricsReport, EvalError> {
    if gt.schema() != train.schema() || gt.schema() != syn.schema() {
        return Err(EvalError::Mismatch("datasets use different schemas".into()));
    }
    let attributes = gt
        .schema()
        .attributes()
        .iter()
        .map(|a| AttributeRecord {
            attribute: a.name.clone(),
            category_coverage: category_coverage(gt, syn, &a.name).into(),
            tv_complement: tv_complement(gt, syn, &a.name).into(),
            category_adherence: category_adherence(gt, syn, &a.name).into(),
        })
        .collect();
    let joints = plan
        .joint_subsets
        .iter()
        .map(|subset| joint_record(gt, syn, subset))
        .collect::<Result<Vec<_>, _>>()?;
    let taxonomy_attributes: Vec<String> = if plan.taxonomy_attributes.is_empty() {
        gt.schema()
            .attributes()
            .iter()
            .map(|a| a.name.clone())
            .collect()
    } else {
        plan.taxonomy_attributes.clone()
    };
    let levels = if plan.sampling_levels.is_empty() {
        vec![syn.n_rows()]
    } else {
        plan.sampling_levels.clone()
    };
    let source = curve_source.unwrap_or(SampleSource::Pool(syn));
    let curve = sampling_curve(gt, train, source, &taxonomy_attributes, &levels, seed)?;
    Ok(MetricsReport {
        n_rows_gt: gt.n_rows(),
        n_rows_train: train.n_rows(),
        n_rows_syn: syn.n_rows(),
        attributes,
        joints,
        taxonomy_attributes,
        sampling_curve: curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Attribute, CategoricalSchema};

    fn data() -> Dataset {
        let schema = CategoricalSchema::new(vec![
            Attribute::new("x", ["a", "b", "c"]),
            Attribute::new("y", ["p", "q"]),
            Attribute::new("z", ["u", "v"]),
        ])
        .unwrap();
        let rows = (0..30u32)
            .map(|i| vec![Some(i % 3), Some(i % 2), Some((i / 7) % 2)])
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    fn plan() -> EvaluationPlan {
        EvaluationPlan {
            joint_subsets: vec![
                vec!["x".into(), "y".into()],
                vec!["x".into(), "y".into(), "z".into()],
            ],
            taxonomy_attributes: vec![],
            sampling_levels: vec![10, 30],
        }
    }

    #[test]
    fn identity_report() {
        let d = data();
        let r = evaluate(&d, &d, &d, None, &plan(), 0).unwrap();
        for a in &r.attributes {
            assert_eq!(a.category_coverage.value, Some(1.0));
            assert_eq!(a.tv_complement.value, Some(1.0));
            assert_eq!(a.category_adherence.value, Some(1.0));
        }
        for j in &r.joints {
            assert_eq!(j.srmse.value, Some(0.0));
            assert_eq!(j.gt_combinations, j.syn_combinations);
        }
        assert_eq!(r.joints[1].n_b, 12);
        // Identical training and ground truth leave no sampling zeros to find.
        assert_eq!(r.sampling_curve[1].score_sz.value, None);
        assert!(r.sampling_curve[1].score_sz.reason.is_some());
    }

    #[test]
    fn report_validates_against_schema() {
        let d = data();
        let json: serde_json::Value =
            serde_json::from_str(&evaluate(&d, &d, &d, None, &plan(), 0).unwrap().to_json())
                .unwrap();
        let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
        let validator = jsonschema::JSONSchema::compile(&schema).unwrap();
        assert!(validator.is_valid(&json));
        let mut broken = json.clone();
        broken["joints"][0]["n_b"] = serde_json::json!("twelve");
        assert!(!validator.is_valid(&broken));
    }

    #[test]
    fn bad_subsets_fail() {
        let d = data();
        let mut p = plan();
        p.joint_subsets.push(vec!["w".into()]);
        assert!(matches!(
            evaluate(&d, &d, &d, None, &p, 0),
            Err(EvalError::UnknownAttribute(_))
        ));
    }
}
