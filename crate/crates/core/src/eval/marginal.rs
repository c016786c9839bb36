//! Attribute-level scores: coverage, total-variation complement, adherence.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::Dataset;

/// Category frequencies of one attribute, missing cells excluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub attribute: String,
    /// Indexed by category.
    pub probabilities: Vec<f64>,
}

fn counts(d: &Dataset, attribute: &str) -> Result<(usize, Vec<usize>), EvalError> {
    let a = d
        .schema()
        .index_of(attribute)
        .ok_or_else(|| EvalError::UnknownAttribute(attribute.to_string()))?;
    let mut counts = vec![0usize; d.schema().attribute(a).len()];
    for c in d.column(a).flatten() {
        counts[c as usize] += 1;
    }
    Ok((a, counts))
}

fn observed(counts: &[usize]) -> BTreeSet<usize> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(c, _)| c)
        .collect()
}

fn check_shared(gt: &Dataset, syn: &Dataset) -> Result<(), EvalError> {
    if gt.schema() != syn.schema() {
        return Err(EvalError::Mismatch("datasets use different schemas".into()));
    }
    Ok(())
}

pub fn marginal(d: &Dataset, attribute: &str) -> Result<Marginal, EvalError> {
    let (_, counts) = counts(d, attribute)?;
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(EvalError::Empty(format!(
            "no observed values of {attribute:?}"
        )));
    }
    Ok(Marginal {
        attribute: attribute.to_string(),
        probabilities: counts.iter().map(|&n| n as f64 / total as f64).collect(),
    })
}

/// Share of the ground-truth categories that also occur in `syn`.
pub fn category_coverage(gt: &Dataset, syn: &Dataset, attribute: &str) -> Result<f64, EvalError> {
    check_shared(gt, syn)?;
    let real = observed(&counts(gt, attribute)?.1);
    if real.is_empty() {
        return Err(EvalError::Undefined {
            metric: "category_coverage",
            reason: format!("{attribute:?} has no observed ground-truth values"),
        });
    }
    let synthetic = observed(&counts(syn, attribute)?.1);
    Ok(real.intersection(&synthetic).count() as f64 / real.len() as f64)
}

/// `1 - TVD` between the two marginals.
pub fn tv_complement(gt: &Dataset, syn: &Dataset, attribute: &str) -> Result<f64, EvalError> {
    check_shared(gt, syn)?;
    let r = marginal(gt, attribute)?;
    let s = marginal(syn, attribute)?;
    let tvd: f64 = r
        .probabilities
        .iter()
        .zip(&s.probabilities)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0;
    Ok((1.0 - tvd).clamp(0.0, 1.0))
}

/// Share of synthetic cells whose category occurs in the ground truth.
pub fn category_adherence(gt: &Dataset, syn: &Dataset, attribute: &str) -> Result<f64, EvalError> {
    check_shared(gt, syn)?;
    let real = observed(&counts(gt, attribute)?.1);
    let (_, syn_counts) = counts(syn, attribute)?;
    let total: usize = syn_counts.iter().sum();
    if total == 0 {
        return Err(EvalError::Undefined {
            metric: "category_adherence",
            reason: format!("no synthetic values of {attribute:?}"),
        });
    }
    let inside: usize = real.iter().map(|&c| syn_counts[c]).sum();
    Ok(inside as f64 / total as f64)
}
