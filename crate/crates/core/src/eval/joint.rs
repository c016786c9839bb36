//! Sparse k-joint distributions and the scores comparing them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use super::EvalError;
use crate::dataset::Dataset;

/// Category indices of the selected attributes, in subset order.
pub type Combination = Vec<u32>;

/// Joint distribution over a subset of attributes. Cells not stored have
/// probability zero.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    attributes: Vec<String>,
    labels: Vec<Vec<String>>,
    probabilities: BTreeMap<Combination, f64>,
    n_cells: u64,
    n_rows: usize,
}

impl JointTable {
    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn k(&self) -> usize {
        self.attributes.len()
    }

    /// Number of possible cells, the product of the category counts.
    pub fn n_cells(&self) -> u64 {
        self.n_cells
    }

    /// Rows that contributed, after excluding rows with missing values.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn probabilities(&self) -> &BTreeMap<Combination, f64> {
        &self.probabilities
    }

    pub fn probability(&self, key: &[u32]) -> f64 {
        self.probabilities.get(key).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> BTreeSet<Combination> {
        self.probabilities.keys().cloned().collect()
    }

    /// Category labels joined with `|`.
    pub fn label(&self, key: &[u32]) -> String {
        key.iter()
            .zip(&self.labels)
            .map(|(&c, labels)| labels[c as usize].as_str())
            .collect::<Vec<_>>()
            .join("|")
    }

    fn check_comparable(&self, other: &JointTable) -> Result<(), EvalError> {
        if self.attributes != other.attributes || self.n_cells != other.n_cells {
            return Err(EvalError::Mismatch(format!(
                "joint over {:?} compared with joint over {:?}",
                self.attributes, other.attributes
            )));
        }
        Ok(())
    }
}

/// Resolves attribute names to column indices.
pub(crate) fn resolve(
    d: &Dataset,
    attributes: &[impl AsRef<str>],
) -> Result<Vec<usize>, EvalError> {
    if attributes.is_empty() {
        return Err(EvalError::Empty("attribute subset".into()));
    }
    let mut seen = BTreeSet::new();
    attributes
        .iter()
        .map(|name| {
            let name = name.as_ref();
            let a = d
                .schema()
                .index_of(name)
                .ok_or_else(|| EvalError::UnknownAttribute(name.to_string()))?;
            if !seen.insert(a) {
                return Err(EvalError::Mismatch(format!(
                    "attribute {name:?} listed twice"
                )));
            }
            Ok(a)
        })
        .collect()
}

/// Projections of the complete rows onto `columns`, with their counts.
pub(crate) fn combination_counts(d: &Dataset, columns: &[usize]) -> BTreeMap<Combination, usize> {
    let mut counts = BTreeMap::new();
    'rows: for row in d.rows() {
        let mut key = Vec::with_capacity(columns.len());
        for &a in columns {
            match row[a] {
                Some(c) => key.push(c),
                None => continue 'rows,
            }
        }
        *counts.entry(key).or_insert(0usize) += 1;
    }
    counts
}

pub fn joint_table(d: &Dataset, attributes: &[impl AsRef<str>]) -> Result<JointTable, EvalError> {
    let columns = resolve(d, attributes)?;
    let mut n_cells: u64 = 1;
    for &a in &columns {
        n_cells = n_cells
            .checked_mul(d.schema().attribute(a).len() as u64)
            .ok_or_else(|| EvalError::Mismatch("joint has more than 2^64 cells".into()))?;
    }
    let counts = combination_counts(d, &columns);
    let n_rows: usize = counts.values().sum();
    if n_rows == 0 {
        return Err(EvalError::Empty(
            "every row has a missing value in the selected attributes".into(),
        ));
    }
    Ok(JointTable {
        attributes: columns
            .iter()
            .map(|&a| d.schema().attribute(a).name.clone())
            .collect(),
        labels: columns
            .iter()
            .map(|&a| d.schema().attribute(a).categories.clone())
            .collect(),
        probabilities: counts
            .into_iter()
            .map(|(k, n)| (k, n as f64 / n_rows as f64))
            .collect(),
        n_cells,
        n_rows,
    })
}

/// Sum of squared cell differences; cells missing from both tables add 0.
fn squared_error(gt: &JointTable, syn: &JointTable) -> f64 {
    let keys: BTreeSet<&Combination> = gt
        .probabilities
        .keys()
        .chain(syn.probabilities.keys())
        .collect();
    keys.into_iter()
        .map(|k| (gt.probability(k) - syn.probability(k)).powi(2))
        .sum()
}

/// Root mean squared cell error divided by the mean cell probability `1/N_b`.
pub fn srmse(gt: &JointTable, syn: &JointTable) -> Result<f64, EvalError> {
    gt.check_comparable(syn)?;
    let n = gt.n_cells as f64;
    Ok((squared_error(gt, syn) / n).sqrt() * n)
}

/// `1 - SSE / SST` over all cells, against the uniform mean `1/N_b`.
pub fn r_squared(gt: &JointTable, syn: &JointTable) -> Result<f64, EvalError> {
    gt.check_comparable(syn)?;
    let mean = 1.0 / gt.n_cells as f64;
    let empty_cells = gt.n_cells - gt.probabilities.len() as u64;
    let total: f64 = gt
        .probabilities
        .values()
        .map(|p| (p - mean).powi(2))
        .sum::<f64>()
        + empty_cells as f64 * mean * mean;
    if total == 0.0 {
        return Err(EvalError::Undefined {
            metric: "r_squared",
            reason: "ground truth is uniform over every cell".into(),
        });
    }
    Ok(1.0 - squared_error(gt, syn) / total)
}

/// Share of generated combinations found in the ground truth, and share of
/// ground-truth combinations that were generated.
pub fn precision_recall(gt: &JointTable, gen: &JointTable) -> Result<(f64, f64), EvalError> {
    gt.check_comparable(gen)?;
    if gt.probabilities.is_empty() || gen.probabilities.is_empty() {
        return Err(EvalError::Undefined {
            metric: "precision_recall",
            reason: "empty combination set".into(),
        });
    }
    let shared = gen
        .probabilities
        .keys()
        .filter(|k| gt.probabilities.contains_key(*k))
        .count() as f64;
    Ok((
        shared / gen.probabilities.len() as f64,
        shared / gt.probabilities.len() as f64,
    ))
}

/// Writes `combination,gt_prob,syn_prob` rows over the union of supports.
pub fn write_forty_five_degree(
    gt: &JointTable,
    syn: &JointTable,
    writer: impl Write,
) -> Result<(), EvalError> {
    gt.check_comparable(syn)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["combination", "gt_prob", "syn_prob"])
        .map_err(std::io::Error::from)?;
    let keys: BTreeSet<&Combination> = gt
        .probabilities
        .keys()
        .chain(syn.probabilities.keys())
        .collect();
    for k in keys {
        w.write_record([
            gt.label(k),
            gt.probability(k).to_string(),
            syn.probability(k).to_string(),
        ])
        .map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_forty_five_degree(
    gt: &JointTable,
    syn: &JointTable,
    path: &Path,
) -> Result<(), EvalError> {
    let file = std::fs::File::create(path)?;
    write_forty_five_degree(gt, syn, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Attribute, CategoricalSchema};

    fn schema() -> CategoricalSchema {
        CategoricalSchema::new(vec![
            Attribute::new("x", ["a", "b"]),
            Attribute::new("y", ["p", "q", "r"]),
        ])
        .unwrap()
    }

    fn data(rows: &[[Option<u32>; 2]]) -> Dataset {
        Dataset::new(schema(), rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_attribute_joint_is_the_marginal() {
        let d = data(&[
            [Some(0), Some(1)],
            [Some(1), None],
            [Some(1), Some(2)],
            [None, Some(0)],
        ]);
        let t = joint_table(&d, &["x"]).unwrap();
        assert_eq!(t.n_cells(), 2);
        assert_eq!(t.probability(&[1]), 2.0 / 3.0);
        let t = joint_table(&d, &["x", "y"]).unwrap();
        assert_eq!(t.n_cells(), 6);
        assert_eq!(t.n_rows(), 2);
        assert!(joint_table(&data(&[[None, Some(1)]]), &["x"]).is_err());
        assert!(joint_table(&d, &["x", "x"]).is_err());
    }

    #[test]
    fn srmse_hand_example() {
        let s = CategoricalSchema::new(vec![Attribute::new("x", ["a", "b"])]).unwrap();
        let gt = joint_table(
            &Dataset::new(s.clone(), vec![vec![Some(0)]]).unwrap(),
            &["x"],
        )
        .unwrap();
        let syn = joint_table(&Dataset::new(s, vec![vec![Some(1)]]).unwrap(), &["x"]).unwrap();
        assert!((srmse(&gt, &syn).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(srmse(&gt, &gt).unwrap(), 0.0);
        assert_eq!(r_squared(&gt, &gt).unwrap(), 1.0);
        assert_eq!(precision_recall(&gt, &syn).unwrap(), (0.0, 0.0));
        assert_eq!(precision_recall(&gt, &gt).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn uniform_synthetic_gives_zero_r_squared() {
        let gt = joint_table(
            &data(&[[Some(0), Some(0)], [Some(0), Some(0)], [Some(1), Some(2)]]),
            &["x", "y"],
        )
        .unwrap();
        let all: Vec<[Option<u32>; 2]> = (0..2)
            .flat_map(|a| (0..3).map(move |b| [Some(a), Some(b)]))
            .collect();
        let uniform = joint_table(&data(&all), &["x", "y"]).unwrap();
        assert!(r_squared(&gt, &uniform).unwrap().abs() < 1e-12);
        assert!(matches!(
            r_squared(&uniform, &gt),
            Err(EvalError::Undefined { .. })
        ));
    }

    #[test]
    fn mismatched_subsets_are_rejected() {
        let d = data(&[[Some(0), Some(1)]]);
        let a = joint_table(&d, &["x"]).unwrap();
        let b = joint_table(&d, &["y"]).unwrap();
        assert!(srmse(&a, &b).is_err());
        assert!(precision_recall(&a, &b).is_err());
    }

    #[test]
    fn forty_five_degree_export() {
        let gt = joint_table(
            &data(&[[Some(0), Some(1)], [Some(1), Some(2)]]),
            &["x", "y"],
        )
        .unwrap();
        let syn = joint_table(
            &data(&[[Some(0), Some(1)], [Some(0), Some(0)]]),
            &["x", "y"],
        )
        .unwrap();
        let mut out = Vec::new();
        write_forty_five_degree(&gt, &syn, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "combination,gt_prob,syn_prob");
        assert_eq!(lines.len(), 1 + 3);
        assert!(lines.contains(&"a|q,0.5,0.5"));

        let mut out = Vec::new();
        write_forty_five_degree(&gt, &gt, &mut out).unwrap();
        for line in String::from_utf8(out).unwrap().lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[1], cols[2]);
        }
    }
}
