//! Dataset summary statistics in the layout of a dataset-overview table.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeMissing {
    pub attribute: String,
    pub missing_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_rows: usize,
    pub n_attributes: usize,
    pub n_categories: usize,
    /// Distinct full rows; a missing cell counts as its own value.
    pub n_unique_combinations: usize,
    /// Attributes with at least one missing cell.
    pub missing_attributes: Vec<String>,
    pub per_attribute_missing: Vec<AttributeMissing>,
    pub rows_with_any_missing: usize,
    pub rows_with_any_missing_fraction: f64,
}

pub fn compute_stats(d: &Dataset) -> DatasetStats {
    let n = d.n_rows();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let per_attribute_missing: Vec<AttributeMissing> = d
        .schema()
        .attributes()
        .iter()
        .enumerate()
        .map(|(a, attr)| AttributeMissing {
            attribute: attr.name.clone(),
            missing_fraction: frac(d.column(a).filter(Option::is_none).count()),
        })
        .collect();
    let missing_attributes = per_attribute_missing
        .iter()
        .filter(|m| m.missing_fraction > 0.0)
        .map(|m| m.attribute.clone())
        .collect();
    let rows_with_any_missing = d.rows().filter(|r| r.iter().any(Option::is_none)).count();
    DatasetStats {
        n_rows: n,
        n_attributes: d.n_attributes(),
        n_categories: d.schema().total_width(),
        n_unique_combinations: d.unique_combinations().len(),
        missing_attributes,
        per_attribute_missing,
        rows_with_any_missing,
        rows_with_any_missing_fraction: frac(rows_with_any_missing),
    }
}

impl DatasetStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Attribute, CategoricalSchema};

    #[test]
    fn singleton_dataset() {
        let s = CategoricalSchema::new(vec![
            Attribute::new("a", ["x", "y"]),
            Attribute::new("b", ["p", "q", "r"]),
        ])
        .unwrap();
        let d = Dataset::new(s, vec![vec![Some(0), Some(2)]]).unwrap();
        let st = compute_stats(&d);
        assert_eq!(st.n_unique_combinations, 1);
        assert_eq!(st.n_categories, 5);
        assert!(st
            .per_attribute_missing
            .iter()
            .all(|m| m.missing_fraction == 0.0));
        assert_eq!(st.rows_with_any_missing, 0);
        assert!(st.missing_attributes.is_empty());
    }

    #[test]
    fn missing_is_its_own_value_for_uniqueness() {
        let s = CategoricalSchema::new(vec![Attribute::new("a", ["x", "y"])]).unwrap();
        let d = Dataset::new(
            s,
            vec![vec![Some(0)], vec![None], vec![None], vec![Some(1)]],
        )
        .unwrap();
        let st = compute_stats(&d);
        assert_eq!(st.n_unique_combinations, 3);
        assert_eq!(st.rows_with_any_missing, 2);
        assert_eq!(st.rows_with_any_missing_fraction, 0.5);
        assert_eq!(st.missing_attributes, vec!["a".to_string()]);
    }
}
