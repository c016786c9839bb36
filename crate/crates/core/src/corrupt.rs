//! Missing-completely-at-random corruption of selected attributes.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, MISSING};
use crate::DataError;

/// Which attributes to corrupt (`q` of them) and at what rate `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub target_attributes: Vec<String>,
    pub missing_rate: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(target_attributes: Vec<String>, missing_rate: f64, seed: u64) -> Self {
        Self {
            target_attributes,
            missing_rate,
            seed,
        }
    }

    /// Dataset label in the `miss-<q>-<percent>` style.
    pub fn label(&self) -> String {
        format!(
            "miss-{}-{}",
            self.target_attributes.len(),
            (self.missing_rate * 100.0).round() as u64
        )
    }
}

/// Blanks exactly `round(r * n)` cells, chosen uniformly without replacement,
/// in each target attribute independently. No other cell changes.
pub fn inject_missingness(d: &Dataset, spec: &CorruptionSpec) -> Result<Dataset, DataError> {
    let r = spec.missing_rate;
    if !(r > 0.0 && r < 1.0) {
        return Err(DataError::Validation(format!(
            "missing rate {r} outside (0, 1)"
        )));
    }
    if spec.target_attributes.is_empty() {
        return Err(DataError::Validation("no target attributes".into()));
    }
    let targets: Vec<usize> = spec
        .target_attributes
        .iter()
        .map(|name| d.schema().require_index(name))
        .collect::<Result<_, _>>()?;
    for &a in &targets {
        if d.column(a).any(|c| c.is_none()) {
            return Err(DataError::Validation(format!(
                "attribute {:?} already has missing cells",
                d.schema().attribute(a).name
            )));
        }
    }
    let n = d.n_rows();
    let k = d.n_attributes();
    let count = ((r * n as f64).round() as usize).min(n);
    let mut cells: Vec<_> = d.rows().flatten().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for &a in &targets {
        for row in index::sample(&mut rng, n, count) {
            cells[row * k + a] = MISSING;
        }
    }
    Dataset::from_cells(d.schema().clone(), cells, d.weights().map(<[_]>::to_vec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Attribute, CategoricalSchema};

    fn dataset(n: usize) -> Dataset {
        let s = CategoricalSchema::new(vec![
            Attribute::new("a", ["0", "1"]),
            Attribute::new("b", ["0", "1", "2"]),
        ])
        .unwrap();
        let rows = (0..n)
            .map(|i| vec![Some((i % 2) as u32), Some((i % 3) as u32)])
            .collect();
        Dataset::new(s, rows).unwrap()
    }

    #[test]
    fn exact_count_on_one_attribute() {
        let d = dataset(100);
        let out = inject_missingness(&d, &CorruptionSpec::new(vec!["a".into()], 0.10, 4)).unwrap();
        assert_eq!(out.column(0).filter(|c| c.is_none()).count(), 10);
        assert_eq!(out.column(1).filter(|c| c.is_none()).count(), 0);
        for i in 0..100 {
            if out.cell(i, 0).is_some() {
                assert_eq!(out.row(i), d.row(i));
            }
        }
    }

    #[test]
    fn rate_must_be_strictly_inside_unit_interval() {
        let d = dataset(10);
        for r in [0.0, 1.0, -0.2, 1.5] {
            assert!(inject_missingness(&d, &CorruptionSpec::new(vec!["a".into()], r, 0)).is_err());
        }
    }

    #[test]
    fn unknown_attribute_and_existing_missing_rejected() {
        let d = dataset(10);
        assert!(matches!(
            inject_missingness(&d, &CorruptionSpec::new(vec!["zz".into()], 0.5, 0)),
            Err(DataError::UnknownAttribute(_))
        ));
        let once = inject_missingness(&d, &CorruptionSpec::new(vec!["a".into()], 0.5, 0)).unwrap();
        assert!(inject_missingness(&once, &CorruptionSpec::new(vec!["a".into()], 0.5, 0)).is_err());
    }

    #[test]
    fn label_format() {
        let s = CorruptionSpec::new(vec!["a".into(), "b".into()], 0.4, 0);
        assert_eq!(s.label(), "miss-2-40");
    }
}
