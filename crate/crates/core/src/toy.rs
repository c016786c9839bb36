//! Synthetic ground-truth populations from a latent-class mixture.
//!
//! Each row first draws a hidden class, then every attribute independently
//! from a class-specific categorical distribution. With two or more classes
//! the attributes become dependent through the shared class.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::schema::{Attribute, CategoricalSchema};
use crate::DataError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyPopulationSpec {
    pub n_rows: usize,
    pub n_attributes: usize,
    pub categories_per_attribute: Vec<usize>,
    pub n_latent_classes: usize,
    pub seed: u64,
}

impl Default for ToyPopulationSpec {
    fn default() -> Self {
        Self {
            n_rows: 100_000,
            n_attributes: 8,
            categories_per_attribute: vec![5, 2, 6, 4, 7, 3, 5, 8],
            n_latent_classes: 4,
            seed: 2024,
        }
    }
}

/// Schema with attributes `attr0..` and zero-padded labels so that
/// lexicographic and index order agree.
pub fn toy_schema(categories_per_attribute: &[usize]) -> Result<CategoricalSchema, DataError> {
    let attrs = categories_per_attribute
        .iter()
        .enumerate()
        .map(|(a, &n)| {
            let width = n.saturating_sub(1).to_string().len();
            Attribute::new(format!("attr{a}"), (0..n).map(|c| format!("c{c:0width$}")))
        })
        .collect();
    CategoricalSchema::new(attrs)
}

pub fn generate_toy_population(spec: &ToyPopulationSpec) -> Result<Dataset, DataError> {
    if spec.n_latent_classes == 0 {
        return Err(DataError::Validation(
            "need at least one latent class".into(),
        ));
    }
    if spec.categories_per_attribute.len() != spec.n_attributes {
        return Err(DataError::Validation(format!(
            "{} category counts for {} attributes",
            spec.categories_per_attribute.len(),
            spec.n_attributes
        )));
    }
    let schema = toy_schema(&spec.categories_per_attribute)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let class_weights = dirichlet(&mut rng, spec.n_latent_classes, 2.0);
    let class_dist = WeightedIndex::new(&class_weights).expect("positive class weights");
    // Per class and attribute, a categorical distribution whose concentration
    // is itself random: small values give peaked, class-specific profiles.
    let mut profiles: Vec<Vec<WeightedIndex<f64>>> = Vec::with_capacity(spec.n_latent_classes);
    for _ in 0..spec.n_latent_classes {
        let per_attr = spec
            .categories_per_attribute
            .iter()
            .map(|&n| {
                let concentration = rng.gen_range(0.05..0.25);
                let p = dirichlet(&mut rng, n, concentration);
                WeightedIndex::new(&p).expect("positive category weights")
            })
            .collect();
        profiles.push(per_attr);
    }

    let mut cells = Vec::with_capacity(spec.n_rows * spec.n_attributes);
    for _ in 0..spec.n_rows {
        let class = class_dist.sample(&mut rng);
        for dist in &profiles[class] {
            cells.push(Some(dist.sample(&mut rng) as u32));
        }
    }
    Dataset::from_cells(schema, cells, None)
}

/// Symmetric Dirichlet draw, floored away from zero so every category stays
/// reachable.
fn dirichlet(rng: &mut impl Rng, n: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("valid gamma parameters");
    let mut p: Vec<f64> = (0..n).map(|_| gamma.sample(rng).max(1e-12)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let spec = ToyPopulationSpec {
            n_rows: 500,
            n_attributes: 3,
            categories_per_attribute: vec![2, 3, 12],
            n_latent_classes: 2,
            seed: 5,
        };
        let a = generate_toy_population(&spec).unwrap();
        let b = generate_toy_population(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_rows(), 500);
        assert_eq!(a.schema().attribute(2).categories[3], "c03");
        assert!(!a.has_missing());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = ToyPopulationSpec {
            n_latent_classes: 0,
            ..ToyPopulationSpec::default()
        };
        assert!(generate_toy_population(&spec).is_err());
        spec.n_latent_classes = 2;
        spec.n_attributes = 3;
        assert!(generate_toy_population(&spec).is_err());
    }
}
