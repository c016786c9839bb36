//! General samples, sampling zeros, structural zeros and missing samples.
//!
//! Classes are defined on unique combinations of the selected attributes:
//!
//! - general: generated, in the ground truth and in the training sample
//! - sampling zero: generated and in the ground truth, absent from training
//! - structural zero: generated but absent from the ground truth
//! - missing: in the training sample but never generated

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::joint::{combination_counts, joint_table, precision_recall, resolve, Combination};
use super::{EvalError, MetricValue};
use crate::dataset::Dataset;
use crate::encoding::DecodeMode;
use crate::seed::derive_seed;
use crate::wgan::{generate_population, GeneratorNet};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Taxonomy {
    pub general_samples: BTreeSet<Combination>,
    pub sampling_zeros: BTreeSet<Combination>,
    pub structural_zeros: BTreeSet<Combination>,
    pub missing_samples: BTreeSet<Combination>,
    /// Generated rows falling in each class.
    pub general_rows: usize,
    pub sampling_zero_rows: usize,
    pub structural_zero_rows: usize,
}

impl Taxonomy {
    /// Unique generated combinations.
    pub fn n_generated(&self) -> usize {
        self.general_samples.len() + self.sampling_zeros.len() + self.structural_zeros.len()
    }
}

fn check_schemas(datasets: &[&Dataset]) -> Result<(), EvalError> {
    if datasets.windows(2).any(|w| w[0].schema() != w[1].schema()) {
        return Err(EvalError::Mismatch("datasets use different schemas".into()));
    }
    Ok(())
}

struct Supports {
    gt: BTreeSet<Combination>,
    train: BTreeSet<Combination>,
    gen: BTreeMap<Combination, usize>,
}

fn supports(
    gt: &Dataset,
    train: &Dataset,
    gen: &Dataset,
    attributes: &[impl AsRef<str>],
) -> Result<Supports, EvalError> {
    check_schemas(&[gt, train, gen])?;
    let columns = resolve(gt, attributes)?;
    Ok(Supports {
        gt: combination_counts(gt, &columns).into_keys().collect(),
        train: combination_counts(train, &columns).into_keys().collect(),
        gen: combination_counts(gen, &columns),
    })
}

pub fn classify_taxonomy(
    gt: &Dataset,
    train: &Dataset,
    gen: &Dataset,
    attributes: &[impl AsRef<str>],
) -> Result<Taxonomy, EvalError> {
    let s = supports(gt, train, gen, attributes)?;
    Ok(classify(&s))
}

fn classify(s: &Supports) -> Taxonomy {
    let mut t = Taxonomy::default();
    for (key, &rows) in &s.gen {
        if !s.gt.contains(key) {
            t.structural_zeros.insert(key.clone());
            t.structural_zero_rows += rows;
        } else if s.train.contains(key) {
            t.general_samples.insert(key.clone());
            t.general_rows += rows;
        } else {
            t.sampling_zeros.insert(key.clone());
            t.sampling_zero_rows += rows;
        }
    }
    t.missing_samples = s
        .train
        .iter()
        .filter(|k| !s.gen.contains_key(*k))
        .cloned()
        .collect();
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroScores {
    pub score_gs: Result<f64, EvalError>,
    pub score_sz: Result<f64, EvalError>,
    pub score_stz: Result<f64, EvalError>,
}

fn ratio(metric: &'static str, num: usize, den: usize, what: &str) -> Result<f64, EvalError> {
    if den == 0 {
        return Err(EvalError::Undefined {
            metric,
            reason: format!("no {what}"),
        });
    }
    Ok(num as f64 / den as f64)
}

/// General-sample, sampling-zero and structural-zero ratios.
///
/// `score_gs` divides by the ground-truth combinations present in training,
/// `score_sz` by those absent from training, `score_stz` by all unique
/// generated combinations. Each score is undefined when its denominator is 0.
pub fn zero_scores(
    t: &Taxonomy,
    gt: &Dataset,
    train: &Dataset,
    gen: &Dataset,
    attributes: &[impl AsRef<str>],
) -> Result<ZeroScores, EvalError> {
    let s = supports(gt, train, gen, attributes)?;
    Ok(scores_from(t, &s))
}

fn scores_from(t: &Taxonomy, s: &Supports) -> ZeroScores {
    let gt_in_train = s.gt.intersection(&s.train).count();
    let gt_outside_train = s.gt.len() - gt_in_train;
    ZeroScores {
        score_gs: ratio(
            "score_gs",
            t.general_samples.len(),
            gt_in_train,
            "ground-truth combinations in the training sample",
        ),
        score_sz: ratio(
            "score_sz",
            t.sampling_zeros.len(),
            gt_outside_train,
            "ground-truth combinations outside the training sample",
        ),
        score_stz: ratio(
            "score_stz",
            t.structural_zeros.len(),
            t.n_generated(),
            "generated combinations",
        ),
    }
}

/// Where the rows for each sampling level come from.
#[derive(Clone, Copy)]
pub enum SampleSource<'a> {
    /// Fresh draws from a generator at every level.
    Generator(&'a GeneratorNet, DecodeMode),
    /// Draws without replacement from a fixed pool.
    Pool(&'a Dataset),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub level: usize,
    pub n_generated_combinations: usize,
    pub n_general: usize,
    pub n_sampling_zero: usize,
    pub n_structural_zero: usize,
    pub n_missing: usize,
    pub score_gs: MetricValue,
    pub score_sz: MetricValue,
    pub score_stz: MetricValue,
    pub precision: MetricValue,
    pub recall: MetricValue,
}

/// Taxonomy scores and precision / recall at increasing sample sizes.
pub fn sampling_curve(
    gt: &Dataset,
    train: &Dataset,
    source: SampleSource<'_>,
    attributes: &[impl AsRef<str>],
    levels: &[usize],
    seed: u64,
) -> Result<Vec<CurvePoint>, EvalError> {
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::Mismatch(
            "sampling levels must be strictly ascending".into(),
        ));
    }
    let gt_joint = joint_table(gt, attributes)?;
    let mut out = Vec::with_capacity(levels.len());
    for (i, &level) in levels.iter().enumerate() {
        let level_seed = derive_seed(seed, &format!("sampling-level-{i}"));
        let sample = match source {
            SampleSource::Generator(g, mode) => generate_population(g, level, mode, level_seed)?,
            SampleSource::Pool(pool) => {
                if level > pool.n_rows() {
                    return Err(EvalError::Mismatch(format!(
                        "level {level} exceeds the pool of {} rows",
                        pool.n_rows()
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(level_seed);
                let mut idx = index::sample(&mut rng, pool.n_rows(), level).into_vec();
                idx.sort_unstable();
                pool.select_rows(&idx)
            }
        };
        let s = supports(gt, train, &sample, attributes)?;
        let t = classify(&s);
        let scores = scores_from(&t, &s);
        let pr = joint_table(&sample, attributes).and_then(|j| precision_recall(&gt_joint, &j));
        out.push(CurvePoint {
            level,
            n_generated_combinations: t.n_generated(),
            n_general: t.general_samples.len(),
            n_sampling_zero: t.sampling_zeros.len(),
            n_structural_zero: t.structural_zeros.len(),
            n_missing: t.missing_samples.len(),
            score_gs: scores.score_gs.into(),
            score_sz: scores.score_sz.into(),
            score_stz: scores.score_stz.into(),
            precision: pr.clone().map(|p| p.0).into(),
            recall: pr.map(|p| p.1).into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Attribute, CategoricalSchema};

    fn schema() -> CategoricalSchema {
        CategoricalSchema::new(vec![
            Attribute::new("x", ["a", "b", "c"]),
            Attribute::new("y", ["p", "q"]),
        ])
        .unwrap()
    }

    fn data(rows: &[(u32, u32)]) -> Dataset {
        Dataset::new(
            schema(),
            rows.iter().map(|&(a, b)| vec![Some(a), Some(b)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_all_general() {
        let d = data(&[(0, 0), (1, 1), (2, 0)]);
        let t = classify_taxonomy(&d, &d, &d, &["x", "y"]).unwrap();
        assert_eq!(t.general_samples.len(), 3);
        assert!(t.sampling_zeros.is_empty() && t.structural_zeros.is_empty());
        assert!(t.missing_samples.is_empty());
        let s = zero_scores(&t, &d, &d, &d, &["x", "y"]).unwrap();
        assert_eq!(s.score_gs, Ok(1.0));
        assert!(matches!(s.score_sz, Err(EvalError::Undefined { .. })));
        assert_eq!(s.score_stz, Ok(0.0));
    }

    #[test]
    fn classes_follow_their_definitions() {
        let gt = data(&[(0, 0), (1, 1), (2, 0), (2, 1)]);
        let train = data(&[(0, 0), (1, 1)]);
        let gen = data(&[(0, 0), (0, 0), (2, 0), (0, 1)]);
        let t = classify_taxonomy(&gt, &train, &gen, &["x", "y"]).unwrap();
        assert_eq!(t.general_samples, BTreeSet::from([vec![0, 0]]));
        assert_eq!(t.sampling_zeros, BTreeSet::from([vec![2, 0]]));
        assert_eq!(t.structural_zeros, BTreeSet::from([vec![0, 1]]));
        assert_eq!(t.missing_samples, BTreeSet::from([vec![1, 1]]));
        assert_eq!(
            (t.general_rows, t.sampling_zero_rows, t.structural_zero_rows),
            (2, 1, 1)
        );
        let s = zero_scores(&t, &gt, &train, &gen, &["x", "y"]).unwrap();
        assert_eq!(s.score_gs, Ok(0.5));
        assert_eq!(s.score_sz, Ok(0.5));
        assert_eq!(s.score_stz, Ok(1.0 / 3.0));
    }

    #[test]
    fn full_pool_level_matches_single_shot() {
        let gt = data(&[(0, 0), (1, 1), (2, 0), (2, 1)]);
        let train = data(&[(0, 0), (1, 1)]);
        let pool = data(&[(0, 0), (2, 0), (0, 1), (1, 0), (2, 1)]);
        let curve = sampling_curve(
            &gt,
            &train,
            SampleSource::Pool(&pool),
            &["x", "y"],
            &[2, 5],
            1,
        )
        .unwrap();
        let t = classify_taxonomy(&gt, &train, &pool, &["x", "y"]).unwrap();
        let s = zero_scores(&t, &gt, &train, &pool, &["x", "y"]).unwrap();
        let last = &curve[1];
        assert_eq!(last.score_gs, s.score_gs.into());
        assert_eq!(last.score_stz, s.score_stz.into());
        assert_eq!(last.n_generated_combinations, t.n_generated());
        assert!(
            sampling_curve(&gt, &train, SampleSource::Pool(&pool), &["x"], &[5, 2], 1).is_err()
        );
        assert!(sampling_curve(&gt, &train, SampleSource::Pool(&pool), &["x"], &[6], 1).is_err());
    }
}
