//! The masked training loop and population generation.

use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::losses::{
    critic_loss, distance_regularizers, generator_loss, gradient_penalty, sample_latent,
    DistanceReference,
};
use super::nets::{CriticNet, GeneratorNet};
use super::WganError;
use crate::autodiff::{AdamConfig, EngineError, Graph, Tensor, Var};
use crate::dataset::Dataset;
use crate::encoding::{decode, encode, DecodeMode};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Critic updates per batch.
    pub critic_updates: usize,
    pub latent_dim: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda_gp: f64,
    pub lambda_bd: f64,
    pub lambda_ad: f64,
    pub seed: u64,
    /// Rows of the training data used as the distance-regularizer reference;
    /// `None` uses every row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_size: Option<usize>,
    /// Multiply generator output by the real batch's mask before the critic
    /// sees it. Disabling it gives the unmasked control.
    pub apply_mask: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 256,
            critic_updates: 5,
            latent_dim: 128,
            hidden_units: 128,
            hidden_layers: 2,
            learning_rate: 0.01,
            beta1: 0.0,
            beta2: 0.9,
            lambda_gp: 0.025,
            lambda_bd: 10.0,
            lambda_ad: 1.0,
            seed: 0,
            reference_size: None,
            apply_mask: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), WganError> {
        let counts = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("critic_updates", self.critic_updates),
            ("latent_dim", self.latent_dim),
            ("hidden_units", self.hidden_units),
            ("hidden_layers", self.hidden_layers),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(WganError::Config(format!("{name} must be at least 1")));
            }
        }
        if self.reference_size == Some(0) {
            return Err(WganError::Config(
                "reference_size must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("lambda_gp", self.lambda_gp),
            ("lambda_bd", self.lambda_bd),
            ("lambda_ad", self.lambda_ad),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(WganError::Config(format!(
                    "{name} must be a non-negative number"
                )));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(WganError::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(WganError::Config(
                "beta1 and beta2 must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            ..AdamConfig::default()
        }
    }
}

/// Per-epoch means of every loss term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub critic_loss: f64,
    pub generator_loss: f64,
    pub gradient_penalty: f64,
    pub r_bd: f64,
    pub r_ad: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.epochs
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    /// Same records with wall times zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> TrainingLog {
        TrainingLog {
            epochs: self
                .epochs
                .iter()
                .map(|r| EpochRecord {
                    wall_time_s: 0.0,
                    ..r.clone()
                })
                .collect(),
        }
    }
}

pub struct Trained {
    pub generator: GeneratorNet,
    pub critic: CriticNet,
    pub log: TrainingLog,
}

fn term<T>(epoch: usize, name: &'static str, r: Result<T, EngineError>) -> Result<T, WganError> {
    r.map_err(|e| match e {
        EngineError::NonFinite { .. } => WganError::Diverged { epoch, term: name },
        other => WganError::Engine(other),
    })
}

fn scalar(g: &Graph, v: Var) -> f64 {
    g.value(v).item().expect("loss is a scalar")
}

pub fn train(data: &Dataset, config: &TrainingConfig) -> Result<Trained, WganError> {
    train_observed(data, config, |_, _, _| {})
}

/// [`train`], calling `observer` after every completed epoch.
pub fn train_observed(
    data: &Dataset,
    config: &TrainingConfig,
    mut observer: impl FnMut(&EpochRecord, &GeneratorNet, &CriticNet),
) -> Result<Trained, WganError> {
    config.validate()?;
    let n = data.n_rows();
    if config.batch_size > n {
        return Err(WganError::Config(format!(
            "batch_size {} exceeds the {n} training rows",
            config.batch_size
        )));
    }
    let schema = data.schema().clone();
    let width = schema.total_width();
    let (x, y) = encode(data);
    let (x, y) = (x.0, y.0);

    let seed = config.seed;
    let mut generator = GeneratorNet::new(
        schema,
        config.latent_dim,
        config.hidden_units,
        config.hidden_layers,
        derive_seed(seed, "init-generator"),
    );
    let mut critic = CriticNet::new(
        width,
        config.hidden_units,
        config.hidden_layers,
        derive_seed(seed, "init-critic"),
    );
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "shuffle"));
    let mut latent_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "latent"));
    let mut alpha_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "interpolation"));
    let reference = match config.reference_size {
        Some(k) if k < n => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "reference"));
            let mut idx = index::sample(&mut rng, n, k).into_vec();
            idx.sort_unstable();
            DistanceReference::new(&x.select_rows(&idx))
        }
        _ => DistanceReference::new(&x),
    };
    let adam = config.adam();

    let mut order: Vec<usize> = (0..n).collect();
    let mut log = TrainingLog::default();
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let (mut sum_ld, mut sum_gp, mut n_critic) = (0.0, 0.0, 0usize);
        let (mut sum_lg, mut sum_bd, mut sum_ad, mut n_gen) = (0.0, 0.0, 0.0, 0usize);

        for batch in order.chunks(config.batch_size) {
            let real = x.select_rows(batch);
            let mask = y.select_rows(batch);
            let m = batch.len();

            let mut z = Tensor::zeros(0, 0);
            for _ in 0..config.critic_updates {
                z = sample_latent(m, config.latent_dim, &mut latent_rng);
                let mut fake = term(epoch, "generator_output", generator.output(&z))?;
                if config.apply_mask {
                    for (f, k) in fake.data_mut().iter_mut().zip(mask.data()) {
                        *f *= k;
                    }
                }
                let mut g = Graph::new();
                let vars = critic.params.bind(&mut g);
                let rv = g.constant(real.clone());
                let fv = g.constant(fake);
                let ld = term(
                    epoch,
                    "critic_loss",
                    critic_loss(&mut g, &critic, &vars, rv, fv),
                )?;
                let gp = term(
                    epoch,
                    "gradient_penalty",
                    gradient_penalty(&mut g, &critic, &vars, rv, fv, &mut alpha_rng),
                )?;
                let scaled = term(epoch, "gradient_penalty", g.scale(gp, config.lambda_gp))?;
                let total = term(epoch, "critic_total", g.add(ld, scaled))?;
                let grads = term(epoch, "critic_gradient", g.backward(total))?;
                critic
                    .params
                    .set_grads(grads.into_iter().map(|(_, t)| t).collect())?;
                critic.params.adam_step(&adam);
                sum_ld += scalar(&g, ld);
                sum_gp += scalar(&g, gp);
                n_critic += 1;
            }

            // Generator step on the last critic iteration's latent draw,
            // scored by the updated critic.
            let mut g = Graph::new();
            let gen_vars = generator.params.bind(&mut g);
            let critic_vars = critic.params.bind_frozen(&mut g);
            let zv = g.constant(z);
            let mut fake = term(
                epoch,
                "generator_output",
                generator.forward(&mut g, &gen_vars, zv),
            )?;
            if config.apply_mask {
                let mv = g.constant(mask);
                fake = term(epoch, "generator_output", g.mul(fake, mv))?;
            }
            let lg = term(
                epoch,
                "generator_loss",
                generator_loss(&mut g, &critic, &critic_vars, fake),
            )?;
            let (bd, ad) = term(
                epoch,
                "distance_regularizers",
                distance_regularizers(&mut g, fake, &reference),
            )?;
            let bd_s = term(epoch, "r_bd", g.scale(bd, config.lambda_bd))?;
            let ad_s = term(epoch, "r_ad", g.scale(ad, config.lambda_ad))?;
            let t1 = term(epoch, "generator_total", g.add(lg, bd_s))?;
            let total = term(epoch, "generator_total", g.add(t1, ad_s))?;
            let grads = term(epoch, "generator_gradient", g.backward(total))?;
            generator
                .params
                .set_grads(grads.into_iter().map(|(_, t)| t).collect())?;
            generator.params.adam_step(&adam);
            sum_lg += scalar(&g, lg);
            sum_bd += scalar(&g, bd);
            sum_ad += scalar(&g, ad);
            n_gen += 1;
        }

        let record = EpochRecord {
            epoch,
            critic_loss: sum_ld / n_critic as f64,
            generator_loss: sum_lg / n_gen as f64,
            gradient_penalty: sum_gp / n_critic as f64,
            r_bd: sum_bd / n_gen as f64,
            r_ad: sum_ad / n_gen as f64,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        observer(&record, &generator, &critic);
        log.epochs.push(record);
    }
    Ok(Trained {
        generator,
        critic,
        log,
    })
}

/// Rows generated per forward pass.
const GENERATION_CHUNK: usize = 4096;

/// Draws `n` complete rows from the generator. No mask is applied.
pub fn generate_population(
    generator: &GeneratorNet,
    n: usize,
    mode: DecodeMode,
    seed: u64,
) -> Result<Dataset, WganError> {
    let schema = generator.schema().clone();
    let mut latent_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "generate-latent"));
    let mut cells = Vec::with_capacity(n * schema.n_attributes());
    let mut done = 0;
    let mut chunk = 0;
    while done < n {
        let m = GENERATION_CHUNK.min(n - done);
        let z = sample_latent(m, generator.latent_dim(), &mut latent_rng);
        let probs = generator.output(&z)?;
        let part = decode(
            &probs,
            &schema,
            mode,
            derive_seed(seed, &format!("generate-decode-{chunk}")),
        )?;
        for row in part.rows() {
            cells.extend_from_slice(row);
        }
        done += m;
        chunk += 1;
    }
    Ok(Dataset::from_cells(schema, cells, None)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Attribute, CategoricalSchema};

    fn tiny() -> Dataset {
        let s = CategoricalSchema::new(vec![
            Attribute::new("a", ["x", "y"]),
            Attribute::new("b", ["p", "q", "r"]),
        ])
        .unwrap();
        let rows = (0..40)
            .map(|i| vec![Some(i % 2), if i % 5 == 0 { None } else { Some(i % 3) }])
            .collect();
        Dataset::new(s, rows).unwrap()
    }

    fn small_config() -> TrainingConfig {
        TrainingConfig {
            epochs: 3,
            batch_size: 16,
            critic_updates: 2,
            latent_dim: 4,
            hidden_units: 8,
            seed: 11,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn defaults() {
        let c = TrainingConfig::default();
        assert_eq!(
            (c.hidden_layers, c.hidden_units, c.latent_dim),
            (2, 128, 128)
        );
        assert_eq!(c.learning_rate, 0.01);
        assert_eq!((c.lambda_gp, c.lambda_bd, c.lambda_ad), (0.025, 10.0, 1.0));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = small_config();
        c.batch_size = 41;
        assert!(matches!(train(&tiny(), &c), Err(WganError::Config(_))));
        c.batch_size = 0;
        assert!(matches!(train(&tiny(), &c), Err(WganError::Config(_))));
        let c = TrainingConfig {
            lambda_bd: -1.0,
            ..small_config()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn one_record_per_epoch_and_deterministic() {
        let a = train(&tiny(), &small_config()).unwrap();
        let b = train(&tiny(), &small_config()).unwrap();
        assert_eq!(a.log.epochs.len(), 3);
        assert_eq!(a.log.without_timing(), b.log.without_timing());
        assert_eq!(a.generator, b.generator);
        for r in &a.log.epochs {
            assert!(r.r_ad <= 0.0 && r.r_bd >= 0.0);
        }
        assert_eq!(a.log.to_json_lines().lines().count(), 3);
    }

    #[test]
    fn divergence_names_epoch_and_term() {
        let c = TrainingConfig {
            learning_rate: 1e300,
            ..small_config()
        };
        match train(&tiny(), &c) {
            Err(WganError::Diverged { epoch, .. }) => assert!(epoch >= 1),
            Err(other) => panic!("unexpected error {other}"),
            Ok(_) => panic!("expected divergence"),
        }
    }

    #[test]
    fn generation_counts_and_completeness() {
        let t = train(&tiny(), &small_config()).unwrap();
        let empty = generate_population(&t.generator, 0, DecodeMode::Sample, 1).unwrap();
        assert!(empty.is_empty());
        let d = generate_population(&t.generator, 5000, DecodeMode::Sample, 1).unwrap();
        assert_eq!(d.n_rows(), 5000);
        assert!(!d.has_missing());
        assert_eq!(d.schema(), tiny().schema());
        let again = generate_population(&t.generator, 5000, DecodeMode::Sample, 1).unwrap();
        assert_eq!(d, again);
        let other = generate_population(&t.generator, 5000, DecodeMode::Sample, 2).unwrap();
        assert_ne!(d, other);
    }
}
