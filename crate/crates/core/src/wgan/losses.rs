//! Adversarial losses, the gradient penalty and the two distance regularizers.
//!
//! Loss builders take a graph, the critic and its bound parameter nodes, and
//! return a scalar node.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::nets::{CriticNet, GeneratorNet};
use crate::autodiff::{EngineError, Graph, Tensor, Var};

/// Added under the square root of the input-gradient norm so that its
/// derivative stays finite when the gradient vanishes.
const NORM_FLOOR: f64 = 1e-12;

/// `n x latent_dim` standard-normal draws.
pub fn sample_latent(n: usize, latent_dim: usize, rng: &mut impl Rng) -> Tensor {
    Tensor::from_fn(n, latent_dim, |_, _| rng.sample(StandardNormal))
}

/// `G(z) * mask`, elementwise.
pub fn masked_generate(g: &GeneratorNet, z: &Tensor, mask: &Tensor) -> Result<Tensor, EngineError> {
    if mask.shape() != [z.rows(), g.output_width()] {
        return Err(EngineError::ShapeMismatch {
            op: "masked_generate",
            left: [z.rows(), g.output_width()],
            right: mask.shape(),
        });
    }
    let mut out = g.output(z)?;
    for (o, m) in out.data_mut().iter_mut().zip(mask.data()) {
        *o *= m;
    }
    Ok(out)
}

/// `mean(D(fake)) - mean(D(real))`.
pub fn critic_loss(
    g: &mut Graph,
    critic: &CriticNet,
    vars: &[Var],
    real: Var,
    fake: Var,
) -> Result<Var, EngineError> {
    let d_real = critic.forward(g, vars, real)?;
    let d_fake = critic.forward(g, vars, fake)?;
    let m_real = g.mean(d_real)?;
    let m_fake = g.mean(d_fake)?;
    g.sub(m_fake, m_real)
}

/// `-mean(D(fake))`.
pub fn generator_loss(
    g: &mut Graph,
    critic: &CriticNet,
    vars: &[Var],
    fake: Var,
) -> Result<Var, EngineError> {
    let d_fake = critic.forward(g, vars, fake)?;
    let m = g.mean(d_fake)?;
    g.neg(m)
}

/// Mean of `(|grad_x D(x)| - 1)^2` at points `alpha real + (1 - alpha) fake`,
/// with one uniform `alpha` per row.
pub fn gradient_penalty(
    g: &mut Graph,
    critic: &CriticNet,
    vars: &[Var],
    real: Var,
    fake: Var,
    rng: &mut impl Rng,
) -> Result<Var, EngineError> {
    let [n, w] = g.value(real).shape();
    let alpha: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let a = g.constant(Tensor::from_fn(n, w, |r, _| alpha[r]));
    let b = g.constant(Tensor::from_fn(n, w, |r, _| 1.0 - alpha[r]));
    let ar = g.mul(a, real)?;
    let bf = g.mul(b, fake)?;
    let mixed = g.add(ar, bf)?;
    penalty_at(g, critic, vars, mixed)
}

/// The penalty at fixed points `x`.
pub fn penalty_at(
    g: &mut Graph,
    critic: &CriticNet,
    vars: &[Var],
    x: Var,
) -> Result<Var, EngineError> {
    let scores = critic.forward(g, vars, x)?;
    let total = g.sum_all(scores)?;
    let gx = g.grad(total, &[x])?[0];
    let sq = g.square(gx)?;
    let sums = g.sum_cols(sq)?;
    let floored = g.add_scalar(sums, NORM_FLOOR)?;
    let norms = g.sqrt(floored)?;
    let dev = g.add_scalar(norms, -1.0)?;
    let dev_sq = g.square(dev)?;
    g.mean(dev_sq)
}

/// Euclidean distance between every row of `a` and every row of `b`.
pub fn pairwise_dist(a: &Tensor, b: &Tensor) -> Result<Tensor, EngineError> {
    crate::autodiff::pairwise_distances(a, b)
}

/// Mean over generated rows of the distance to the nearest reference row.
pub fn r_bd(g: &mut Graph, fake: Var, reference: Var) -> Result<Var, EngineError> {
    let d = g.pairwise_dist(fake, reference)?;
    let nearest = g.min_cols(d)?;
    g.mean(nearest)
}

/// Negated mean distance over all (generated, reference) pairs.
pub fn r_ad(g: &mut Graph, fake: Var, reference: Var) -> Result<Var, EngineError> {
    let d = g.pairwise_dist(fake, reference)?;
    let m = g.mean(d)?;
    g.neg(m)
}

/// Reference rows for the distance regularizers, stored once per distinct
/// row with its share of the total. Nearest distances and weighted mean
/// distances over the distinct rows equal those over the full reference.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceReference {
    rows: Tensor,
    weights: Tensor,
    total: usize,
}

impl DistanceReference {
    pub fn new(x: &Tensor) -> Self {
        let mut counts: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        for r in 0..x.rows() {
            let key = x.row(r).iter().map(|v| v.to_bits()).collect();
            *counts.entry(key).or_default() += 1;
        }
        let total = x.rows();
        let mut data = Vec::with_capacity(counts.len() * x.cols());
        let mut weights = Vec::with_capacity(counts.len());
        for (key, count) in &counts {
            data.extend(key.iter().map(|&b| f64::from_bits(b)));
            weights.push(*count as f64 / total as f64);
        }
        Self {
            rows: Tensor::new(counts.len(), x.cols(), data).expect("consistent widths"),
            weights: Tensor::new(counts.len(), 1, weights).expect("one weight per row"),
            total,
        }
    }

    /// Number of reference rows, counting duplicates.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn n_distinct(&self) -> usize {
        self.rows.rows()
    }
}

/// `(R_BD, R_AD)` against a reference, sharing one distance matrix.
pub fn distance_regularizers(
    g: &mut Graph,
    fake: Var,
    reference: &DistanceReference,
) -> Result<(Var, Var), EngineError> {
    if reference.is_empty() {
        return Err(EngineError::Empty {
            op: "distance_regularizers",
        });
    }
    let rv = g.constant(reference.rows.clone());
    let wv = g.constant(reference.weights.clone());
    let d = g.pairwise_dist(fake, rv)?;
    let nearest = g.min_cols(d)?;
    let bd = g.mean(nearest)?;
    let per_row = g.matmul(d, wv)?;
    let m = g.mean(per_row)?;
    let ad = g.neg(m)?;
    Ok((bd, ad))
}
