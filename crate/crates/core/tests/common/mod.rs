//! Plain-loop reference implementations used as test oracles. Nothing here
//! calls into the library's differentiation engine.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SLOPE: f64 = 0.2;

/// A dense layer: `weights[i][j]` maps input `i` to output `j`.
#[derive(Clone, Debug)]
pub struct RefLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Multilayer perceptron with leaky-rectifier hidden layers and a linear
/// output layer.
#[derive(Clone, Debug)]
pub struct RefMlp {
    pub layers: Vec<RefLayer>,
}

impl RefMlp {
    pub fn random(sizes: &[usize], rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                RefLayer {
                    weights: (0..w[0])
                        .map(|_| (0..w[1]).map(|_| rng.gen_range(-scale..scale)).collect())
                        .collect(),
                    bias: (0..w[1]).map(|_| rng.gen_range(-scale..scale)).collect(),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            for row in &l.weights {
                out.extend(row);
            }
            out.extend(&l.bias);
        }
        out
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for l in &mut self.layers {
            for row in &mut l.weights {
                for w in row.iter_mut() {
                    *w = *it.next().unwrap();
                }
            }
            for b in &mut l.bias {
                *b = *it.next().unwrap();
            }
        }
    }

    /// Pre-activations of every layer and the final output for one row.
    pub fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut h = x.to_vec();
        let mut pre = Vec::new();
        for (li, l) in self.layers.iter().enumerate() {
            let mut z = l.bias.clone();
            for (i, hi) in h.iter().enumerate() {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj += hi * l.weights[i][j];
                }
            }
            pre.push(z.clone());
            h = if li + 1 < self.layers.len() {
                z.iter()
                    .map(|&v| if v > 0.0 { v } else { SLOPE * v })
                    .collect()
            } else {
                z
            };
        }
        (pre, h)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).1
    }

    /// Gradient of output unit 0 with respect to the input row.
    pub fn input_grad(&self, x: &[f64]) -> Vec<f64> {
        let (pre, _) = self.forward_trace(x);
        let last = self.layers.len() - 1;
        let mut g = vec![0.0; self.layers[last].bias.len()];
        g[0] = 1.0;
        for li in (0..self.layers.len()).rev() {
            if li < last {
                for (gj, z) in g.iter_mut().zip(&pre[li]) {
                    if *z <= 0.0 {
                        *gj *= SLOPE;
                    }
                }
            }
            let l = &self.layers[li];
            g = l
                .weights
                .iter()
                .map(|row| row.iter().zip(&g).map(|(w, gj)| w * gj).sum())
                .collect();
        }
        g
    }

    /// Smallest |pre-activation| over hidden units for the given rows.
    pub fn min_hidden_margin(&self, xs: &[Vec<f64>]) -> f64 {
        let mut m = f64::INFINITY;
        for x in xs {
            let (pre, _) = self.forward_trace(x);
            for z in &pre[..pre.len() - 1] {
                for v in z {
                    m = m.min(v.abs());
                }
            }
        }
        m
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].weights.len()];
        s.extend(self.layers.iter().map(|l| l.bias.len()));
        s
    }
}

/// Gradient-penalty value for a critic at given interpolated rows:
/// mean over rows of `(|dD/dx| - 1)^2`.
pub fn ref_penalty(critic: &RefMlp, rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|x| {
            let g = critic.input_grad(x);
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            (n - 1.0).powi(2)
        })
        .sum::<f64>()
        / rows.len() as f64
}

/// Central finite differences of `f` at `x` with step `h`.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Norm-wise relative error: `max |a - b| / max |b|`.
pub fn rel_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let num = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let den = reference.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rows(n: usize, d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}
