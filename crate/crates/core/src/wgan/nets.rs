//! Generator and critic multilayer perceptrons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{EngineError, Graph, ParameterSet, Tensor, Var};
use crate::schema::CategoricalSchema;

/// Negative-side slope of the hidden-layer activations.
pub const LEAKY_SLOPE: f64 = 0.2;

fn init_layers(prefix: &str, sizes: &[usize], seed: u64) -> ParameterSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::new();
    for (l, w) in sizes.windows(2).enumerate() {
        let bound = 1.0 / (w[0] as f64).sqrt();
        let weights = Tensor::from_fn(w[0], w[1], |_, _| rng.gen_range(-bound..bound));
        let bias = Tensor::from_fn(1, w[1], |_, _| rng.gen_range(-bound..bound));
        params.push(format!("{prefix}.w{l}"), weights);
        params.push(format!("{prefix}.b{l}"), bias);
    }
    params
}

/// Affine layers with leaky-rectifier activations between them.
fn mlp(g: &mut Graph, vars: &[Var], x: Var) -> Result<Var, EngineError> {
    let n_layers = vars.len() / 2;
    let mut h = x;
    for l in 0..n_layers {
        let z = g.matmul(h, vars[2 * l])?;
        h = g.add_row_broadcast(z, vars[2 * l + 1])?;
        if l + 1 < n_layers {
            h = g.leaky_relu(h, LEAKY_SLOPE)?;
        }
    }
    Ok(h)
}

fn layer_sizes(
    input: usize,
    hidden_units: usize,
    hidden_layers: usize,
    output: usize,
) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend(std::iter::repeat_n(hidden_units, hidden_layers));
    sizes.push(output);
    sizes
}

/// Maps latent rows to one probability vector per attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorNet {
    pub params: ParameterSet,
    sizes: Vec<usize>,
    schema: CategoricalSchema,
}

impl GeneratorNet {
    pub fn new(
        schema: CategoricalSchema,
        latent_dim: usize,
        hidden_units: usize,
        hidden_layers: usize,
        seed: u64,
    ) -> Self {
        let sizes = layer_sizes(
            latent_dim,
            hidden_units,
            hidden_layers,
            schema.total_width(),
        );
        Self {
            params: init_layers("generator", &sizes, seed),
            sizes,
            schema,
        }
    }

    pub fn schema(&self) -> &CategoricalSchema {
        &self.schema
    }

    pub fn latent_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.sizes.last().expect("at least two layer sizes")
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn forward(&self, g: &mut Graph, vars: &[Var], z: Var) -> Result<Var, EngineError> {
        let logits = mlp(g, vars, z)?;
        g.block_softmax(logits, self.schema.layout())
    }

    /// `G(z)` as plain values.
    pub fn output(&self, z: &Tensor) -> Result<Tensor, EngineError> {
        let mut g = Graph::new();
        let vars = self.params.bind_frozen(&mut g);
        let zv = g.constant(z.clone());
        let out = self.forward(&mut g, &vars, zv)?;
        Ok(g.value(out).clone())
    }
}

/// Scores encoded rows with one unbounded real each.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticNet {
    pub params: ParameterSet,
    sizes: Vec<usize>,
}

impl CriticNet {
    pub fn new(input_width: usize, hidden_units: usize, hidden_layers: usize, seed: u64) -> Self {
        let sizes = layer_sizes(input_width, hidden_units, hidden_layers, 1);
        Self {
            params: init_layers("critic", &sizes, seed),
            sizes,
        }
    }

    /// A critic from explicit parameters, in `(weights, bias)` order per layer.
    pub fn from_layers(layers: Vec<(Tensor, Tensor)>) -> Result<Self, EngineError> {
        let mut params = ParameterSet::new();
        let mut sizes = Vec::new();
        for (l, (w, b)) in layers.into_iter().enumerate() {
            if b.rows() != 1 || b.cols() != w.cols() || sizes.last().is_some_and(|&s| s != w.rows())
            {
                return Err(EngineError::ShapeMismatch {
                    op: "critic layer",
                    left: w.shape(),
                    right: b.shape(),
                });
            }
            if sizes.is_empty() {
                sizes.push(w.rows());
            }
            sizes.push(w.cols());
            params.push(format!("critic.w{l}"), w);
            params.push(format!("critic.b{l}"), b);
        }
        if sizes.last() != Some(&1) {
            return Err(EngineError::Parameters(
                "critic must end in one output".into(),
            ));
        }
        Ok(Self { params, sizes })
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn forward(&self, g: &mut Graph, vars: &[Var], x: Var) -> Result<Var, EngineError> {
        mlp(g, vars, x)
    }

    /// `D(x)` as an `n x 1` tensor.
    pub fn score(&self, x: &Tensor) -> Result<Tensor, EngineError> {
        let mut g = Graph::new();
        let vars = self.params.bind_frozen(&mut g);
        let xv = g.constant(x.clone());
        let out = self.forward(&mut g, &vars, xv)?;
        Ok(g.value(out).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Attribute;

    fn schema() -> CategoricalSchema {
        CategoricalSchema::new(vec![
            Attribute::new("a", ["x", "y", "z"]),
            Attribute::new("b", ["p", "q"]),
        ])
        .unwrap()
    }

    #[test]
    fn generator_blocks_are_distributions() {
        let g = GeneratorNet::new(schema(), 4, 8, 2, 1);
        assert_eq!(g.layer_sizes(), &[4, 8, 8, 5]);
        let z = Tensor::from_fn(3, 4, |r, c| (r as f64 - c as f64) * 0.7);
        let out = g.output(&z).unwrap();
        for r in 0..3 {
            let row = out.row(r);
            assert!((row[..3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((row[3..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn critic_outputs_one_score_per_row() {
        let d = CriticNet::new(5, 8, 2, 2);
        let s = d.score(&Tensor::zeros(7, 5)).unwrap();
        assert_eq!(s.shape(), [7, 1]);
    }

    #[test]
    fn initialisation_is_seeded() {
        assert_eq!(CriticNet::new(5, 8, 2, 3), CriticNet::new(5, 8, 2, 3));
        assert_ne!(CriticNet::new(5, 8, 2, 3), CriticNet::new(5, 8, 2, 4));
    }

    #[test]
    fn from_layers_checks_shapes() {
        assert!(CriticNet::from_layers(vec![(Tensor::zeros(3, 1), Tensor::zeros(1, 1))]).is_ok());
        assert!(CriticNet::from_layers(vec![(Tensor::zeros(3, 2), Tensor::zeros(1, 2))]).is_err());
        assert!(CriticNet::from_layers(vec![(Tensor::zeros(3, 1), Tensor::zeros(1, 2))]).is_err());
    }
}
