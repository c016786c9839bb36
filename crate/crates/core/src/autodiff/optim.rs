//! Named parameters and the adaptive-moment update.

use serde::{Deserialize, Serialize};

use super::{EngineError, Graph, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.0,
            beta2: 0.9,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    first_moment: Tensor,
    second_moment: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let [r, c] = value.shape();
        Self {
            name: name.into(),
            value,
            grad: Tensor::zeros(r, c),
            first_moment: Tensor::zeros(r, c),
            second_moment: Tensor::zeros(r, c),
        }
    }
}

/// Ordered named tensors with gradients and optimizer state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterSet {
    params: Vec<Parameter>,
    steps: u64,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) {
        self.params.push(Parameter::new(name, value));
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn get(&self, index: usize) -> &Parameter {
        &self.params[index]
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Registers every parameter as a differentiable leaf of `graph`.
    pub fn bind(&self, graph: &mut Graph) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| graph.param(p.value.clone()))
            .collect()
    }

    /// Registers every parameter as a non-differentiable constant.
    pub fn bind_frozen(&self, graph: &mut Graph) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| graph.constant(p.value.clone()))
            .collect()
    }

    pub fn set_grads(&mut self, grads: Vec<Tensor>) -> Result<(), EngineError> {
        if grads.len() != self.params.len() {
            return Err(EngineError::Parameters(format!(
                "expected {} gradients, got {}",
                self.params.len(),
                grads.len()
            )));
        }
        for (p, g) in self.params.iter_mut().zip(grads) {
            if g.shape() != p.value.shape() {
                return Err(EngineError::ShapeMismatch {
                    op: "set_grads",
                    left: p.value.shape(),
                    right: g.shape(),
                });
            }
            p.grad = g;
        }
        Ok(())
    }

    /// One bias-corrected adaptive-moment step using the stored gradients.
    pub fn adam_step(&mut self, config: &AdamConfig) {
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - config.beta1.powi(t);
        let c2 = 1.0 - config.beta2.powi(t);
        for p in &mut self.params {
            let grads = p.grad.data();
            let m = p.first_moment.data_mut();
            for (mi, gi) in m.iter_mut().zip(grads) {
                *mi = config.beta1 * *mi + (1.0 - config.beta1) * gi;
            }
            let v = p.second_moment.data_mut();
            for (vi, gi) in v.iter_mut().zip(grads) {
                *vi = config.beta2 * *vi + (1.0 - config.beta2) * gi * gi;
            }
            let (m, v) = (p.first_moment.data(), p.second_moment.data());
            for ((w, mi), vi) in p.value.data_mut().iter_mut().zip(m).zip(v) {
                let m_hat = mi / c1;
                let v_hat = vi / c2;
                *w -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
    }

    /// Replaces parameter values, keeping names and resetting optimizer state.
    pub fn load_values(&mut self, values: Vec<(String, Tensor)>) -> Result<(), EngineError> {
        if values.len() != self.params.len() {
            return Err(EngineError::Parameters(format!(
                "expected {} tensors, got {}",
                self.params.len(),
                values.len()
            )));
        }
        for (p, (name, value)) in self.params.iter_mut().zip(values) {
            if p.name != name || p.value.shape() != value.shape() {
                return Err(EngineError::Parameters(format!(
                    "tensor {name} {:?} does not match {} {:?}",
                    value.shape(),
                    p.name,
                    p.value.shape()
                )));
            }
            *p = Parameter::new(name, value);
        }
        self.steps = 0;
        Ok(())
    }
}
