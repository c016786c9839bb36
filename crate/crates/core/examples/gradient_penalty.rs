//! The gradient penalty needs the gradient of a gradient: the critic's input
//! gradient is built as graph nodes, then differentiated again with respect to
//! the critic's parameters.

use popsynth::autodiff::{Graph, Tensor};
use popsynth::wgan::{penalty_at, CriticNet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A linear critic has input gradient equal to its weight vector, so the
    // penalty is (|w| - 1)^2 at every point.
    for w in [[0.6, 0.8], [3.0, 0.0], [0.0, 0.5]] {
        let critic =
            CriticNet::from_layers(vec![(Tensor::new(2, 1, w.to_vec())?, Tensor::zeros(1, 1))])?;
        let mut g = Graph::new();
        let vars = critic.params.bind(&mut g);
        let x = g.constant(Tensor::from_fn(4, 2, |r, c| (r + c) as f64));
        let p = penalty_at(&mut g, &critic, &vars, x)?;
        let grads = g.backward(p)?;
        println!(
            "w = {w:?}  penalty {:.6}  d/dw {:?}",
            g.value(p).item().unwrap_or(f64::NAN),
            grads[0].1.data()
        );
    }

    // A hidden layer makes the input gradient depend on x.
    let critic = CriticNet::new(3, 16, 1, 7);
    let mut g = Graph::new();
    let vars = critic.params.bind(&mut g);
    let x = g.constant(Tensor::from_fn(8, 3, |r, c| ((r * 3 + c) as f64).sin()));
    let p = penalty_at(&mut g, &critic, &vars, x)?;
    let grads = g.backward(p)?;
    let norm: f64 = grads
        .iter()
        .flat_map(|(_, t)| t.data().iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    println!(
        "mlp critic penalty {:.6}, parameter gradient norm {norm:.6}",
        g.value(p).item().unwrap_or(f64::NAN)
    );
    Ok(())
}
