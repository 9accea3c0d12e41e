//! Adam with bias-corrected moment estimates.

use crate::error::{Error, Result};
use crate::neural::mlp::{Gradients, Mlp};

/// Optimizer state for one network: moment buffers shaped like the
/// parameters plus the shared hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Gradients,
    second_moment: Gradients,
    step_count: u64,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon_stability: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        AdamState {
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_stability: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Applies one Adam update to `params` in place.
    ///
    /// Rejects non-finite gradients before touching any state, naming the
    /// first offending layer.
    pub fn step(&mut self, params: &mut Mlp, grads: &Gradients) -> Result<()> {
        for (layer, (gw, gb)) in grads.weights.iter().zip(&grads.biases).enumerate() {
            if !gw.iter().chain(gb).all(|g| g.is_finite()) {
                return Err(Error::NonFiniteGradient { layer });
            }
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);

        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon_stability, self.learning_rate);
        let update = |param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };

        let num_layers = grads.weights.len();
        for l in 0..num_layers {
            update(
                &mut params.weights_mut()[l],
                &grads.weights[l],
                &mut self.first_moment.weights[l],
                &mut self.second_moment.weights[l],
            );
            update(
                &mut params.biases_mut()[l],
                &grads.biases[l],
                &mut self.first_moment.biases[l],
                &mut self.second_moment.biases[l],
            );
        }
        Ok(())
    }
}
