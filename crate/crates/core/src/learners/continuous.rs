//! Q-functional team learners for the continuous domain.
//!
//! Each agent's network emits polynomial basis coefficients for its action
//! space; maxima over actions are approximated by scoring a slate of uniform
//! samples. Team coupling is either independent (each agent regresses on the
//! team reward alone) or value-relational (graph-mixed action values).

use rand::Rng;

use crate::error::{Error, Result};
use crate::learners::functional::{FunctionalHead, PolynomialBasis};
use crate::learners::replay::{ContinuousTransition, ReplayMemory};
use crate::learners::LearnerConfig;
use crate::neural::{AdamState, Gradients, Mlp};
use crate::relnet::{MixingMode, RelationalNetwork};

pub const CONTINUOUS_ACTION_DIM: usize = 2;

#[derive(Debug, Clone)]
pub struct ContinuousTeamLearner {
    mixing: MixingMode,
    gamma: f64,
    batch_size: usize,
    soft_tau: f64,
    /// Candidate actions scored per maximization during training targets.
    action_samples: usize,
    heads: Vec<FunctionalHead>,
    target_heads: Vec<FunctionalHead>,
    optimizers: Vec<AdamState>,
}

impl ContinuousTeamLearner {
    pub fn new<R: Rng + ?Sized>(
        config: &LearnerConfig,
        mixing: MixingMode,
        n_agents: usize,
        observation_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if mixing == MixingMode::RewardRelational {
            return Err(Error::Config(
                "continuous teams observe only a team reward; reward mixing needs per-agent rewards"
                    .into(),
            ));
        }
        let basis = PolynomialBasis::new(config.basis_degree, CONTINUOUS_ACTION_DIM)?;
        let mut sizes = vec![observation_size];
        sizes.extend_from_slice(&config.hidden_layers);
        sizes.push(basis.size());
        let mut heads = Vec::with_capacity(n_agents);
        for _ in 0..n_agents {
            let net = Mlp::new(&sizes, config.hidden_activation, rng)?;
            heads.push(FunctionalHead::new(basis.clone(), net)?);
        }
        let target_heads = heads.clone();
        let optimizers = heads
            .iter()
            .map(|h| AdamState::new(h.network(), config.learning_rate))
            .collect();
        Ok(ContinuousTeamLearner {
            mixing,
            gamma: config.gamma,
            batch_size: config.batch_size,
            soft_tau: config.soft_tau,
            action_samples: config.action_samples,
            heads,
            target_heads,
            optimizers,
        })
    }

    /// Rebuilds a learner around checkpointed networks (fresh optimizer
    /// moments).
    pub fn from_networks(
        config: &LearnerConfig,
        mixing: MixingMode,
        prediction: Vec<Mlp>,
        target: Vec<Mlp>,
    ) -> Result<Self> {
        config.validate()?;
        if prediction.len() != target.len() || prediction.is_empty() {
            return Err(Error::InvalidArgument(
                "prediction/target network counts must match and be non-empty".into(),
            ));
        }
        let basis = PolynomialBasis::new(config.basis_degree, CONTINUOUS_ACTION_DIM)?;
        let mut heads = Vec::with_capacity(prediction.len());
        for net in prediction {
            net.validate()?;
            heads.push(FunctionalHead::new(basis.clone(), net)?);
        }
        let mut target_heads = Vec::with_capacity(target.len());
        for net in target {
            net.validate()?;
            target_heads.push(FunctionalHead::new(basis.clone(), net)?);
        }
        let optimizers = heads
            .iter()
            .map(|h| AdamState::new(h.network(), config.learning_rate))
            .collect();
        Ok(ContinuousTeamLearner {
            mixing,
            gamma: config.gamma,
            batch_size: config.batch_size,
            soft_tau: config.soft_tau,
            action_samples: config.action_samples,
            heads,
            target_heads,
            optimizers,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.heads.len()
    }

    pub fn mixing(&self) -> MixingMode {
        self.mixing
    }

    pub fn heads(&self) -> &[FunctionalHead] {
        &self.heads
    }

    pub fn prediction_networks(&self) -> Vec<&Mlp> {
        self.heads.iter().map(|h| h.network()).collect()
    }

    pub fn target_networks(&self) -> Vec<&Mlp> {
        self.target_heads.iter().map(|h| h.network()).collect()
    }

    /// Sampled-argmax action selection: per agent, draw `sample_count`
    /// uniform candidates in the action box, keep the best-scoring one, and
    /// with probability `epsilon` perturb it with uniform noise of
    /// half-width 0.2 (clamped back into the box).
    pub fn select_actions<R: Rng + ?Sized>(
        &self,
        observations: &[Vec<f64>],
        epsilon: f64,
        sample_count: usize,
        rng: &mut R,
    ) -> Result<Vec<[f64; CONTINUOUS_ACTION_DIM]>> {
        if observations.len() != self.n_agents() {
            return Err(Error::ShapeMismatch {
                what: "joint observation",
                expected: self.n_agents(),
                got: observations.len(),
            });
        }
        if sample_count == 0 {
            return Err(Error::InvalidArgument(
                "sample_count must be at least 1".into(),
            ));
        }
        let mut joint = Vec::with_capacity(self.n_agents());
        for (agent, obs) in observations.iter().enumerate() {
            let coefficients = self.heads[agent].coefficients(obs)?;
            if coefficients.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "coefficients of agent {agent}"
                )));
            }
            let basis = self.heads[agent].basis();
            let mut best = [0.0; CONTINUOUS_ACTION_DIM];
            let mut best_q = f64::NEG_INFINITY;
            for _ in 0..sample_count {
                let candidate = [
                    rng.gen_range(-1.0..=1.0),
                    rng.gen_range(-1.0..=1.0),
                ];
                let q = basis.evaluate(&coefficients, &candidate)?;
                if q > best_q {
                    best_q = q;
                    best = candidate;
                }
            }
            if rng.gen::<f64>() < epsilon {
                for component in best.iter_mut() {
                    *component = (*component + rng.gen_range(-0.2..=0.2)).clamp(-1.0, 1.0);
                }
            }
            joint.push(best);
        }
        Ok(joint)
    }

    /// One training iteration with the sampled-max bootstrap target; applies
    /// one Adam step per agent and a soft target update. Returns `None`
    /// while the memory holds fewer than a batch.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        memory: &ReplayMemory<ContinuousTransition>,
        relnet: &RelationalNetwork,
        rng: &mut R,
    ) -> Result<Option<f64>> {
        if memory.len() < self.batch_size {
            return Ok(None);
        }
        let n = self.n_agents();
        if relnet.n_agents() != n {
            return Err(Error::ShapeMismatch {
                what: "relational network size",
                expected: n,
                got: relnet.n_agents(),
            });
        }
        let batch = memory.sample(rng, self.batch_size);
        let inv_b = 1.0 / self.batch_size as f64;

        let mut grad_acc: Vec<Gradients> = self
            .heads
            .iter()
            .map(|h| Gradients::zeros_like(h.network()))
            .collect();
        let mut total_loss = 0.0;
        let mut q_preds = vec![0.0; n];
        let mut q_next_max = vec![0.0; n];
        let mut loss_grads = vec![0.0; n];

        for transition in batch {
            if transition.actions.len() != n {
                return Err(Error::InvalidState(
                    "stored transition does not match team size".into(),
                ));
            }
            let mut caches = Vec::with_capacity(n);
            let mut features = Vec::with_capacity(n);
            for i in 0..n {
                let basis = self.heads[i].basis();
                let (coefficients, cache) =
                    self.heads[i].network().forward(&transition.observations[i])?;
                let phi = basis.features(&transition.actions[i])?;
                q_preds[i] = phi
                    .iter()
                    .zip(&coefficients)
                    .map(|(p, c)| p * c)
                    .sum::<f64>();
                caches.push(cache);
                features.push(phi);
                q_next_max[i] = if transition.done {
                    0.0
                } else {
                    let target_coeffs =
                        self.target_heads[i].coefficients(&transition.next_observations[i])?;
                    sampled_max(basis, &target_coeffs, self.action_samples, rng)?
                };
            }

            match self.mixing {
                MixingMode::Independent => {
                    for i in 0..n {
                        let bootstrap = if transition.done {
                            0.0
                        } else {
                            self.gamma * q_next_max[i]
                        };
                        let td = transition.reward + bootstrap - q_preds[i];
                        total_loss += td * td;
                        loss_grads[i] = -2.0 * td * inv_b;
                    }
                }
                MixingMode::ValueRelational => {
                    let q_tot = relnet.aggregate_values(&q_preds)?;
                    let bootstrap = if transition.done {
                        0.0
                    } else {
                        self.gamma * relnet.aggregate_values(&q_next_max)?
                    };
                    let td = transition.reward + bootstrap - q_tot;
                    total_loss += td * td;
                    let coefficients = relnet.aggregation_gradient();
                    for (g, c) in loss_grads.iter_mut().zip(coefficients) {
                        *g = -2.0 * td * c * inv_b;
                    }
                }
                MixingMode::RewardRelational => unreachable!("rejected at construction"),
            }

            for i in 0..n {
                let output_gradient: Vec<f64> =
                    features[i].iter().map(|p| p * loss_grads[i]).collect();
                self.heads[i].network().backward_accumulate(
                    &caches[i],
                    &output_gradient,
                    &mut grad_acc[i],
                )?;
            }
        }

        for i in 0..n {
            self.optimizers[i].step(self.heads[i].network_mut(), &grad_acc[i])?;
        }
        for (target, source) in self.target_heads.iter_mut().zip(&self.heads) {
            target
                .network_mut()
                .soft_update(source.network(), self.soft_tau)?;
        }
        Ok(Some(total_loss * inv_b))
    }
}

/// Maximum functional value over `count` uniform candidate actions.
fn sampled_max<R: Rng + ?Sized>(
    basis: &PolynomialBasis,
    coefficients: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<f64> {
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("target coefficients".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for _ in 0..count {
        let candidate = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        let q = basis.evaluate(coefficients, &candidate)?;
        if q > best {
            best = q;
        }
    }
    Ok(best)
}
