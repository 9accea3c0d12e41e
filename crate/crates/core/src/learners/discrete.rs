//! Per-agent Q-networks for the discrete domain with three team couplings:
//! independent TD, reward mixing, and value mixing.

use rand::Rng;

use crate::error::{Error, Result};
use crate::learners::replay::{DiscreteTransition, ReplayMemory};
use crate::learners::LearnerConfig;
use crate::neural::{AdamState, Gradients, Mlp};
use crate::relnet::{MixingMode, RelationalNetwork};

/// One Q-network, one target network, and one optimizer per agent.
#[derive(Debug, Clone)]
pub struct DiscreteTeamLearner {
    mixing: MixingMode,
    gamma: f64,
    batch_size: usize,
    n_actions: usize,
    prediction: Vec<Mlp>,
    target: Vec<Mlp>,
    optimizers: Vec<AdamState>,
}

impl DiscreteTeamLearner {
    pub fn new<R: Rng + ?Sized>(
        config: &LearnerConfig,
        mixing: MixingMode,
        n_agents: usize,
        observation_size: usize,
        n_actions: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let mut sizes = vec![observation_size];
        sizes.extend_from_slice(&config.hidden_layers);
        sizes.push(n_actions);
        let mut prediction = Vec::with_capacity(n_agents);
        for _ in 0..n_agents {
            prediction.push(Mlp::new(&sizes, config.hidden_activation, rng)?);
        }
        let target = prediction.clone();
        let optimizers = prediction
            .iter()
            .map(|net| AdamState::new(net, config.learning_rate))
            .collect();
        Ok(DiscreteTeamLearner {
            mixing,
            gamma: config.gamma,
            batch_size: config.batch_size,
            n_actions,
            prediction,
            target,
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
        n_actions: usize,
    ) -> Result<Self> {
        config.validate()?;
        if prediction.len() != target.len() || prediction.is_empty() {
            return Err(Error::InvalidArgument(
                "prediction/target network counts must match and be non-empty".into(),
            ));
        }
        for net in prediction.iter().chain(&target) {
            net.validate()?;
            if net.output_size() != n_actions {
                return Err(Error::ShapeMismatch {
                    what: "Q-network output",
                    expected: n_actions,
                    got: net.output_size(),
                });
            }
        }
        let optimizers = prediction
            .iter()
            .map(|net| AdamState::new(net, config.learning_rate))
            .collect();
        Ok(DiscreteTeamLearner {
            mixing,
            gamma: config.gamma,
            batch_size: config.batch_size,
            n_actions,
            prediction,
            target,
            optimizers,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.prediction.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn mixing(&self) -> MixingMode {
        self.mixing
    }

    pub fn prediction_networks(&self) -> &[Mlp] {
        &self.prediction
    }

    pub fn target_networks(&self) -> &[Mlp] {
        &self.target
    }

    /// Epsilon-greedy joint action: per agent, explore uniformly with
    /// probability `epsilon`, otherwise the argmax Q (ties to the lowest
    /// action index).
    pub fn select_actions<R: Rng + ?Sized>(
        &self,
        observations: &[Vec<f64>],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        if observations.len() != self.n_agents() {
            return Err(Error::ShapeMismatch {
                what: "joint observation",
                expected: self.n_agents(),
                got: observations.len(),
            });
        }
        let mut actions = Vec::with_capacity(self.n_agents());
        for (agent, obs) in observations.iter().enumerate() {
            if rng.gen::<f64>() < epsilon {
                actions.push(rng.gen_range(0..self.n_actions));
            } else {
                actions.push(self.greedy_action(agent, obs)?);
            }
        }
        Ok(actions)
    }

    pub fn greedy_action(&self, agent: usize, observation: &[f64]) -> Result<usize> {
        let q = self.prediction[agent].evaluate(observation)?;
        argmax_lowest(&q)
    }

    /// One training iteration: samples a batch, forms the TD loss under the
    /// configured mixing, and applies one Adam step per agent. Returns
    /// `None` (no update) while the memory holds fewer than a batch.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        memory: &ReplayMemory<DiscreteTransition>,
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
            .prediction
            .iter()
            .map(Gradients::zeros_like)
            .collect();
        let mut total_loss = 0.0;
        let mut q_preds = vec![0.0; n];
        let mut q_next_max = vec![0.0; n];
        let mut loss_grads = vec![0.0; n];

        for transition in batch {
            if transition.reward.len() != n || transition.actions.len() != n {
                return Err(Error::InvalidState(
                    "stored transition does not match team size".into(),
                ));
            }
            let mut caches = Vec::with_capacity(n);
            for i in 0..n {
                let (q_all, cache) = self.prediction[i].forward(&transition.observations[i])?;
                q_preds[i] = q_all[transition.actions[i]];
                caches.push(cache);
                q_next_max[i] = if transition.done {
                    0.0
                } else {
                    let q_next = self.target[i].evaluate(&transition.next_observations[i])?;
                    max_value(&q_next)?
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
                        let td = transition.reward[i] + bootstrap - q_preds[i];
                        total_loss += td * td;
                        loss_grads[i] = -2.0 * td * inv_b;
                    }
                }
                MixingMode::RewardRelational => {
                    // Graph-mixed reward, uniformly summed values.
                    let r_team = relnet.aggregate_rewards(&transition.reward)?;
                    let q_tot: f64 = q_preds.iter().sum();
                    let bootstrap = if transition.done {
                        0.0
                    } else {
                        self.gamma * q_next_max.iter().sum::<f64>()
                    };
                    let td = r_team + bootstrap - q_tot;
                    total_loss += td * td;
                    for g in loss_grads.iter_mut() {
                        *g = -2.0 * td * inv_b;
                    }
                }
                MixingMode::ValueRelational => {
                    // Uniform team reward, graph-mixed values on both sides.
                    let r_team: f64 = transition.reward.iter().sum();
                    let q_tot = relnet.aggregate_values(&q_preds)?;
                    let bootstrap = if transition.done {
                        0.0
                    } else {
                        self.gamma * relnet.aggregate_values(&q_next_max)?
                    };
                    let td = r_team + bootstrap - q_tot;
                    total_loss += td * td;
                    let coefficients = relnet.aggregation_gradient();
                    for (g, c) in loss_grads.iter_mut().zip(coefficients) {
                        *g = -2.0 * td * c * inv_b;
                    }
                }
            }

            let mut output_gradient = vec![0.0; self.n_actions];
            for i in 0..n {
                output_gradient.fill(0.0);
                output_gradient[transition.actions[i]] = loss_grads[i];
                self.prediction[i].backward_accumulate(
                    &caches[i],
                    &output_gradient,
                    &mut grad_acc[i],
                )?;
            }
        }

        for i in 0..n {
            self.optimizers[i].step(&mut self.prediction[i], &grad_acc[i])?;
        }
        Ok(Some(total_loss * inv_b))
    }

    /// Copies every prediction network into its target network.
    pub fn sync_targets(&mut self) {
        for (target, source) in self.target.iter_mut().zip(&self.prediction) {
            target
                .hard_sync(source)
                .expect("prediction/target architectures always match");
        }
    }
}

fn argmax_lowest(values: &[f64]) -> Result<usize> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Q-values".into()));
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Ok(best)
}

fn max_value(values: &[f64]) -> Result<f64> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target Q-values".into()));
    }
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::replay::Transition;
    use crate::learners::EpsilonSchedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_config() -> LearnerConfig {
        LearnerConfig {
            gamma: 0.0,
            batch_size: 1,
            hidden_layers: vec![4],
            epsilon: EpsilonSchedule::new(1.0, 0.05, 100).unwrap(),
            ..LearnerConfig::default_discrete()
        }
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// A learner whose networks output fixed values: zero weights, chosen
    /// biases on the final layer.
    fn fixed_q_learner(q_values: &[Vec<f64>], mixing: MixingMode) -> DiscreteTeamLearner {
        let n_actions = q_values[0].len();
        let mut learner = DiscreteTeamLearner::new(
            &tiny_config(),
            mixing,
            q_values.len(),
            3,
            n_actions,
            &mut rng(0),
        )
        .unwrap();
        for (agent, values) in q_values.iter().enumerate() {
            for w in learner.prediction[agent].weights_mut() {
                w.fill(0.0);
            }
            let last = learner.prediction[agent].biases_mut().len() - 1;
            learner.prediction[agent].biases_mut()[last].copy_from_slice(values);
        }
        learner.sync_targets();
        learner
    }

    #[test]
    fn greedy_action_takes_argmax() {
        let learner = fixed_q_learner(&[vec![1.0, 9.0, 3.0, 2.0, 0.0]], MixingMode::Independent);
        let actions = learner
            .select_actions(&[vec![0.0; 3]], 0.0, &mut rng(1))
            .unwrap();
        assert_eq!(actions, vec![1]);
    }

    #[test]
    fn greedy_tie_breaks_to_lowest_index() {
        let learner = fixed_q_learner(&[vec![5.0, 5.0, 0.0, 0.0, 0.0]], MixingMode::Independent);
        let actions = learner
            .select_actions(&[vec![0.0; 3]], 0.0, &mut rng(2))
            .unwrap();
        assert_eq!(actions, vec![0]);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let learner = fixed_q_learner(&[vec![9.0, 0.0, 0.0, 0.0, 0.0]], MixingMode::Independent);
        let mut r = rng(3);
        let mut counts = [0usize; 5];
        for _ in 0..10_000 {
            let a = learner.select_actions(&[vec![0.0; 3]], 1.0, &mut r).unwrap();
            counts[a[0]] += 1;
        }
        // Binomial(10_000, 0.2): sigma = 40, so 3 sigma = 120.
        for &c in &counts {
            assert!((c as i64 - 2000).abs() < 120, "{counts:?}");
        }
    }

    #[test]
    fn non_finite_q_is_reported() {
        let learner = fixed_q_learner(
            &[vec![f64::INFINITY, 0.0, 0.0, 0.0, 0.0]],
            MixingMode::Independent,
        );
        assert!(matches!(
            learner.select_actions(&[vec![0.0; 3]], 0.0, &mut rng(4)),
            Err(Error::NonFinite(_))
        ));
    }

    fn one_transition(rewards: Vec<f64>, done: bool) -> DiscreteTransition {
        let n = rewards.len();
        Transition {
            observations: vec![vec![0.0; 3]; n],
            actions: vec![0; n],
            reward: rewards,
            next_observations: vec![vec![0.0; 3]; n],
            done,
        }
    }

    #[test]
    fn train_step_needs_a_full_batch() {
        let mut learner = fixed_q_learner(&[vec![0.0; 5]], MixingMode::Independent);
        let memory = ReplayMemory::new(10).unwrap();
        let relnet = RelationalNetwork::identity("id", 1);
        let loss = learner.train_step(&memory, &relnet, &mut rng(5)).unwrap();
        assert!(loss.is_none());
    }

    #[test]
    fn gamma_zero_reward_mixed_loss_is_squared_team_reward() {
        // Prediction Q values are zero; rewards (1, 2) under the identity
        // graph: TD = 3, loss = 9.
        let mut learner = fixed_q_learner(
            &[vec![0.0; 5], vec![0.0; 5]],
            MixingMode::RewardRelational,
        );
        let mut memory = ReplayMemory::new(10).unwrap();
        memory.push(one_transition(vec![1.0, 2.0], false));
        let relnet = RelationalNetwork::identity("id", 2);
        let loss = learner
            .train_step(&memory, &relnet, &mut rng(6))
            .unwrap()
            .unwrap();
        assert!((loss - 9.0).abs() < 1e-12, "loss {loss}");
    }

    #[test]
    fn terminal_transition_drops_bootstrap() {
        // Make target nets output large values; with done = true they must
        // not contaminate the target.
        let mut config = tiny_config();
        config.gamma = 0.9;
        let mut learner =
            DiscreteTeamLearner::new(&config, MixingMode::RewardRelational, 1, 3, 5, &mut rng(7))
                .unwrap();
        for w in learner.prediction[0].weights_mut() {
            w.fill(0.0);
        }
        let last = learner.prediction[0].biases_mut().len() - 1;
        learner.prediction[0].biases_mut()[last].fill(0.0);
        learner.sync_targets();
        learner.prediction[0].biases_mut()[last].fill(0.0);
        // Target net now emits 0 anyway; instead bias the target directly.
        learner.target[0].biases_mut()[last].fill(100.0);

        let mut memory = ReplayMemory::new(10).unwrap();
        memory.push(one_transition(vec![2.0], true));
        let relnet = RelationalNetwork::identity("id", 1);
        let loss = learner
            .train_step(&memory, &relnet, &mut rng(8))
            .unwrap()
            .unwrap();
        // TD = r_team - 0 = 2 exactly; the +100 target values are dropped.
        assert!((loss - 4.0).abs() < 1e-12, "loss {loss}");
    }

    #[test]
    fn zeroed_column_blocks_gradient_to_that_agent() {
        let mut learner = DiscreteTeamLearner::new(
            &tiny_config(),
            MixingMode::ValueRelational,
            3,
            3,
            5,
            &mut rng(9),
        )
        .unwrap();
        let before = learner.prediction[1].clone();
        let others_before = (learner.prediction[0].clone(), learner.prediction[2].clone());
        let mut memory = ReplayMemory::new(10).unwrap();
        memory.push(one_transition(vec![1.0, 1.0, 1.0], false));
        let relnet = RelationalNetwork::complete_excluding("cut", 3, 1).unwrap();
        learner.train_step(&memory, &relnet, &mut rng(10)).unwrap();
        // Agent 1's column is zero: its parameters must be untouched.
        assert_eq!(learner.prediction[1], before);
        assert_ne!(learner.prediction[0], others_before.0);
        assert_ne!(learner.prediction[2], others_before.1);
    }
}
