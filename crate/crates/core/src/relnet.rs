//! Relational networks: directed weighted graphs over agents whose edge
//! weight `w[i][j]` in `[0, 1]` encodes how much importance agent `i` places
//! on agent `j`'s outcomes.
//!
//! Two aggregations inject the graph into learning: team reward as
//! `sum_i sum_j w_ij * r_j` and team action-value as `sum_i sum_j w_ij * Q_j`.
//! Both are linear with per-agent coefficient `c_j = sum_i w_ij` (the column
//! sum), which is also the exact backpropagation weight for the mixed value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a learner combines per-agent quantities into the team signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingMode {
    /// Each agent trains on its own reward; no mixing.
    Independent,
    /// Per-agent rewards are graph-mixed into the team reward; values are
    /// summed uniformly.
    RewardRelational,
    /// Per-agent values are graph-mixed; the team reward comes from the
    /// environment.
    ValueRelational,
}

/// Raw graph record as stored in JSON files: `{label, n_agents, weights}`
/// with `weights` row-major of length `n_agents * n_agents`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub label: String,
    pub n_agents: usize,
    pub weights: Vec<f64>,
}

/// A defect found while validating a [`GraphSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `weights` length is not `n_agents` squared.
    NotSquare { expected: usize, got: usize },
    ZeroAgents,
    /// Entry `(from, to)` lies outside `[0, 1]` (or is not finite).
    OutOfRange { from: usize, to: usize, value: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotSquare { expected, got } => {
                write!(f, "weights must hold {expected} entries, got {got}")
            }
            Violation::ZeroAgents => write!(f, "n_agents must be positive"),
            Violation::OutOfRange { from, to, value } => {
                write!(f, "weight ({from}, {to}) = {value} outside [0, 1]")
            }
        }
    }
}

impl GraphSpec {
    /// Reports every defect; an empty list means the spec is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.n_agents == 0 {
            violations.push(Violation::ZeroAgents);
        }
        let expected = self.n_agents * self.n_agents;
        if self.weights.len() != expected {
            violations.push(Violation::NotSquare {
                expected,
                got: self.weights.len(),
            });
            return violations;
        }
        for (idx, &w) in self.weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                violations.push(Violation::OutOfRange {
                    from: idx / self.n_agents,
                    to: idx % self.n_agents,
                    value: w,
                });
            }
        }
        violations
    }

    pub fn build(self) -> Result<RelationalNetwork> {
        RelationalNetwork::from_spec(self)
    }
}

/// Validated, immutable relational network. Absent edges are stored as
/// weight zero, which is lossless for the two aggregation rules.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalNetwork {
    label: String,
    n_agents: usize,
    /// Row-major `n_agents x n_agents`; `weights[i * n + j]` is the weight
    /// agent `i` places on agent `j`.
    weights: Vec<f64>,
    /// Column sums, the per-agent aggregation coefficients.
    column_sums: Vec<f64>,
}

impl RelationalNetwork {
    pub fn from_spec(spec: GraphSpec) -> Result<Self> {
        let violations = spec.validate();
        if !violations.is_empty() {
            let listing = violations
                .iter()
                .map(Violation::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::InvalidArgument(format!(
                "relational network '{}': {listing}",
                spec.label
            )));
        }
        let n = spec.n_agents;
        let mut column_sums = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                column_sums[j] += spec.weights[i * n + j];
            }
        }
        Ok(RelationalNetwork {
            label: spec.label,
            n_agents: n,
            weights: spec.weights,
            column_sums,
        })
    }

    pub fn new(label: impl Into<String>, n_agents: usize, weights: Vec<f64>) -> Result<Self> {
        Self::from_spec(GraphSpec {
            label: label.into(),
            n_agents,
            weights,
        })
    }

    /// Self-loops of weight one: aggregation reduces to the plain sum.
    pub fn identity(label: impl Into<String>, n_agents: usize) -> Self {
        let mut weights = vec![0.0; n_agents * n_agents];
        for i in 0..n_agents {
            weights[i * n_agents + i] = 1.0;
        }
        Self::new(label, n_agents, weights).expect("identity graph is always valid")
    }

    /// Every edge present with weight one, including self-loops.
    pub fn complete(label: impl Into<String>, n_agents: usize) -> Self {
        Self::new(label, n_agents, vec![1.0; n_agents * n_agents])
            .expect("complete graph is always valid")
    }

    /// Complete graph with every edge into `excluded` removed (its column is
    /// zero, so the aggregations ignore that agent's values entirely).
    pub fn complete_excluding(
        label: impl Into<String>,
        n_agents: usize,
        excluded: usize,
    ) -> Result<Self> {
        if excluded >= n_agents {
            return Err(Error::InvalidArgument(format!(
                "excluded agent {excluded} out of range for {n_agents} agents"
            )));
        }
        let mut weights = vec![1.0; n_agents * n_agents];
        for i in 0..n_agents {
            weights[i * n_agents + excluded] = 0.0;
        }
        Self::new(label, n_agents, weights)
    }

    /// Every other agent splits its interest between itself (`self_weight`)
    /// and `target` (`target_weight`); the target keeps a self-loop of one.
    pub fn prioritizing(
        label: impl Into<String>,
        n_agents: usize,
        target: usize,
        self_weight: f64,
        target_weight: f64,
    ) -> Result<Self> {
        if target >= n_agents {
            return Err(Error::InvalidArgument(format!(
                "target agent {target} out of range for {n_agents} agents"
            )));
        }
        let mut weights = vec![0.0; n_agents * n_agents];
        for i in 0..n_agents {
            if i == target {
                weights[i * n_agents + i] = 1.0;
            } else {
                weights[i * n_agents + i] = self_weight;
                weights[i * n_agents + target] = target_weight;
            }
        }
        Self::new(label, n_agents, weights)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.weights[from * self.n_agents + to]
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            label: self.label.clone(),
            n_agents: self.n_agents,
            weights: self.weights.clone(),
        }
    }

    /// Loads a graph from its JSON file form.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GraphSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn check_len(&self, values: &[f64], what: &'static str) -> Result<()> {
        if values.len() != self.n_agents {
            return Err(Error::ShapeMismatch {
                what,
                expected: self.n_agents,
                got: values.len(),
            });
        }
        Ok(())
    }

    /// Graph-weighted team reward: `sum_i sum_j w_ij * r_j`.
    pub fn aggregate_rewards(&self, rewards: &[f64]) -> Result<f64> {
        self.check_len(rewards, "reward vector")?;
        Ok(self.mix(rewards))
    }

    /// Graph-weighted team value: `sum_i sum_j w_ij * q_j`.
    pub fn aggregate_values(&self, q_values: &[f64]) -> Result<f64> {
        self.check_len(q_values, "value vector")?;
        Ok(self.mix(q_values))
    }

    #[inline]
    fn mix(&self, values: &[f64]) -> f64 {
        // Column-sum form; with an identity graph every coefficient is
        // exactly 1.0, so the result is bit-identical to a plain sum.
        let mut acc = 0.0;
        for (c, v) in self.column_sums.iter().zip(values) {
            acc += c * v;
        }
        acc
    }

    /// Per-agent mixing coefficients `c_j = sum_i w_ij`; the gradient of the
    /// aggregated value with respect to `Q_j` is `c_j`.
    pub fn aggregation_gradient(&self) -> &[f64] {
        &self.column_sums
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Literal double-loop evaluation of the aggregation sum, independent of
    /// the column-sum implementation.
    fn double_loop(net: &RelationalNetwork, values: &[f64]) -> f64 {
        let n = net.n_agents();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += net.weight(i, j) * values[j];
            }
        }
        total
    }

    #[test]
    fn validate_accepts_identity() {
        let spec = RelationalNetwork::identity("id", 3).to_spec();
        assert!(spec.validate().is_empty());
    }

    #[test]
    fn validate_reports_out_of_range_entry() {
        let mut spec = RelationalNetwork::identity("id", 3).to_spec();
        spec.weights[0 * 3 + 1] = 1.5;
        let violations = spec.validate();
        assert_eq!(
            violations,
            vec![Violation::OutOfRange {
                from: 0,
                to: 1,
                value: 1.5
            }]
        );
    }

    #[test]
    fn validate_reports_shape_defect() {
        let spec = GraphSpec {
            label: "bad".into(),
            n_agents: 2,
            weights: vec![1.0, 0.0, 1.0],
        };
        assert!(matches!(
            spec.validate().as_slice(),
            [Violation::NotSquare { expected: 4, got: 3 }]
        ));
    }

    #[test]
    fn identity_graph_sums_rewards() {
        let net = RelationalNetwork::identity("id", 2);
        assert_eq!(net.aggregate_rewards(&[3.0, 5.0]).unwrap(), 8.0);
    }

    #[test]
    fn two_agent_example_graph() {
        // w11 = 0.3, w12 = 0.7, w22 = 1 with rewards (1, 2).
        let net =
            RelationalNetwork::new("pair", 2, vec![0.3, 0.7, 0.0, 1.0]).unwrap();
        let r = net.aggregate_rewards(&[1.0, 2.0]).unwrap();
        assert!((r - 3.7).abs() < 1e-15, "got {r}");
    }

    #[test]
    fn zero_rewards_aggregate_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.gen_range(1..6);
            let weights: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let net = RelationalNetwork::new("z", n, weights).unwrap();
            assert_eq!(net.aggregate_rewards(&vec![0.0; n]).unwrap(), 0.0);
        }
    }

    #[test]
    fn identity_values_recover_plain_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.gen_range(1..9);
            let net = RelationalNetwork::identity("id", n);
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let mixed = net.aggregate_values(&q).unwrap();
            let mut plain = 0.0;
            for &v in &q {
                plain += v;
            }
            // Bit-identical, not merely close.
            assert_eq!(mixed, plain);
        }
    }

    #[test]
    fn all_ones_graph_scales_by_agent_count() {
        let net = RelationalNetwork::complete("full", 4);
        let q = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(net.aggregate_values(&q).unwrap(), 40.0);
        assert_eq!(net.aggregation_gradient(), &[4.0, 4.0, 4.0, 4.0]);
    }

    #[test]
    fn zero_column_removes_agent_from_aggregate() {
        let net = RelationalNetwork::complete_excluding("cut", 4, 2).unwrap();
        let base = net.aggregate_values(&[1.0, 1.0, 0.0, 1.0]).unwrap();
        let varied = net.aggregate_values(&[1.0, 1.0, 123.0, 1.0]).unwrap();
        assert_eq!(base, varied);
        assert_eq!(net.aggregation_gradient()[2], 0.0);
    }

    #[test]
    fn prioritizing_graph_matches_hand_layout() {
        let net = RelationalNetwork::prioritizing("aid", 3, 2, 0.3, 0.7).unwrap();
        assert_eq!(net.weight(0, 0), 0.3);
        assert_eq!(net.weight(0, 2), 0.7);
        assert_eq!(net.weight(1, 1), 0.3);
        assert_eq!(net.weight(1, 2), 0.7);
        assert_eq!(net.weight(2, 2), 1.0);
        assert_eq!(net.weight(2, 0), 0.0);
        // Column sums: target collects 0.7 from each helper plus its own 1.
        assert_eq!(net.aggregation_gradient(), &[0.3, 0.3, 2.4]);
    }

    #[test]
    fn identity_gradient_is_all_ones() {
        let net = RelationalNetwork::identity("id", 5);
        assert_eq!(net.aggregation_gradient(), &[1.0; 5]);
    }

    #[test]
    fn aggregations_are_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let n = rng.gen_range(1..10);
            let weights: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let net = RelationalNetwork::new("lin", n, weights).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let combo: Vec<f64> = x.iter().zip(&y).map(|(xv, yv)| a * xv + b * yv).collect();
            let lhs = net.aggregate_values(&combo).unwrap();
            let rhs = a * net.aggregate_values(&x).unwrap() + b * net.aggregate_values(&y).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
        }
    }

    #[test]
    fn aggregate_equals_gradient_dot_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..12);
            let weights: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let net = RelationalNetwork::new("dot", n, weights).unwrap();
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let dot: f64 = net
                .aggregation_gradient()
                .iter()
                .zip(&q)
                .map(|(c, v)| c * v)
                .sum();
            let agg = net.aggregate_values(&q).unwrap();
            assert!((agg - dot).abs() <= 1e-12 * agg.abs().max(1.0));
        }
    }

    #[test]
    fn matrix_form_matches_double_loop_up_to_n16() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let n = rng.gen_range(1..=16);
            let weights: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let net = RelationalNetwork::new("bf", n, weights).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let fast = net.aggregate_values(&v).unwrap();
            let slow = double_loop(&net, &v);
            assert!(
                (fast - slow).abs() <= 1e-12 * fast.abs().max(slow.abs()).max(1.0),
                "n={n}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let net = RelationalNetwork::identity("id", 3);
        assert!(net.aggregate_rewards(&[1.0, 2.0]).is_err());
        assert!(net.aggregate_values(&[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let net = RelationalNetwork::prioritizing("aid", 4, 3, 0.3, 0.7).unwrap();
        let text = serde_json::to_string(&net.to_spec()).unwrap();
        let back = RelationalNetwork::from_json(&text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn json_rejects_invalid_weight() {
        let text = r#"{"label":"bad","n_agents":2,"weights":[0.5,2.0,0.0,1.0]}"#;
        assert!(RelationalNetwork::from_json(text).is_err());
    }
}
