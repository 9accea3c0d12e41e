//! Multilayer perceptron with explicit forward caches and exact backprop.
//!
//! Weights are plain `f64` buffers (row-major, shape `out_dim x in_dim` per
//! layer) so parameter sets are cheap to clone, compare, and serialize
//! bit-exactly. All learning math in this crate runs in 64-bit floats.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise activation applied after a layer's affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative as a function of the pre-activation `z`.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let y = z.tanh();
                1.0 - y * y
            }
            Activation::Identity => 1.0,
        }
    }
}

/// A fully connected feed-forward network.
///
/// `layer_sizes = [in, h1, ..., out]`; layer `l` maps `layer_sizes[l]`
/// inputs to `layer_sizes[l + 1]` outputs. Hidden layers share one
/// activation; the output layer is always identity so the network can emit
/// unbounded action values or basis coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-layer values recorded by [`Mlp::forward`], sufficient for one
/// backward pass over the same parameters.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `post[l]` is the input to layer `l`; `post[num_layers]` is the output.
    post: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
    layer_sizes: Vec<usize>,
}

/// Parameter gradients with the same shapes as the network they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Accumulates `other` into `self` (`self += other`).
    pub fn accumulate(&mut self, other: &Gradients) {
        for (acc, g) in self.weights.iter_mut().zip(&other.weights) {
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v;
            }
        }
        for (acc, g) in self.biases.iter_mut().zip(&other.biases) {
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            for v in w {
                *v *= factor;
            }
        }
        for b in &mut self.biases {
            for v in b {
                *v *= factor;
            }
        }
    }
}

impl Mlp {
    /// Builds a network with fan-in scaled uniform weights and zero biases.
    ///
    /// Every hidden layer uses `hidden`; the output layer is identity.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArgument(
                "network needs at least an input and an output layer".into(),
            ));
        }
        if layer_sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument("layer sizes must be positive".into()));
        }
        let num_layers = layer_sizes.len() - 1;
        let mut weights = Vec::with_capacity(num_layers);
        let mut biases = Vec::with_capacity(num_layers);
        let mut activations = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let fan_in = layer_sizes[l];
            let fan_out = layer_sizes[l + 1];
            let limit = 1.0 / (fan_in as f64).sqrt();
            let mut w = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in * fan_out {
                w.push(rng.gen_range(-limit..=limit));
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
            activations.push(if l + 1 == num_layers {
                Activation::Identity
            } else {
                hidden
            });
        }
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activations,
            weights,
            biases,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn same_architecture(&self, other: &Mlp) -> bool {
        self.layer_sizes == other.layer_sizes && self.activations == other.activations
    }

    /// Forward pass that records the per-layer cache needed by [`Mlp::backward`].
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(input)?;
        let mut post = Vec::with_capacity(self.num_layers() + 1);
        let mut pre = Vec::with_capacity(self.num_layers());
        post.push(input.to_vec());
        for l in 0..self.num_layers() {
            let z = self.affine(l, post.last().unwrap());
            let y = z.iter().map(|&v| self.activations[l].apply(v)).collect();
            pre.push(z);
            post.push(y);
        }
        let output = post.last().unwrap().clone();
        Ok((
            output,
            ForwardCache {
                post,
                pre,
                layer_sizes: self.layer_sizes.clone(),
            },
        ))
    }

    /// Forward pass without a cache, for target evaluation and greedy play.
    pub fn evaluate(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        for l in 0..self.num_layers() {
            let mut z = self.affine(l, &current);
            for v in &mut z {
                *v = self.activations[l].apply(*v);
            }
            current = z;
        }
        Ok(current)
    }

    #[inline]
    fn affine(&self, layer: usize, input: &[f64]) -> Vec<f64> {
        let in_dim = self.layer_sizes[layer];
        let out_dim = self.layer_sizes[layer + 1];
        let w = &self.weights[layer];
        let b = &self.biases[layer];
        let mut out = Vec::with_capacity(out_dim);
        for o in 0..out_dim {
            let row = &w[o * in_dim..(o + 1) * in_dim];
            let mut sum = 0.0;
            for (wi, xi) in row.iter().zip(input) {
                sum += wi * xi;
            }
            out.push(sum + b[o]);
        }
        out
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::ShapeMismatch {
                what: "network input",
                expected: self.input_size(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Exact chain-rule backward pass through the cached activations.
    ///
    /// Returns parameter gradients plus the gradient with respect to the
    /// network input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
    ) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_accumulate(cache, output_gradient, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Backward pass that adds this sample's parameter gradients into `acc`
    /// (mini-batch accumulation without intermediate buffers). Returns the
    /// input gradient.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
        acc: &mut Gradients,
    ) -> Result<Vec<f64>> {
        if cache.layer_sizes != self.layer_sizes {
            return Err(Error::InvalidState(
                "forward cache does not match network architecture".into(),
            ));
        }
        if output_gradient.len() != self.output_size() {
            return Err(Error::ShapeMismatch {
                what: "output gradient",
                expected: self.output_size(),
                got: output_gradient.len(),
            });
        }
        if acc.weights.len() != self.weights.len()
            || acc
                .weights
                .iter()
                .zip(&self.weights)
                .any(|(a, w)| a.len() != w.len())
        {
            return Err(Error::InvalidState(
                "gradient accumulator does not match network architecture".into(),
            ));
        }

        let mut delta: Vec<f64> = output_gradient
            .iter()
            .zip(&cache.pre[self.num_layers() - 1])
            .map(|(&g, &z)| g * self.activations[self.num_layers() - 1].derivative(z))
            .collect();

        for l in (0..self.num_layers()).rev() {
            let in_dim = self.layer_sizes[l];
            let layer_input = &cache.post[l];
            let gw = &mut acc.weights[l];
            for (o, &d) in delta.iter().enumerate() {
                acc.biases[l][o] += d;
                let row = &mut gw[o * in_dim..(o + 1) * in_dim];
                for (slot, &x) in row.iter_mut().zip(layer_input) {
                    *slot += d * x;
                }
            }
            // Gradient into the layer input; becomes delta for layer l-1.
            let mut input_grad = vec![0.0; in_dim];
            let w = &self.weights[l];
            for (o, &d) in delta.iter().enumerate() {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                for (slot, &wi) in input_grad.iter_mut().zip(row) {
                    *slot += wi * d;
                }
            }
            if l == 0 {
                return Ok(input_grad);
            }
            delta = input_grad
                .iter()
                .zip(&cache.pre[l - 1])
                .map(|(&g, &z)| g * self.activations[l - 1].derivative(z))
                .collect();
        }
        unreachable!("loop always returns at l == 0");
    }

    /// Overwrites `self`'s parameters with `source`'s. The copies do not alias.
    pub fn hard_sync(&mut self, source: &Mlp) -> Result<()> {
        if !self.same_architecture(source) {
            return Err(Error::ArchitectureMismatch);
        }
        self.weights.clone_from(&source.weights);
        self.biases.clone_from(&source.biases);
        Ok(())
    }

    /// Polyak update: every parameter becomes `(1 - tau) * own + tau * source`.
    pub fn soft_update(&mut self, source: &Mlp, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in [0, 1], got {tau}"
            )));
        }
        if !self.same_architecture(source) {
            return Err(Error::ArchitectureMismatch);
        }
        if tau == 1.0 {
            // Exactly hard_sync; avoids round-off in the convex combination.
            return self.hard_sync(source);
        }
        for (t, s) in self.weights.iter_mut().zip(&source.weights) {
            for (tv, sv) in t.iter_mut().zip(s) {
                *tv = (1.0 - tau) * *tv + tau * sv;
            }
        }
        for (t, s) in self.biases.iter_mut().zip(&source.biases) {
            for (tv, sv) in t.iter_mut().zip(s) {
                *tv = (1.0 - tau) * *tv + tau * sv;
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Serializes the full parameter record as JSON. `f64` values survive the
    /// round trip bit-exactly (shortest round-trip float formatting).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serialization cannot fail")
    }

    /// Parses and validates a parameter record produced by [`Mlp::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let net: Mlp = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Checks shape consistency and finiteness of every stored value.
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument("bad layer sizes".into()));
        }
        let num_layers = self.layer_sizes.len() - 1;
        if self.weights.len() != num_layers
            || self.biases.len() != num_layers
            || self.activations.len() != num_layers
        {
            return Err(Error::ShapeMismatch {
                what: "layer count",
                expected: num_layers,
                got: self.weights.len(),
            });
        }
        for l in 0..num_layers {
            let expected_w = self.layer_sizes[l] * self.layer_sizes[l + 1];
            if self.weights[l].len() != expected_w {
                return Err(Error::ShapeMismatch {
                    what: "weight matrix",
                    expected: expected_w,
                    got: self.weights[l].len(),
                });
            }
            if self.biases[l].len() != self.layer_sizes[l + 1] {
                return Err(Error::ShapeMismatch {
                    what: "bias vector",
                    expected: self.layer_sizes[l + 1],
                    got: self.biases[l].len(),
                });
            }
            let finite = self.weights[l].iter().chain(&self.biases[l]).all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite(format!("parameters of layer {l}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Straight-line matrix-multiply evaluation, kept independent of the
    /// implementation's forward path.
    fn reference_forward(net: &Mlp, input: &[f64]) -> Vec<f64> {
        let sizes = net.layer_sizes();
        let mut x = input.to_vec();
        for l in 0..sizes.len() - 1 {
            let (in_dim, out_dim) = (sizes[l], sizes[l + 1]);
            let mut next = vec![0.0; out_dim];
            for o in 0..out_dim {
                let mut sum = 0.0;
                for i in 0..in_dim {
                    sum += net.weights()[l][o * in_dim + i] * x[i];
                }
                next[o] = sum + net.biases[l][o];
            }
            for v in &mut next {
                *v = net.activations[l].apply(*v);
            }
            x = next;
        }
        x
    }

    #[test]
    fn zero_weights_pass_bias_through() {
        let mut net = Mlp::new(&[3, 2], Activation::Identity, &mut rng(0)).unwrap();
        for w in net.weights_mut() {
            w.fill(0.0);
        }
        net.biases_mut()[0].copy_from_slice(&[0.5, -1.25]);
        let out = net.evaluate(&[9.0, -3.0, 7.0]).unwrap();
        assert_eq!(out, vec![0.5, -1.25]);
    }

    #[test]
    fn identity_layer_is_identity() {
        let mut net = Mlp::new(&[3, 3], Activation::Identity, &mut rng(1)).unwrap();
        let w = &mut net.weights_mut()[0];
        w.fill(0.0);
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let x = [0.25, -4.0, 2.5];
        assert_eq!(net.evaluate(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn forward_matches_independent_evaluation() {
        let mut r = rng(7);
        for trial in 0..20 {
            let net = Mlp::new(&[4, 6, 3], Activation::Tanh, &mut r).unwrap();
            let input: Vec<f64> = (0..4).map(|_| r.gen_range(-2.0..2.0)).collect();
            let (out, _) = net.forward(&input).unwrap();
            let expected = reference_forward(&net, &input);
            for (a, b) in out.iter().zip(&expected) {
                let rel = (a - b).abs() / b.abs().max(1e-9);
                assert!(rel < 1e-12, "trial {trial}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let net = Mlp::new(&[5, 8, 2], Activation::Relu, &mut rng(3)).unwrap();
        let input = [0.1, -0.9, 0.4, 2.0, -1.5];
        let a = net.evaluate(&input).unwrap();
        let b = net.evaluate(&input).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_rejects_wrong_input_size() {
        let net = Mlp::new(&[4, 2], Activation::Relu, &mut rng(0)).unwrap();
        assert!(matches!(
            net.evaluate(&[1.0, 2.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = Mlp::new(&[3, 5, 2], Activation::Tanh, &mut rng(11)).unwrap();
        let (_, cache) = net.forward(&[0.3, -0.2, 0.9]).unwrap();
        let (grads, input_grad) = net.backward(&cache, &[0.0, 0.0]).unwrap();
        assert!(grads.weights.iter().flatten().all(|&g| g == 0.0));
        assert!(grads.biases.iter().flatten().all(|&g| g == 0.0));
        assert!(input_grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_net_input_gradient_is_weight_transpose_product() {
        let mut net = Mlp::new(&[3, 2], Activation::Identity, &mut rng(5)).unwrap();
        net.weights_mut()[0].copy_from_slice(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (_, cache) = net.forward(&[0.5, 1.5, -0.5]).unwrap();
        let g = [2.0, -1.0];
        let (_, input_grad) = net.backward(&cache, &g).unwrap();
        // W^T g for row-major W = [[1,2,3],[4,5,6]].
        assert_eq!(input_grad, vec![
            1.0 * 2.0 + 4.0 * -1.0,
            2.0 * 2.0 + 5.0 * -1.0,
            3.0 * 2.0 + 6.0 * -1.0
        ]);
    }

    /// Central finite differences on a scalar functional of the output.
    fn finite_difference_check(sizes: &[usize], hidden: Activation, seed: u64) {
        let mut r = rng(seed);
        let net = Mlp::new(sizes, hidden, &mut r).unwrap();
        let input: Vec<f64> = (0..sizes[0]).map(|_| r.gen_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..*sizes.last().unwrap())
            .map(|_| r.gen_range(-1.0..1.0))
            .collect();
        let loss = |n: &Mlp| -> f64 {
            let out = n.evaluate(&input).unwrap();
            out.iter().zip(&probe).map(|(o, p)| o * p).sum()
        };
        let (_, cache) = net.forward(&input).unwrap();
        let (grads, input_grad) = net.backward(&cache, &probe).unwrap();

        let h = 1e-5;
        let mut checked = 0;
        for l in 0..sizes.len() - 1 {
            for idx in 0..net.weights()[l].len().min(6) {
                let mut plus = net.clone();
                plus.weights_mut()[l][idx] += h;
                let mut minus = net.clone();
                minus.weights_mut()[l][idx] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let analytic = grads.weights[l][idx];
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(err < 1e-4, "layer {l} weight {idx}: {analytic} vs {numeric}");
                checked += 1;
            }
        }
        assert!(checked > 0);
        // Input gradient via the same scalar functional.
        for i in 0..input.len() {
            let mut plus = input.clone();
            plus[i] += h;
            let mut minus = input.clone();
            minus[i] -= h;
            let f = |x: &[f64]| {
                let out = net.evaluate(x).unwrap();
                out.iter().zip(&probe).map(|(o, p)| o * p).sum::<f64>()
            };
            let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
            let analytic = input_grad[i];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(err < 1e-4, "input {i}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn backward_matches_finite_differences_tanh() {
        finite_difference_check(&[4, 8, 8, 3], Activation::Tanh, 17);
    }

    #[test]
    fn backward_matches_finite_differences_relu() {
        finite_difference_check(&[5, 12, 4], Activation::Relu, 23);
    }

    #[test]
    fn backward_rejects_stale_cache() {
        let a = Mlp::new(&[3, 4, 2], Activation::Relu, &mut rng(2)).unwrap();
        let b = Mlp::new(&[3, 5, 2], Activation::Relu, &mut rng(2)).unwrap();
        let (_, cache) = a.forward(&[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            b.backward(&cache, &[1.0, 1.0]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn hard_sync_copies_without_aliasing() {
        let mut r = rng(9);
        let mut source = Mlp::new(&[2, 3, 1], Activation::Tanh, &mut r).unwrap();
        let mut target = Mlp::new(&[2, 3, 1], Activation::Tanh, &mut r).unwrap();
        target.hard_sync(&source).unwrap();
        assert_eq!(target, source);
        // Mutating the source must not show through.
        source.weights_mut()[0][0] += 1.0;
        assert_ne!(target, source);
        // Idempotence.
        let snapshot = target.clone();
        target.hard_sync(&snapshot).unwrap();
        assert_eq!(target, snapshot);
    }

    #[test]
    fn hard_sync_rejects_architecture_mismatch() {
        let mut r = rng(10);
        let source = Mlp::new(&[2, 3, 1], Activation::Tanh, &mut r).unwrap();
        let mut target = Mlp::new(&[2, 4, 1], Activation::Tanh, &mut r).unwrap();
        assert!(matches!(
            target.hard_sync(&source),
            Err(Error::ArchitectureMismatch)
        ));
    }

    #[test]
    fn soft_update_convex_combination() {
        let mut r = rng(12);
        let mut source = Mlp::new(&[1, 1], Activation::Identity, &mut r).unwrap();
        let mut target = Mlp::new(&[1, 1], Activation::Identity, &mut r).unwrap();
        source.weights_mut()[0][0] = 1.0;
        target.weights_mut()[0][0] = 0.0;

        let mut t0 = target.clone();
        t0.soft_update(&source, 0.0).unwrap();
        assert_eq!(t0.weights()[0][0], 0.0);

        let mut t1 = target.clone();
        t1.soft_update(&source, 1.0).unwrap();
        assert_eq!(t1.weights()[0][0], 1.0);

        let mut t = target.clone();
        t.soft_update(&source, 0.01).unwrap();
        assert!((t.weights()[0][0] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn soft_update_tau_one_equals_hard_sync() {
        let mut r = rng(13);
        let source = Mlp::new(&[3, 7, 2], Activation::Relu, &mut r).unwrap();
        let mut a = Mlp::new(&[3, 7, 2], Activation::Relu, &mut r).unwrap();
        let mut b = a.clone();
        a.soft_update(&source, 1.0).unwrap();
        b.hard_sync(&source).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn soft_update_rejects_bad_tau() {
        let mut r = rng(14);
        let source = Mlp::new(&[2, 2], Activation::Tanh, &mut r).unwrap();
        let mut target = source.clone();
        assert!(target.soft_update(&source, -0.1).is_err());
        assert!(target.soft_update(&source, 1.1).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let net = Mlp::new(&[6, 16, 5], Activation::Relu, &mut rng(21)).unwrap();
        let restored = Mlp::from_json(&net.to_json()).unwrap();
        assert_eq!(net, restored);
        assert_eq!(net.to_json(), restored.to_json());
    }

    #[test]
    fn checkpoint_rejects_inconsistent_shapes() {
        let net = Mlp::new(&[2, 2], Activation::Tanh, &mut rng(22)).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&net.to_json()).unwrap();
        doc["weights"][0] = serde_json::json!([1.0, 2.0, 3.0]);
        assert!(Mlp::from_json(&doc.to_string()).is_err());
    }
}
