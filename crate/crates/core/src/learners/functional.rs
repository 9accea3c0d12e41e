//! Q-functionals: a network maps the state to coefficients over a fixed
//! polynomial action basis, so many candidate actions can be scored with one
//! forward pass and a handful of dot products.

use crate::error::{Error, Result};
use crate::neural::Mlp;

/// Monomial basis over the action space: every monomial of total degree at
/// most `degree`, enumerated grade by grade starting with the constant 1,
/// and within a grade by descending power of the leading components.
///
/// For `degree = 2`, `action_dim = 2` the order is
/// `1, a1, a2, a1^2, a1*a2, a2^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialBasis {
    degree: usize,
    action_dim: usize,
    exponents: Vec<Vec<u32>>,
}

impl PolynomialBasis {
    pub fn new(degree: usize, action_dim: usize) -> Result<Self> {
        if degree == 0 || action_dim == 0 {
            return Err(Error::InvalidArgument(
                "basis degree and action dimension must be positive".into(),
            ));
        }
        let mut exponents = Vec::new();
        for grade in 0..=degree {
            let mut current = vec![0u32; action_dim];
            enumerate_grade(grade as u32, 0, &mut current, &mut exponents);
        }
        Ok(PolynomialBasis {
            degree,
            action_dim,
            exponents,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Number of coefficients: C(action_dim + degree, degree).
    pub fn size(&self) -> usize {
        self.exponents.len()
    }

    /// Feature vector `phi(action)`, one entry per monomial.
    pub fn features(&self, action: &[f64]) -> Result<Vec<f64>> {
        if action.len() != self.action_dim {
            return Err(Error::ShapeMismatch {
                what: "action",
                expected: self.action_dim,
                got: action.len(),
            });
        }
        Ok(self
            .exponents
            .iter()
            .map(|exps| {
                exps.iter()
                    .zip(action)
                    .map(|(&e, &a)| a.powi(e as i32))
                    .product()
            })
            .collect())
    }

    /// `Q(action) = coefficients . phi(action)`.
    pub fn evaluate(&self, coefficients: &[f64], action: &[f64]) -> Result<f64> {
        if coefficients.len() != self.size() {
            return Err(Error::ShapeMismatch {
                what: "coefficient vector",
                expected: self.size(),
                got: coefficients.len(),
            });
        }
        let phi = self.features(action)?;
        Ok(phi.iter().zip(coefficients).map(|(p, c)| p * c).sum())
    }

    /// Scores a slate of candidate actions against one coefficient vector.
    pub fn evaluate_many(&self, coefficients: &[f64], actions: &[Vec<f64>]) -> Result<Vec<f64>> {
        actions
            .iter()
            .map(|a| self.evaluate(coefficients, a))
            .collect()
    }
}

fn enumerate_grade(
    remaining: u32,
    position: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if position + 1 == current.len() {
        current[position] = remaining;
        out.push(current.clone());
        return;
    }
    // Highest power of the leading component first.
    for e in (0..=remaining).rev() {
        current[position] = e;
        enumerate_grade(remaining - e, position + 1, current, out);
    }
    current[position] = 0;
}

/// A per-agent continuous value approximator: the emitting network turns an
/// observation into basis coefficients.
#[derive(Debug, Clone)]
pub struct FunctionalHead {
    basis: PolynomialBasis,
    network: Mlp,
}

impl FunctionalHead {
    pub fn new(basis: PolynomialBasis, network: Mlp) -> Result<Self> {
        if network.output_size() != basis.size() {
            return Err(Error::ShapeMismatch {
                what: "coefficient network output",
                expected: basis.size(),
                got: network.output_size(),
            });
        }
        Ok(FunctionalHead { basis, network })
    }

    pub fn basis(&self) -> &PolynomialBasis {
        &self.basis
    }

    pub fn network(&self) -> &Mlp {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut Mlp {
        &mut self.network
    }

    /// Emits the coefficient vector for one observation.
    pub fn coefficients(&self, observation: &[f64]) -> Result<Vec<f64>> {
        self.network.evaluate(observation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degree_two_dim_two_monomial_order() {
        let basis = PolynomialBasis::new(2, 2).unwrap();
        assert_eq!(basis.size(), 6);
        let phi = basis.features(&[2.0, 3.0]).unwrap();
        // 1, a1, a2, a1^2, a1*a2, a2^2
        assert_eq!(phi, vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn size_matches_binomial_coefficient() {
        // C(dim + degree, degree)
        for (degree, dim, expected) in [(1, 2, 3), (2, 2, 6), (3, 2, 10), (2, 3, 10)] {
            let basis = PolynomialBasis::new(degree, dim).unwrap();
            assert_eq!(basis.size(), expected, "degree {degree} dim {dim}");
        }
    }

    #[test]
    fn constant_functional_ignores_actions() {
        let basis = PolynomialBasis::new(2, 2).unwrap();
        let coeffs = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for action in [[0.0, 0.0], [0.5, -0.3], [-1.0, 1.0]] {
            assert_eq!(basis.evaluate(&coeffs, &action).unwrap(), 1.0);
        }
    }

    #[test]
    fn linear_term_extracts_first_component() {
        let basis = PolynomialBasis::new(2, 2).unwrap();
        let coeffs = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(basis.evaluate(&coeffs, &[0.5, -0.3]).unwrap(), 0.5);
    }

    #[test]
    fn concave_quadratic_peaks_at_origin() {
        let basis = PolynomialBasis::new(2, 2).unwrap();
        // -(a1^2 + a2^2)
        let coeffs = [0.0, 0.0, 0.0, -1.0, 0.0, -1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let actions: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
            .collect();
        let values = basis.evaluate_many(&coeffs, &actions).unwrap();
        let best = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let winner = &actions[best];
        let norm = (winner[0].powi(2) + winner[1].powi(2)).sqrt();
        // With 10k uniform samples the argmax lands very near the origin.
        assert!(norm < 0.05, "argmax at {winner:?}");
        // And the analytic optimum value is approached from below.
        assert!(values[best] <= 0.0 && values[best] > -0.01);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let basis = PolynomialBasis::new(2, 2).unwrap();
        assert!(basis.features(&[1.0]).is_err());
        assert!(basis.evaluate(&[1.0, 2.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn head_requires_matching_network_output() {
        use crate::neural::Activation;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis = PolynomialBasis::new(2, 2).unwrap();
        let bad = Mlp::new(&[3, 8, 5], Activation::Tanh, &mut rng).unwrap();
        assert!(FunctionalHead::new(basis.clone(), bad).is_err());
        let good = Mlp::new(&[3, 8, 6], Activation::Tanh, &mut rng).unwrap();
        assert!(FunctionalHead::new(basis, good).is_ok());
    }
}
