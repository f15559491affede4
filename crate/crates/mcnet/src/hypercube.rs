//! Product embedding of node-wise probabilities into the space of
//! distributions over the 2^N corner states.
//!
//! Corner `sigma` is encoded as an integer whose bit `i` gives node `i`'s
//! state; bit value 0 selects the factor `p_i`, bit value 1 the factor
//! `q_i = 1 - p_i`. The embedding is a probability distribution by
//! construction, its marginals recover the node probabilities, and it
//! preserves relative entropy: the divergence between two embedded
//! distributions equals the sum of the per-node divergences.

use crate::dynamics::StateVector;
use crate::error::{Error, Result};

/// Memory guard: 2^20 corners is about as far as a dense vector should go.
pub const MAX_EMBED_NODES: usize = 20;

/// A distribution over the 2^N corner states.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl HypercubeDistribution {
    /// Number of nodes (so `probs` has length `2^n`).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Total mass over corners where node `i` is in state 0; equals `p_i`
    /// for an embedded state.
    pub fn marginal_zero(&self, i: usize) -> f64 {
        let bit = 1_usize << i;
        self.probs
            .iter()
            .enumerate()
            .filter(|(sigma, _)| sigma & bit == 0)
            .map(|(_, &v)| v)
            .sum()
    }
}

/// Product embedding: corner `sigma` gets `prod_i (bit_i == 0 ? p_i : q_i)`.
pub fn embed(p: &StateVector) -> Result<HypercubeDistribution> {
    let n = p.len();
    if n > MAX_EMBED_NODES {
        return Err(Error::TooManyNodes {
            n,
            max: MAX_EMBED_NODES,
        });
    }
    let mut probs = vec![1.0_f64];
    for i in 0..n {
        let pi = p.get(i);
        let qi = 1.0 - pi;
        let half = probs.len();
        let mut next = vec![0.0; half * 2];
        for (sigma, &mass) in probs.iter().enumerate() {
            next[sigma] = mass * pi;
            next[sigma | half] = mass * qi;
        }
        probs = next;
    }
    Ok(HypercubeDistribution { n, probs })
}

/// Relative entropy of the reference `b` to `a`: `sum_sigma b ln(b / a)`.
///
/// `b` must be strictly positive; a zero in `a` against positive reference
/// mass yields infinity.
pub fn hypercube_relative_entropy(
    a: &HypercubeDistribution,
    b: &HypercubeDistribution,
) -> Result<f64> {
    if a.probs.len() != b.probs.len() {
        return Err(Error::DimensionMismatch {
            expected: b.probs.len(),
            got: a.probs.len(),
        });
    }
    if let Some(index) = b.probs.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroReference { index });
    }
    let mut total = 0.0;
    for (pa, pb) in a.probs.iter().zip(b.probs.iter()) {
        if *pa == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pb * (pb / pa).ln();
    }
    Ok(total)
}

/// Corner probability of the constant state `p_bar`: `p_bar^k q_bar^l` for a
/// corner with `k` nodes in state 0 and `l` in state 1. Requires
/// `k + l = n`.
pub fn binomial_corner_probability(p_bar: f64, k: usize, l: usize, n: usize) -> Result<f64> {
    if k + l != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k + l,
        });
    }
    if !(0.0..=1.0).contains(&p_bar) || !p_bar.is_finite() {
        return Err(Error::OutsideCube {
            index: 0,
            value: p_bar,
        });
    }
    Ok(p_bar.powi(k as i32) * (1.0 - p_bar).powi(l as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::relative_entropy;

    #[test]
    fn embed_single_node() {
        let p = StateVector::from_slice(&[0.3]).unwrap();
        let d = embed(&p).unwrap();
        assert_eq!(d.probs().len(), 2);
        assert!((d.probs()[0] - 0.3).abs() < 1e-15);
        assert!((d.probs()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn embed_uniform_two_nodes() {
        let p = StateVector::from_slice(&[0.5, 0.5]).unwrap();
        let d = embed(&p).unwrap();
        for &v in d.probs() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn embed_degenerate_corner() {
        // All p_i = 1: every node is surely in state 0, so the whole mass
        // sits on the all-zero corner and the all-q corner carries none.
        let p = StateVector::from_slice(&[1.0, 1.0, 1.0]).unwrap();
        let d = embed(&p).unwrap();
        for (sigma, &v) in d.probs().iter().enumerate() {
            if sigma == 0 {
                assert_eq!(v, 1.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn embed_normalizes_and_recovers_marginals() {
        let p = StateVector::from_slice(&[0.2, 0.9, 0.45, 0.7]).unwrap();
        let d = embed(&p).unwrap();
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        for i in 0..4 {
            assert!((d.marginal_zero(i) - p.get(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn embed_rejects_oversized_input() {
        let p = StateVector::new(ndarray::Array1::from_elem(21, 0.5)).unwrap();
        assert!(matches!(embed(&p), Err(Error::TooManyNodes { n: 21, .. })));
    }

    #[test]
    fn divergence_zero_on_equal_distributions() {
        let p = StateVector::from_slice(&[0.4, 0.6]).unwrap();
        let d = embed(&p).unwrap();
        assert!(hypercube_relative_entropy(&d, &d).unwrap().abs() < 1e-15);
    }

    #[test]
    fn divergence_rejects_zero_reference() {
        let a = embed(&StateVector::from_slice(&[0.4]).unwrap()).unwrap();
        let b = embed(&StateVector::from_slice(&[1.0]).unwrap()).unwrap();
        assert!(matches!(
            hypercube_relative_entropy(&a, &b),
            Err(Error::ZeroReference { .. })
        ));
    }

    #[test]
    fn embedding_preserves_relative_entropy() {
        let p = StateVector::from_slice(&[0.25, 0.7, 0.55]).unwrap();
        let pb = StateVector::from_slice(&[0.5, 0.4, 0.8]).unwrap();
        let node_wise = relative_entropy(&p, &pb).unwrap();
        let embedded =
            hypercube_relative_entropy(&embed(&p).unwrap(), &embed(&pb).unwrap()).unwrap();
        assert!((node_wise - embedded).abs() < 1e-12);
    }

    #[test]
    fn single_node_divergence_matches_scalar_formula() {
        let p = StateVector::from_slice(&[0.25]).unwrap();
        let pb = StateVector::from_slice(&[0.5]).unwrap();
        let embedded =
            hypercube_relative_entropy(&embed(&p).unwrap(), &embed(&pb).unwrap()).unwrap();
        let expected = 0.5 * (2.0_f64).ln() + 0.5 * (2.0_f64 / 3.0).ln();
        assert!((embedded - expected).abs() < 1e-14);
    }

    #[test]
    fn corner_probability_values() {
        for (k, l) in [(0, 3), (1, 2), (2, 1), (3, 0)] {
            let v = binomial_corner_probability(0.5, k, l, 3).unwrap();
            assert!((v - 0.125).abs() < 1e-15);
        }
        let v = binomial_corner_probability(0.25, 2, 0, 2).unwrap();
        assert!((v - 0.0625).abs() < 1e-15);
        assert!(binomial_corner_probability(0.5, 1, 1, 3).is_err());
    }

    #[test]
    fn corner_probability_consistent_with_embed() {
        let p_bar = 0.3;
        let p = StateVector::from_slice(&[p_bar, p_bar, p_bar]).unwrap();
        let d = embed(&p).unwrap();
        for (sigma, &v) in d.probs().iter().enumerate() {
            let ones = (sigma as u32).count_ones() as usize;
            let expected = binomial_corner_probability(p_bar, 3 - ones, ones, 3).unwrap();
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        let p_bar = 0.37;
        let n = 8;
        let mut total = 0.0;
        let mut choose = 1.0_f64;
        for k in 0..=n {
            if k > 0 {
                choose = choose * (n - k + 1) as f64 / k as f64;
            }
            total += choose * binomial_corner_probability(p_bar, k, n - k, n).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}
