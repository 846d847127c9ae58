//! Measurement primitives over model traces: accuracy, attention entropy,
//! effective dimensionality, and the semantic-dimension growth ODE.

mod dimensionality;
mod ode;

pub use dimensionality::{
    covariance, effective_dimensionality, effective_dimensionality_from_covariance,
    DimensionalityResult,
};
pub use ode::{integrate_semantic_dim, DecaySchedule, SemanticDimParams};

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Tolerance on `Σ a_i = 1` for a validated distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

/// Attention weights over key positions, non-negative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDistribution {
    weights: Vec<f64>,
}

impl AttentionDistribution {
    /// Validates `weights` without rescaling them.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no positions".into()));
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weight {} at position {pos} is not a finite non-negative value",
                weights[pos]
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("weights sum to {sum}")));
        }
        Ok(Self { weights })
    }

    /// Rescales arbitrary non-negative weights to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalise weights with sum {sum}"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(weights)
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidDistribution("no positions".into()));
        }
        Ok(Self {
            weights: vec![1.0 / len as f64; len],
        })
    }

    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidDistribution(format!(
                "index {index} outside {len} positions"
            )));
        }
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// One multiple-choice outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub true_answer: usize,
    pub predicted_answer: usize,
    /// Probability mass the model placed on its chosen option.
    pub confidence: f64,
}

impl PredictionRecord {
    pub fn new(true_answer: usize, predicted_answer: usize, confidence: f64) -> Result<Self> {
        check_unit("confidence", confidence)?;
        Ok(Self {
            true_answer,
            predicted_answer,
            confidence,
        })
    }

    pub fn is_correct(&self) -> bool {
        self.true_answer == self.predicted_answer
    }
}

/// Fraction of records whose prediction matches the true answer.
pub fn accuracy(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("prediction records"));
    }
    let correct = records.iter().filter(|r| r.is_correct()).count();
    Ok(correct as f64 / records.len() as f64)
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn shannon_entropy(dist: &AttentionDistribution) -> f64 {
    let h: f64 = dist
        .weights
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| -a * a.ln())
        .sum();
    // rounding can push a one-hot or near one-hot sum a hair below zero
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize, p: usize) -> PredictionRecord {
        PredictionRecord::new(t, p, 1.0).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[rec(0, 0), rec(1, 1)]).unwrap(), 1.0);
        assert_eq!(
            accuracy(&[rec(0, 0), rec(0, 1), rec(2, 1), rec(3, 3)]).unwrap(),
            0.5
        );
        let records: Vec<_> = (0..90).map(|i| rec(0, usize::from(i >= 18))).collect();
        assert!((accuracy(&records).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(accuracy(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn entropy_examples() {
        let one_hot = AttentionDistribution::one_hot(5, 2).unwrap();
        assert_eq!(shannon_entropy(&one_hot), 0.0);
        let uniform = AttentionDistribution::uniform(8).unwrap();
        assert!((shannon_entropy(&uniform) - 8f64.ln()).abs() < 1e-12);
        let d = AttentionDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((shannon_entropy(&d) - 1.039_720_770_839_917_9).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_weights() {
        assert!(AttentionDistribution::new(vec![]).is_err());
        assert!(AttentionDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(AttentionDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(AttentionDistribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(AttentionDistribution::new(vec![0.5, 0.5 + 5e-7]).is_ok());
        assert!(PredictionRecord::new(0, 0, 1.2).is_err());
    }
}
