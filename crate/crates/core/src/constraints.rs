//! Architectural (β), training (γ) and contextual (δ) constraint metrics,
//! their normalisations, and the combinations built on top of them.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, invalid, Error, Result};
use crate::semantic::{shannon_entropy, AttentionDistribution, PredictionRecord};

/// Default context window for δ.
pub const DEFAULT_WINDOW: usize = 32;

/// `(β, γ, δ)` either on their raw scales (β in nats, δ a standard deviation)
/// or normalised onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintTriple {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub normalized: bool,
    pub window: usize,
}

impl ConstraintTriple {
    pub fn raw(beta: f64, gamma: f64, delta: f64, window: usize) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("{beta} must be a finite non-negative entropy")));
        }
        check_unit("gamma", gamma)?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid("delta", format!("{delta} must be a finite non-negative deviation")));
        }
        if window == 0 {
            return Err(invalid("window", "must be positive"));
        }
        Ok(Self {
            beta,
            gamma,
            delta,
            normalized: false,
            window,
        })
    }

    pub fn normalized(beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        check_unit("beta", beta)?;
        check_unit("gamma", gamma)?;
        check_unit("delta", delta)?;
        Ok(Self {
            beta,
            gamma,
            delta,
            normalized: true,
            window: DEFAULT_WINDOW,
        })
    }
}

/// Weights of the linear-plus-interaction performance combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceWeights {
    pub w_beta: f64,
    pub w_gamma: f64,
    pub w_delta: f64,
    pub w_interaction: f64,
}

impl Default for PerformanceWeights {
    fn default() -> Self {
        Self {
            w_beta: 0.3,
            w_gamma: 0.4,
            w_delta: 0.3,
            w_interaction: 0.1,
        }
    }
}

impl PerformanceWeights {
    pub fn new(w_beta: f64, w_gamma: f64, w_delta: f64, w_interaction: f64) -> Result<Self> {
        for (name, w) in [
            ("w_beta", w_beta),
            ("w_gamma", w_gamma),
            ("w_delta", w_delta),
            ("w_interaction", w_interaction),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid(name, format!("{w} must be non-negative")));
            }
        }
        Ok(Self {
            w_beta,
            w_gamma,
            w_delta,
            w_interaction,
        })
    }
}

/// β: mean attention entropy (nats).
pub fn beta_architectural(dists: &[AttentionDistribution]) -> Result<f64> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("attention distributions"));
    }
    Ok(dists.iter().map(shannon_entropy).sum::<f64>() / dists.len() as f64)
}

/// γ: confidence-weighted accuracy.
pub fn gamma_training(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("prediction records"));
    }
    let total: f64 = records
        .iter()
        .filter(|r| r.is_correct())
        .map(|r| r.confidence)
        .sum();
    Ok(total / records.len() as f64)
}

/// δ: population standard deviation of the first `window` attention weights.
pub fn delta_contextual(dist: &AttentionDistribution, window: usize) -> Result<f64> {
    if window < 2 {
        return Err(invalid("window", format!("{window} is below 2")));
    }
    if window > dist.len() {
        return Err(invalid(
            "window",
            format!("{window} exceeds the {} available positions", dist.len()),
        ));
    }
    Ok(population_std(&dist.weights()[..window]))
}

pub(crate) fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Largest population std any `window` weights with total mass ≤ 1 can reach
/// (all mass on one position).
pub fn max_window_std(window: usize) -> f64 {
    let w = window as f64;
    (w - 1.0).sqrt() / w
}

/// Observed range of a component over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| {
            Some(match acc {
                None => ValueRange { min: v, max: v },
                Some(r) => ValueRange {
                    min: r.min.min(v),
                    max: r.max.max(v),
                },
            })
        })
    }

    fn scale(&self, name: &'static str, x: f64) -> Result<f64> {
        if self.max == self.min {
            if x == self.min {
                return Ok(0.0);
            }
            return Err(invalid(
                name,
                format!("{x} lies outside the degenerate range [{}, {}]", self.min, self.max),
            ));
        }
        Ok(((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0))
    }
}

/// Normalisation method together with the statistics it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// β / ln(positions), δ / max-std(window).
    MaxEntropy { positions: usize },
    /// Min-max scaling of β and δ over the analysed dataset.
    MinMax { beta: ValueRange, delta: ValueRange },
}

/// Maps β and δ onto `[0, 1]`; γ is already a probability and is kept.
/// Already-normalised triples are returned unchanged.
pub fn normalize_triple(triple: &ConstraintTriple, method: &Normalization) -> Result<ConstraintTriple> {
    if triple.normalized {
        return Ok(*triple);
    }
    let (beta, delta) = match *method {
        Normalization::MaxEntropy { positions } => {
            if positions < 2 {
                return Err(invalid("positions", "max-entropy scaling needs at least 2 positions"));
            }
            if triple.window < 2 {
                return Err(invalid("window", "max-entropy scaling needs a window of at least 2"));
            }
            (
                (triple.beta / (positions as f64).ln()).clamp(0.0, 1.0),
                (triple.delta / max_window_std(triple.window)).clamp(0.0, 1.0),
            )
        }
        Normalization::MinMax { beta, delta } => {
            (beta.scale("beta", triple.beta)?, delta.scale("delta", triple.delta)?)
        }
    };
    Ok(ConstraintTriple {
        beta,
        gamma: triple.gamma,
        delta,
        normalized: true,
        window: triple.window,
    })
}

/// β·γ·δ on whatever scale the triple carries.
pub fn combined_product(triple: &ConstraintTriple) -> f64 {
    triple.beta * triple.gamma * triple.delta
}

/// `(1-β)(1-γ)(1-δ)·p_state`; only meaningful on normalised triples.
pub fn exploration_capacity(triple: &ConstraintTriple, p_state: f64) -> Result<f64> {
    if !triple.normalized {
        return Err(invalid(
            "triple",
            "exploration capacity needs a normalised triple",
        ));
    }
    check_unit("p_state", p_state)?;
    Ok((1.0 - triple.beta) * (1.0 - triple.gamma) * (1.0 - triple.delta) * p_state)
}

pub fn weighted_performance(triple: &ConstraintTriple, weights: &PerformanceWeights) -> f64 {
    weights.w_beta * triple.beta
        + weights.w_gamma * triple.gamma
        + weights.w_delta * triple.delta
        + weights.w_interaction * combined_product(triple)
}
