use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintTriple;
use crate::error::{check_unit, invalid, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Computational cost vector `(memory, attention, hidden-state)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceState {
    pub mem: f64,
    pub attn: f64,
    pub hidden: f64,
}

impl ResourceState {
    pub fn new(mem: f64, attn: f64, hidden: f64) -> Result<Self> {
        for (name, v) in [("mem", mem), ("attn", attn), ("hidden", hidden)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("{v} must be a finite non-negative cost")));
            }
        }
        Ok(Self { mem, attn, hidden })
    }
}

/// Capacity and per-resource weights of the weighted cost norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceConfig {
    pub c_max: f64,
    pub w_mem: f64,
    pub w_attn: f64,
    pub w_hidden: f64,
}

impl ResourceConfig {
    pub fn new(c_max: f64, w_mem: f64, w_attn: f64, w_hidden: f64) -> Result<Self> {
        if !(c_max > 0.0 && c_max.is_finite()) {
            return Err(invalid("c_max", format!("{c_max} must be positive")));
        }
        for (name, w) in [("w_mem", w_mem), ("w_attn", w_attn), ("w_hidden", w_hidden)] {
            if !(w >= 0.0) {
                return Err(invalid(name, format!("{w} must be non-negative")));
            }
        }
        let sum = w_mem + w_attn + w_hidden;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(invalid("weights", format!("sum to {sum}, expected 1")));
        }
        Ok(Self {
            c_max,
            w_mem,
            w_attn,
            w_hidden,
        })
    }

    /// Equal weights on the three resource types.
    pub fn balanced(c_max: f64) -> Result<Self> {
        Self::new(c_max, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    }
}

/// Hierarchical level structure and the gain constant `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub levels: usize,
    pub gain_k: f64,
    /// Share of the raw increment routed to each level; sums to 1.
    pub per_level_gain: Vec<f64>,
}

impl HierarchyConfig {
    pub fn new(levels: usize, gain_k: f64, per_level_gain: Vec<f64>) -> Result<Self> {
        if levels == 0 {
            return Err(invalid("levels", "at least one level is required"));
        }
        if !(gain_k > 0.0 && gain_k.is_finite()) {
            return Err(invalid("gain_k", format!("{gain_k} must be positive")));
        }
        if per_level_gain.len() != levels {
            return Err(invalid(
                "per_level_gain",
                format!("{} entries for {levels} levels", per_level_gain.len()),
            ));
        }
        if per_level_gain.iter().any(|g| !(*g >= 0.0)) {
            return Err(invalid("per_level_gain", "entries must be non-negative"));
        }
        let sum: f64 = per_level_gain.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(invalid("per_level_gain", format!("sum to {sum}, expected 1")));
        }
        Ok(Self {
            levels,
            gain_k,
            per_level_gain,
        })
    }

    pub fn uniform(levels: usize, gain_k: f64) -> Result<Self> {
        if levels == 0 {
            return Err(invalid("levels", "at least one level is required"));
        }
        Self::new(levels, gain_k, vec![1.0 / levels as f64; levels])
    }

    /// `L·K·R`, the ceiling on one step's total increment.
    pub fn growth_bound(&self, r_bound: f64) -> f64 {
        self.levels as f64 * self.gain_k * r_bound
    }
}

/// Weighted cost norm `‖C_t‖`.
pub fn resource_norm(r: &ResourceState, cfg: &ResourceConfig) -> f64 {
    cfg.w_mem * r.mem + cfg.w_attn * r.attn + cfg.w_hidden * r.hidden
}

/// Remaining-capacity factor `min(1, (C_max - ‖C_t‖)/C_max)`, floored at 0.
pub fn resource_bound(r: &ResourceState, cfg: &ResourceConfig) -> f64 {
    ((cfg.c_max - resource_norm(r, cfg)) / cfg.c_max).clamp(0.0, 1.0)
}

/// How the constraint triple and the resource factor are folded into α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IntegrationForm {
    /// `min(β, γ·δ, R)`
    #[default]
    Min,
    /// `β·γ·δ·R`
    Product,
}

/// Integrated constraint `α(t)` from a normalised triple and `R(C_t)`.
pub fn integrated_alpha(triple: &ConstraintTriple, r_bound: f64, form: IntegrationForm) -> Result<f64> {
    if !triple.normalized {
        return Err(invalid("triple", "integrated alpha needs a normalised triple"));
    }
    let beta = check_unit("beta", triple.beta)?;
    let gamma = check_unit("gamma", triple.gamma)?;
    let delta = check_unit("delta", triple.delta)?;
    let r = check_unit("r_bound", r_bound)?;
    Ok(match form {
        IntegrationForm::Min => beta.min(gamma * delta).min(r),
        IntegrationForm::Product => beta * gamma * delta * r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        let cfg = ResourceConfig::new(100.0, 0.5, 0.3, 0.2).unwrap();
        assert_eq!(resource_norm(&ResourceState::default(), &cfg), 0.0);
        let r = ResourceState::new(10.0, 20.0, 40.0).unwrap();
        assert!((resource_norm(&r, &cfg) - 19.0).abs() < 1e-12);
        let balanced = ResourceConfig::balanced(100.0).unwrap();
        let r = ResourceState::new(30.0, 30.0, 30.0).unwrap();
        assert!((resource_norm(&r, &balanced) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn bound_examples() {
        let cfg = ResourceConfig::new(100.0, 1.0, 0.0, 0.0).unwrap();
        let at = |mem| resource_bound(&ResourceState::new(mem, 0.0, 0.0).unwrap(), &cfg);
        assert_eq!(at(100.0), 0.0);
        assert_eq!(at(0.0), 1.0);
        assert_eq!(at(25.0), 0.75);
        assert_eq!(at(250.0), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(ResourceConfig::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ResourceConfig::new(1.0, 0.5, 0.5, 0.5).is_err());
        assert!(ResourceState::new(-1.0, 0.0, 0.0).is_err());
        assert!(HierarchyConfig::new(0, 1.0, vec![]).is_err());
        assert!(HierarchyConfig::new(2, 0.0, vec![0.5, 0.5]).is_err());
        assert!(HierarchyConfig::new(2, 1.0, vec![0.5, 0.6]).is_err());
        assert!(HierarchyConfig::new(2, 1.0, vec![1.0]).is_err());
    }

    #[test]
    fn alpha_examples() {
        let t = ConstraintTriple::normalized(0.6, 0.5, 0.3).unwrap();
        let a = integrated_alpha(&t, 0.75, IntegrationForm::Min).unwrap();
        assert!((a - 0.15).abs() < 1e-15);
        assert_eq!(integrated_alpha(&t, 0.0, IntegrationForm::Min).unwrap(), 0.0);
        assert_eq!(integrated_alpha(&t, 0.0, IntegrationForm::Product).unwrap(), 0.0);
        let half = ConstraintTriple::normalized(0.5, 0.5, 0.5).unwrap();
        assert_eq!(integrated_alpha(&half, 1.0, IntegrationForm::Product).unwrap(), 0.125);
        assert!(integrated_alpha(&t, 1.5, IntegrationForm::Min).is_err());
        let raw = ConstraintTriple::raw(6.0, 0.1, 0.08, 32).unwrap();
        assert!(integrated_alpha(&raw, 0.5, IntegrationForm::Min).is_err());
    }
}
