//! Adjacent-possible growth dynamics: the classic constant-α step, the
//! α-sequence step, and the resource-bounded hierarchical step, plus a
//! trajectory simulator that records blow-up as data.

pub mod combinatorics;
mod export;
mod resource;

pub use combinatorics::{log_binomial, BudgetedSum, EXACT_LIMIT};
pub use export::{write_trajectory_csv, TRAJECTORY_HEADER};
pub use resource::{
    integrated_alpha, resource_bound, resource_norm, HierarchyConfig, IntegrationForm,
    ResourceConfig, ResourceState,
};

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintTriple;
use crate::error::{check_unit, invalid, Error, Result};
use combinatorics::{geometric_sum, weighted_sum};

/// Default blow-up cap on the possibility-space size.
pub const DEFAULT_CAP: f64 = 1e12;

/// Possibility-space size at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapState {
    pub t: u64,
    pub m: f64,
    pub blown_up: bool,
    /// Step whose increment would have crossed the cap.
    pub blow_up_step: Option<u64>,
}

impl TapState {
    pub fn initial(m0: f64) -> Self {
        Self {
            t: 0,
            m: m0,
            blown_up: false,
            blow_up_step: None,
        }
    }

    fn combination_pool(&self) -> u64 {
        self.m.floor() as u64
    }

    fn ensure_live(&self) -> Result<()> {
        if self.blown_up {
            return Err(invalid("state", format!("already blew up at step {:?}", self.blow_up_step)));
        }
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(invalid("state", format!("size {} is not finite and non-negative", self.m)));
        }
        Ok(())
    }

    fn advance(&self, increment: BudgetedSum, cap: f64) -> TapState {
        match increment {
            BudgetedSum::Finite(delta) if self.m + delta <= cap => TapState {
                t: self.t + 1,
                m: self.m + delta,
                blown_up: false,
                blow_up_step: None,
            },
            _ => TapState {
                blown_up: true,
                blow_up_step: Some(self.t + 1),
                ..*self
            },
        }
    }
}

/// Source of the constraint applied at each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstraintSchedule {
    /// Classic growth: combinations of size `i` weighted by `alpha^i`.
    ConstantAlpha(f64),
    /// Combinations of size `i` weighted by `alpha_seq[i - 1]`; missing sizes weigh 0.
    AlphaSequence(Vec<f64>),
    /// Resource-bounded growth driven by one normalised triple per step
    /// (the last triple is held once the stream runs out).
    Integrated {
        triples: Vec<ConstraintTriple>,
        form: IntegrationForm,
    },
}

/// Resource configuration plus the cost vector at each step (last one held).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourcePlan {
    pub config: ResourceConfig,
    pub trajectory: Vec<ResourceState>,
}

impl ResourcePlan {
    pub fn constant(config: ResourceConfig, state: ResourceState) -> Self {
        Self {
            config,
            trajectory: vec![state],
        }
    }

    pub fn state_at(&self, t: u64) -> &ResourceState {
        let idx = (t as usize).min(self.trajectory.len() - 1);
        &self.trajectory[idx]
    }

    pub fn bound_at(&self, t: u64) -> f64 {
        resource_bound(self.state_at(t), &self.config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapConfig {
    pub m0: f64,
    pub schedule: ConstraintSchedule,
    pub resources: Option<ResourcePlan>,
    pub hierarchy: Option<HierarchyConfig>,
    pub cap: f64,
    pub max_steps: u64,
    /// Architecture constant of the `κ·x·ln x` capacity ceiling.
    pub kappa: Option<f64>,
}

impl TapConfig {
    pub fn classic(m0: f64, alpha: f64, max_steps: u64) -> Self {
        Self {
            m0,
            schedule: ConstraintSchedule::ConstantAlpha(alpha),
            resources: None,
            hierarchy: None,
            cap: DEFAULT_CAP,
            max_steps,
            kappa: None,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.schedule, ConstraintSchedule::Integrated { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m0 >= 1.0 && self.m0.is_finite()) {
            return Err(invalid("m0", format!("{} must be at least 1", self.m0)));
        }
        if !(self.cap > self.m0 && self.cap.is_finite()) {
            return Err(invalid("cap", format!("{} must be finite and exceed m0", self.cap)));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be positive"));
        }
        if let Some(kappa) = self.kappa {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(invalid("kappa", format!("{kappa} must be positive")));
            }
        }
        if let Some(plan) = &self.resources {
            if plan.trajectory.is_empty() {
                return Err(invalid("resources", "resource trajectory is empty"));
            }
        }
        match &self.schedule {
            ConstraintSchedule::ConstantAlpha(alpha) => {
                check_unit("alpha", *alpha)?;
            }
            ConstraintSchedule::AlphaSequence(seq) => {
                for a in seq {
                    check_unit("alpha_seq", *a)?;
                }
            }
            ConstraintSchedule::Integrated { triples, .. } => {
                if self.hierarchy.is_none() {
                    return Err(Error::MissingConfig("hierarchy"));
                }
                if self.resources.is_none() {
                    return Err(Error::MissingConfig("resources"));
                }
                if triples.is_empty() {
                    return Err(invalid("triples", "constraint stream is empty"));
                }
                if triples.iter().any(|t| !t.normalized) {
                    return Err(invalid("triples", "constraint stream must be normalised"));
                }
            }
        }
        Ok(())
    }
}

fn check_cap(cap: f64) -> Result<()> {
    if cap > 0.0 && cap.is_finite() {
        Ok(())
    } else {
        Err(invalid("cap", format!("{cap} must be finite and positive")))
    }
}

/// One classic step: `m + Σ_{i=1..⌊m⌋} alpha^i C(⌊m⌋, i)`.
pub fn step_classic(state: &TapState, alpha: f64, cap: f64) -> Result<TapState> {
    state.ensure_live()?;
    check_unit("alpha", alpha)?;
    check_cap(cap)?;
    let sum = geometric_sum(state.combination_pool(), alpha, cap - state.m);
    Ok(state.advance(sum, cap))
}

/// One α-sequence step: `m + Σ_{i=1..⌊m⌋} alpha_seq[i-1] C(⌊m⌋, i)`.
pub fn step_sequence(state: &TapState, alpha_seq: &[f64], cap: f64) -> Result<TapState> {
    state.ensure_live()?;
    for a in alpha_seq {
        check_unit("alpha_seq", *a)?;
    }
    check_cap(cap)?;
    let sum = weighted_sum(
        state.combination_pool(),
        alpha_seq.len() as u64,
        |i| alpha_seq[i as usize - 1],
        cap - state.m,
    );
    Ok(state.advance(sum, cap))
}

/// Result of a bounded step together with the ceiling it was held to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedStep {
    pub state: TapState,
    /// Applied increment; 0 if the step blew up.
    pub increment: f64,
    /// `L·K·R(C_t)`.
    pub bound: f64,
}

/// Bounded step for a given α: the raw increment `Σ alpha C(⌊m⌋, i)` is split
/// across levels by `per_level_gain`, each share clipped to `K·R`, and the
/// total never exceeds `L·K·R`.
pub fn step_bounded_with_alpha(
    state: &TapState,
    alpha: f64,
    r_bound: f64,
    hierarchy: &HierarchyConfig,
    cap: f64,
) -> Result<BoundedStep> {
    state.ensure_live()?;
    check_unit("alpha", alpha)?;
    check_unit("r_bound", r_bound)?;
    check_cap(cap)?;

    let bound = hierarchy.growth_bound(r_bound);
    let level_cap = hierarchy.gain_k * r_bound;
    let increment = if alpha == 0.0 || r_bound == 0.0 {
        0.0
    } else {
        // once every positive share is clipped the raw value no longer matters
        let min_gain = hierarchy
            .per_level_gain
            .iter()
            .copied()
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let raw = weighted_sum(state.combination_pool(), u64::MAX, |_| alpha, level_cap / min_gain)
            .value_or_inf();
        let spread: f64 = hierarchy
            .per_level_gain
            .iter()
            .filter(|g| **g > 0.0)
            .map(|g| (g * raw).min(level_cap))
            .sum();
        spread.min(bound)
    };

    let next = state.advance(BudgetedSum::Finite(increment), cap);
    Ok(BoundedStep {
        increment: if next.blown_up { 0.0 } else { increment },
        state: next,
        bound,
    })
}

/// Bounded step with α integrated from `triple` and the resource factor of `r`.
pub fn step_bounded(
    state: &TapState,
    cfg: &TapConfig,
    triple: &ConstraintTriple,
    r: &ResourceState,
) -> Result<BoundedStep> {
    let hierarchy = cfg.hierarchy.as_ref().ok_or(Error::MissingConfig("hierarchy"))?;
    let plan = cfg.resources.as_ref().ok_or(Error::MissingConfig("resources"))?;
    let form = match &cfg.schedule {
        ConstraintSchedule::Integrated { form, .. } => *form,
        _ => IntegrationForm::default(),
    };
    let r_bound = resource_bound(r, &plan.config);
    let alpha = integrated_alpha(triple, r_bound, form)?;
    step_bounded_with_alpha(state, alpha, r_bound, hierarchy, cfg.cap)
}

/// A simulated run. `increments[k]` is the increment applied between
/// `states[k]` and `states[k + 1]` (equal to their difference up to rounding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapTrajectory {
    pub states: Vec<TapState>,
    pub increments: Vec<f64>,
    /// Per-step `L·K·R(C_t)`; empty unless bounded.
    pub bound_values: Vec<f64>,
    pub blow_up_step: Option<u64>,
}

impl TapTrajectory {
    pub fn sizes(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.m).collect()
    }
}

/// Iterates the configured step until `max_steps` or blow-up.
pub fn simulate(cfg: &TapConfig) -> Result<TapTrajectory> {
    cfg.validate()?;
    let mut traj = TapTrajectory {
        states: vec![TapState::initial(cfg.m0)],
        increments: Vec::new(),
        bound_values: Vec::new(),
        blow_up_step: None,
    };

    for t in 0..cfg.max_steps {
        let current = *traj.states.last().expect("trajectory starts non-empty");
        let (next, bound) = match &cfg.schedule {
            ConstraintSchedule::ConstantAlpha(alpha) => (step_classic(&current, *alpha, cfg.cap)?, None),
            ConstraintSchedule::AlphaSequence(seq) => (step_sequence(&current, seq, cfg.cap)?, None),
            ConstraintSchedule::Integrated { triples, .. } => {
                let plan = cfg.resources.as_ref().ok_or(Error::MissingConfig("resources"))?;
                let triple = &triples[(t as usize).min(triples.len() - 1)];
                let step = step_bounded(&current, cfg, triple, plan.state_at(t))?;
                (step.state, Some((step.bound, step.increment)))
            }
        };

        if next.blown_up {
            let last = traj.states.last_mut().expect("trajectory starts non-empty");
            last.blown_up = true;
            last.blow_up_step = next.blow_up_step;
            traj.blow_up_step = next.blow_up_step;
            break;
        }
        match bound {
            Some((b, inc)) => {
                traj.bound_values.push(b);
                traj.increments.push(inc);
            }
            None => traj.increments.push(next.m - current.m),
        }
        traj.states.push(next);
    }
    Ok(traj)
}

/// Outcome of the `m ≤ κ·C_max·ln C_max` capacity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityCheck {
    pub holds: bool,
    pub limit: f64,
    pub first_violation: Option<u64>,
}

pub fn check_capacity_bound(traj: &TapTrajectory, cfg: &TapConfig) -> Result<CapacityCheck> {
    let kappa = cfg.kappa.ok_or(Error::MissingConfig("kappa"))?;
    let plan = cfg.resources.as_ref().ok_or(Error::MissingConfig("resources"))?;
    let c_max = plan.config.c_max;
    let limit = kappa * c_max * c_max.ln();
    let first_violation = traj.states.iter().find(|s| s.m > limit).map(|s| s.t);
    Ok(CapacityCheck {
        holds: first_violation.is_none(),
        limit,
        first_violation,
    })
}
