use crate::error::{invalid, Result};

/// Time-dependent decay rate `λ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecaySchedule {
    Constant(f64),
    /// `intercept + slope * t`
    Linear { intercept: f64, slope: f64 },
}

impl DecaySchedule {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            DecaySchedule::Constant(c) => c,
            DecaySchedule::Linear { intercept, slope } => intercept + slope * t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticDimParams {
    /// Per-level growth contributions; only their sum enters the dynamics.
    pub g_rates: Vec<f64>,
    pub decay: DecaySchedule,
    pub dim0: f64,
    pub dt: f64,
    pub horizon: f64,
}

/// Explicit Euler integration of `d dim/dt = Σ g_l - λ(t) dim`, clamped at
/// zero. Returns `(t, dim)` at every step, starting with `(0, dim0)`.
pub fn integrate_semantic_dim(params: &SemanticDimParams) -> Result<Vec<(f64, f64)>> {
    let SemanticDimParams {
        g_rates,
        decay,
        dim0,
        dt,
        horizon,
    } = params;
    if !(*dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    if !(*horizon >= *dt && horizon.is_finite()) {
        return Err(invalid("horizon", format!("{horizon} is shorter than dt = {dt}")));
    }
    if let DecaySchedule::Constant(c) = decay {
        if *c < 0.0 {
            return Err(invalid("decay", format!("constant decay {c} is negative")));
        }
    }
    if !(*dim0 >= 0.0) {
        return Err(invalid("dim0", format!("{dim0} is negative")));
    }

    let growth: f64 = g_rates.iter().sum();
    let steps = (horizon / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut dim = *dim0;
    out.push((0.0, dim));
    for k in 0..steps {
        let t = k as f64 * dt;
        dim = (dim + dt * (growth - decay.at(t) * dim)).max(0.0);
        out.push(((k + 1) as f64 * dt, dim));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, decay: f64, dim0: f64, dt: f64) -> SemanticDimParams {
        SemanticDimParams {
            g_rates: vec![g / 2.0, g / 2.0],
            decay: DecaySchedule::Constant(decay),
            dim0,
            dt,
            horizon: 1.0,
        }
    }

    #[test]
    fn no_growth_no_decay_is_constant() {
        let out = integrate_semantic_dim(&params(0.0, 0.0, 3.5, 0.01)).unwrap();
        assert!(out.iter().all(|&(_, d)| d == 3.5));
        assert_eq!(out.len(), 101);
    }

    #[test]
    fn relaxes_towards_closed_form() {
        let out = integrate_semantic_dim(&params(2.0, 1.0, 0.0, 1e-3)).unwrap();
        let &(t, d) = out.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let exact = 2.0 * (1.0 - (-1.0f64).exp());
        assert!((d - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let out = integrate_semantic_dim(&params(2.0, 1.0, 2.0, 1e-2)).unwrap();
        assert!(out.iter().all(|&(_, d)| (d - 2.0).abs() < 1e-12));
    }

    #[test]
    fn linear_decay_and_clamp() {
        let p = SemanticDimParams {
            g_rates: vec![-5.0],
            decay: DecaySchedule::Linear {
                intercept: 0.5,
                slope: 1.0,
            },
            dim0: 1.0,
            dt: 0.1,
            horizon: 2.0,
        };
        let out = integrate_semantic_dim(&p).unwrap();
        assert!(out.iter().all(|&(_, d)| d >= 0.0));
        assert_eq!(out.last().unwrap().1, 0.0);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(integrate_semantic_dim(&params(1.0, 1.0, 0.0, 0.0)).is_err());
        assert!(integrate_semantic_dim(&params(1.0, 1.0, 0.0, -1.0)).is_err());
        assert!(integrate_semantic_dim(&params(1.0, -1.0, 0.0, 0.1)).is_err());
    }
}
