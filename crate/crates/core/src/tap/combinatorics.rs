//! Binomial coefficients and binomially weighted sums that stay finite for
//! large possibility spaces.
//!
//! Coefficients with `n <= EXACT_LIMIT` come from an exact big-integer
//! Pascal table (rounded once to `f64`). Above the limit everything is carried
//! in log space and accumulated with a running log-sum-exp.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

/// Largest `n` served from the exact table.
pub const EXACT_LIMIT: u64 = 300;

/// `e^-37` is below half an ulp of 1.0; tails smaller than that are dropped.
const NEGLIGIBLE_LN: f64 = -37.0;

fn exact_table() -> &'static [Vec<f64>] {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows = Vec::with_capacity(EXACT_LIMIT as usize + 1);
        let mut row: Vec<BigUint> = vec![BigUint::one()];
        for n in 0..=EXACT_LIMIT as usize {
            rows.push(
                row.iter()
                    .map(|c| c.to_f64().unwrap_or(f64::INFINITY))
                    .collect(),
            );
            let mut next = Vec::with_capacity(n + 2);
            next.push(BigUint::one());
            for k in 1..=n {
                next.push(&row[k - 1] + &row[k]);
            }
            next.push(BigUint::one());
            row = next;
        }
        rows
    })
}

/// Exact `C(n, i)` as the nearest `f64`, for `n <= EXACT_LIMIT`.
pub fn exact_binomial(n: u64, i: u64) -> Option<f64> {
    if n > EXACT_LIMIT {
        return None;
    }
    if i > n {
        return Some(0.0);
    }
    Some(exact_table()[n as usize][i as usize])
}

fn ln_abs_gamma(x: f64) -> f64 {
    if x > 0.0 {
        ln_gamma(x)
    } else {
        // reflection: |Γ(x)| = π / (|sin(πx)| Γ(1 - x))
        std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().abs().ln() - ln_gamma(1.0 - x)
    }
}

/// Natural log of `C(n, i)`.
///
/// Integer `n` with `i > n` yields `-inf` (the coefficient is zero). For
/// non-integer `n` the gamma-function generalisation is used; a negative
/// generalised coefficient has no logarithm and is rejected.
pub fn log_binomial(n: f64, i: u64) -> Result<f64> {
    if i == 0 {
        return Err(invalid("i", "combination size starts at 1"));
    }
    if !n.is_finite() || n < 0.0 {
        return Err(invalid("n", format!("{n} is not a finite non-negative value")));
    }
    let fi = i as f64;
    if n.fract() == 0.0 {
        if fi > n {
            return Ok(f64::NEG_INFINITY);
        }
        if n <= EXACT_LIMIT as f64 {
            return Ok(exact_table()[n as usize][i as usize].ln());
        }
        return Ok(ln_gamma(n + 1.0) - ln_gamma(fi + 1.0) - ln_gamma(n - fi + 1.0));
    }
    if fi > n + 1.0 {
        // falling factorial n(n-1)...(n-i+1) contains i - floor(n) - 1 negative factors
        let negatives = i - n.floor() as u64 - 1;
        if negatives % 2 == 1 {
            return Err(invalid(
                "n",
                format!("generalised C({n}, {i}) is negative"),
            ));
        }
    }
    Ok(ln_gamma(n + 1.0) - ln_gamma(fi + 1.0) - ln_abs_gamma(n - fi + 1.0))
}

/// Outcome of a budgeted binomial sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetedSum {
    Finite(f64),
    /// The partial sum crossed the budget; the exact value was not needed.
    Exceeded,
}

impl BudgetedSum {
    pub fn value_or_inf(self) -> f64 {
        match self {
            BudgetedSum::Finite(v) => v,
            BudgetedSum::Exceeded => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, ln_x: f64) {
        if ln_x == f64::NEG_INFINITY {
            return;
        }
        if ln_x > self.max {
            self.scaled = self.scaled * (self.max - ln_x).exp() + 1.0;
            self.max = ln_x;
        } else {
            self.scaled += (ln_x - self.max).exp();
        }
    }

    fn ln(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `Σ_{i=1..n} alpha^i C(n, i)`, stopping once the sum exceeds `budget`.
pub fn geometric_sum(n: u64, alpha: f64, budget: f64) -> BudgetedSum {
    if n == 0 || alpha == 0.0 {
        return BudgetedSum::Finite(0.0);
    }
    if n <= EXACT_LIMIT {
        let row = &exact_table()[n as usize];
        let mut power = 1.0;
        let mut sum = 0.0;
        for coeff in &row[1..] {
            power *= alpha;
            sum += power * coeff;
            if sum > budget {
                return BudgetedSum::Exceeded;
            }
        }
        return BudgetedSum::Finite(sum);
    }

    let ln_alpha = alpha.ln();
    let ln_budget = budget.ln();
    let nf = n as f64;
    let mut acc = LogSumExp::new();
    let mut ln_term = ln_alpha + nf.ln();
    let mut i = 1u64;
    loop {
        acc.add(ln_term);
        if acc.ln() > ln_budget {
            return BudgetedSum::Exceeded;
        }
        if i == n {
            break;
        }
        let fi = i as f64;
        let ratio = alpha * (nf - fi) / (fi + 1.0);
        ln_term += ratio.ln();
        // past the peak the ratios keep shrinking, so the tail is bounded by
        // a geometric series with the current ratio
        if ratio < 1.0 && ln_term - (-ratio).ln_1p() - acc.ln() < NEGLIGIBLE_LN {
            break;
        }
        i += 1;
    }
    BudgetedSum::Finite(acc.ln().exp())
}

/// `Σ_{i=1..min(n, max_i)} weight(i) C(n, i)` for non-negative weights,
/// stopping once the sum exceeds `budget`.
pub fn weighted_sum(
    n: u64,
    max_i: u64,
    weight: impl Fn(u64) -> f64,
    budget: f64,
) -> BudgetedSum {
    let upper = n.min(max_i);
    if upper == 0 {
        return BudgetedSum::Finite(0.0);
    }
    if n <= EXACT_LIMIT {
        let row = &exact_table()[n as usize];
        let mut sum = 0.0;
        for i in 1..=upper {
            let w = weight(i);
            if w == 0.0 {
                continue;
            }
            sum += w * row[i as usize];
            if sum > budget {
                return BudgetedSum::Exceeded;
            }
        }
        return BudgetedSum::Finite(sum);
    }

    let ln_budget = budget.ln();
    let nf = n as f64;
    let mut acc = LogSumExp::new();
    let mut ln_coeff = nf.ln();
    for i in 1..=upper {
        if i > 1 {
            let fi = i as f64;
            ln_coeff += (nf - fi + 1.0).ln() - fi.ln();
        }
        let w = weight(i);
        if w == 0.0 {
            continue;
        }
        acc.add(w.ln() + ln_coeff);
        if acc.ln() > ln_budget {
            return BudgetedSum::Exceeded;
        }
    }
    BudgetedSum::Finite(acc.ln().exp())
}
