//! Per-mode power allocation for separable objectives
//! `Σₖ cₖ / (1 + dₖ p_{mode(k)})` under a total power budget.

use crate::convex::bisect_monotone;
use crate::error::{Error, Result};

/// One summand `c / (1 + d·p)` attached to a power mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalTerm {
    pub mode: usize,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalAllocation {
    pub powers: Vec<f64>,
    /// Shared multiplier of the power constraint.
    pub lambda: f64,
}

/// `Σₖ cₖ/(1 + dₖ pₖ)` for the given per-mode powers.
pub fn modal_objective(terms: &[ModalTerm], powers: &[f64]) -> f64 {
    terms.iter().map(|t| t.c / (1.0 + t.d * powers[t.mode])).sum()
}

/// Marginal decrease `Σ c d/(1 + d p)²` of one mode at power `p`.
pub fn marginal(terms: &[ModalTerm], mode: usize, p: f64) -> f64 {
    terms
        .iter()
        .filter(|t| t.mode == mode)
        .map(|t| t.c * t.d / (1.0 + t.d * p).powi(2))
        .sum()
}

/// Upper end of the multiplier interval: `maxₘ Σ cₖdₖ` over the mode terms.
pub fn lambda_upper_bound(terms: &[ModalTerm], n_modes: usize) -> f64 {
    (0..n_modes).map(|m| marginal(terms, m, 0.0)).fold(0.0, f64::max)
}

/// Power of one mode for a given multiplier: root of `marginal(p) = λ` on
/// `[0, budget]`, zero if the mode's marginal never reaches `λ`.
pub fn mode_power(terms: &[ModalTerm], mode: usize, lambda: f64, budget: f64) -> f64 {
    if marginal(terms, mode, 0.0) <= lambda {
        return 0.0;
    }
    if marginal(terms, mode, budget) >= lambda {
        return budget;
    }
    let (mut lo, mut hi) = (0.0, budget);
    while hi - lo > 1e-16 * budget {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if marginal(terms, mode, mid) > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes `Σₖ cₖ/(1 + dₖ p_{mode(k)})` subject to `Σ pₘ = budget`, `p ≥ 0`.
///
/// The multiplier is bisected on `(0, maxₘ Σ cd)` until the power sum hits the
/// budget to 1e-12 relative; the powers are then rescaled to sum to the budget
/// exactly. Requires `c, d ≥ 0`.
pub fn allocate(terms: &[ModalTerm], n_modes: usize, budget: f64) -> Result<ModalAllocation> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(Error::InvalidParameter(format!("power budget must be non-negative, got {budget}")));
    }
    if terms.iter().any(|t| t.mode >= n_modes || !(t.c >= 0.0) || !(t.d >= 0.0)) {
        return Err(Error::InvalidParameter("modal terms need c, d ≥ 0 and a valid mode".into()));
    }
    if n_modes == 0 || budget == 0.0 {
        return Ok(ModalAllocation { powers: vec![0.0; n_modes], lambda: 0.0 });
    }
    let hi = lambda_upper_bound(terms, n_modes);
    if hi <= 0.0 {
        // objective does not depend on the powers
        return Ok(ModalAllocation { powers: vec![budget / n_modes as f64; n_modes], lambda: 0.0 });
    }
    let total = |l: f64| (0..n_modes).map(|m| mode_power(terms, m, l, budget)).sum::<f64>();
    let lambda = bisect_monotone(total, budget, 0.0, hi, 1e-13)?;
    let mut powers: Vec<f64> = (0..n_modes).map(|m| mode_power(terms, m, lambda, budget)).collect();
    let sum: f64 = powers.iter().sum();
    if sum > 0.0 {
        for p in &mut powers {
            *p *= budget / sum;
        }
    }
    Ok(ModalAllocation { powers, lambda })
}
