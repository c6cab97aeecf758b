//! Optimal threshold for a fixed energy price.
//!
//! For any `β ≥ 0` some threshold policy minimizes the average Lagrangian
//! cost, but the cost is not unimodal in `k` across distortion
//! breakpoints, so a naive scan cannot stop early. It never has to scan
//! far, though: restricted to the final interval `k ≥ δ_L` the cost is
//! unimodal with closed-form minimizer [`k_ub`], so the search space
//! collapses to `{1, .., δ_L − 1} ∪ {k_ub}`, a total of `δ_L` closed-form
//! evaluations.
//!
//! [`k_ub`]: crate::closed_form::k_ub

use crate::closed_form::{coefficients, k_ub, threshold_cost};
use crate::model::SystemParams;
use crate::Error;

/// Outcome of a threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Minimizing threshold (smallest, under exact cost ties).
    pub k_star: u64,
    /// Its average Lagrangian cost.
    pub cost_star: f64,
    /// Number of closed-form cost evaluations spent.
    pub evaluations: u64,
}

/// Minimizes the average Lagrangian cost over all threshold policies
/// using `δ_L` evaluations: every threshold below the last breakpoint,
/// plus the closed-form tail minimizer.
pub fn optimal_threshold(params: &SystemParams, beta: f64) -> Result<ThresholdResult, Error> {
    let coeffs = coefficients(params, beta)?;
    let tail_k = k_ub(params, beta)?;

    let mut k_star = tail_k;
    let mut cost_star = threshold_cost(&coeffs, tail_k).lagrangian_cost;
    let mut evaluations = 1;
    for k in 1..params.distortion().last_breakpoint() {
        let cost = threshold_cost(&coeffs, k).lagrangian_cost;
        evaluations += 1;
        if cost < cost_star || (cost == cost_star && k < k_star) {
            k_star = k;
            cost_star = cost;
        }
    }
    Ok(ThresholdResult {
        k_star,
        cost_star,
        evaluations,
    })
}

/// Reference search: evaluates every threshold in `1..=k_max` and keeps
/// the smallest minimizer. Exists to validate [`optimal_threshold`], so
/// it deliberately shares nothing with it beyond the cost evaluation.
pub fn brute_force_threshold(
    params: &SystemParams,
    beta: f64,
    k_max: u64,
) -> Result<ThresholdResult, Error> {
    let coeffs = coefficients(params, beta)?;
    let mut best: Option<(u64, f64)> = None;
    for k in 1..=k_max {
        let cost = threshold_cost(&coeffs, k).lagrangian_cost;
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((k, cost));
        }
    }
    let (k_star, cost_star) = best.expect("k_max >= 1 guarantees one evaluation");
    Ok(ThresholdResult {
        k_star,
        cost_star,
        evaluations: k_max,
    })
}
