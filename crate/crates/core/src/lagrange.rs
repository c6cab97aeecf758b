//! Energy-price bisection and the budget-meeting mixture policy.
//!
//! The average energy of the price-`β` optimal threshold policy is
//! non-increasing in `β`, so the budget is met by bisecting the price:
//! shrink an interval `[β⁻, β⁺]` keeping `Ē(π_{β⁻}) > E_max ≥ Ē(π_{β⁺})`
//! until it is narrower than `ε`, then randomize between the two
//! bracketing threshold policies. The mixing weight
//!
//! ```text
//! μ = (E_max − Ē(π⁺)) / (Ē(π⁻) − Ē(π⁺))
//! ```
//!
//! interpolates the per-slot averages linearly. The mixture re-draws its
//! active threshold after every delivery, which weights each policy by
//! its own renewal-cycle length; [`mixture_energy`] and [`mixture_age`]
//! evaluate that actual long-run behavior by renewal reward, so the
//! realized energy can sit slightly off `E_max` (the gap vanishes as the
//! two cycle lengths approach each other or the budget tightens).

use serde::Serialize;

use crate::chain_oracle::renewal_measures;
use crate::closed_form::avg_energy;
use crate::model::{MixturePolicy, SystemParams, ThresholdPolicy};
use crate::threshold_search::optimal_threshold;
use crate::{invalid, Error};

/// One price evaluation during [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub beta: f64,
    pub k_star: u64,
    pub avg_energy: f64,
}

/// Diagnostic record of a [`bisect`] run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionTrace {
    /// Every price evaluated, in order: the free probe at `β = 0`, the
    /// bracketing doublings, then the bisection midpoints.
    pub iterations: Vec<BisectionStep>,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub epsilon: f64,
    /// Raw interpolation weight before clamping to `[0, 1]`; 1 when the
    /// budget is slack or the bracket degenerates.
    pub mu_unclamped: f64,
}

const MAX_DOUBLINGS: u32 = 128;

/// Finds prices `(β⁻, β⁺)` with the budget violated at `β⁻` and met at
/// `β⁺`, doubling upward from 1. Returns `(0, 0)` when the budget is
/// already slack at `β = 0`.
pub fn bracket_beta(params: &SystemParams) -> Result<(f64, f64), Error> {
    let (lo, hi, _) = bracket_with_steps(params)?;
    Ok((lo, hi))
}

fn probe(params: &SystemParams, beta: f64) -> Result<BisectionStep, Error> {
    let k_star = optimal_threshold(params, beta)?.k_star;
    Ok(BisectionStep {
        beta,
        k_star,
        avg_energy: avg_energy(params, k_star)?,
    })
}

fn bracket_with_steps(params: &SystemParams) -> Result<(f64, f64, Vec<BisectionStep>), Error> {
    let mut steps = Vec::new();
    let free = probe(params, 0.0)?;
    steps.push(free);
    if free.avg_energy <= params.e_max() {
        return Ok((0.0, 0.0, steps));
    }
    let mut hi = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let step = probe(params, hi)?;
        steps.push(step);
        if step.avg_energy <= params.e_max() {
            return Ok((0.0, hi, steps));
        }
        hi *= 2.0;
    }
    Err(Error::NoBracket {
        max_doublings: MAX_DOUBLINGS,
    })
}

/// Solves the budget-constrained problem: bisects the energy price down
/// to width `epsilon` and returns the mixture of the two bracketing
/// threshold policies, with the full evaluation trace.
///
/// When the budget is slack at `β = 0` the result is the free optimum
/// alone (`μ = 1`, both prices 0).
pub fn bisect(
    params: &SystemParams,
    epsilon: f64,
) -> Result<(MixturePolicy, BisectionTrace), Error> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(invalid("epsilon", format!("{epsilon} is not a positive real")));
    }
    let e_max = params.e_max();
    let (mut lo, mut hi, mut steps) = bracket_with_steps(params)?;

    if hi == 0.0 {
        let k0 = steps[0].k_star;
        let policy = MixturePolicy::single(ThresholdPolicy::new(k0)?, 0.0);
        let trace = BisectionTrace {
            iterations: steps,
            beta_minus: 0.0,
            beta_plus: 0.0,
            epsilon,
            mu_unclamped: 1.0,
        };
        return Ok((policy, trace));
    }

    while hi - lo > epsilon {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let step = probe(params, mid)?;
        steps.push(step);
        if step.avg_energy > e_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let low = probe(params, lo)?;
    let high = probe(params, hi)?;
    let low_policy = ThresholdPolicy::new(low.k_star)?;
    let high_policy = ThresholdPolicy::new(high.k_star)?;

    let degenerate = low.k_star == high.k_star || low.avg_energy <= high.avg_energy;
    let (policy, mu_unclamped) = if degenerate {
        // Either both prices picked the same threshold or the energies
        // tied; the feasible side alone meets the budget.
        (MixturePolicy::new(high_policy, high_policy, 1.0, lo, hi)?, 1.0)
    } else {
        let raw = (e_max - high.avg_energy) / (low.avg_energy - high.avg_energy);
        (
            MixturePolicy::new(low_policy, high_policy, raw.clamp(0.0, 1.0), lo, hi)?,
            raw,
        )
    };
    let trace = BisectionTrace {
        iterations: steps,
        beta_minus: lo,
        beta_plus: hi,
        epsilon,
        mu_unclamped,
    };
    Ok((policy, trace))
}

fn mixture_measures(params: &SystemParams, policy: &MixturePolicy) -> Result<(f64, f64, f64), Error> {
    let low = renewal_measures(params, policy.low_policy.threshold)?;
    let high = renewal_measures(params, policy.high_policy.threshold)?;
    let mu = policy.mix_prob;
    let cycle = mu * low.cycle_length + (1.0 - mu) * high.cycle_length;
    let age = mu * low.age_sum + (1.0 - mu) * high.age_sum;
    let energy = mu * low.energy + (1.0 - mu) * high.energy;
    Ok((cycle, age, energy))
}

/// Long-run average energy of a mixture policy that re-draws the active
/// threshold after each delivery: renewal reward over the two policies'
/// per-cycle expected energy and length.
pub fn mixture_energy(params: &SystemParams, policy: &MixturePolicy) -> Result<f64, Error> {
    let (cycle, _, energy) = mixture_measures(params, policy)?;
    Ok(energy / cycle)
}

/// Long-run average age of a mixture policy re-drawn after each delivery.
pub fn mixture_age(params: &SystemParams, policy: &MixturePolicy) -> Result<f64, Error> {
    let (cycle, age, _) = mixture_measures(params, policy)?;
    Ok(age / cycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_oracle::{oracle_cost, simulate, SimPolicy};
    use crate::model::DistortionSpec;
    use crate::test_support::arb_instance;
    use proptest::prelude::*;

    fn single_level(p: f64, w: f64, e_max: f64) -> SystemParams {
        let spec = DistortionSpec::new(vec![1], vec![1], 1).unwrap();
        SystemParams::new(p, vec![1.0 - w, w], spec, e_max).unwrap()
    }

    #[test]
    fn slack_budget_returns_the_free_optimum() {
        let params = single_level(0.5, 0.5, 0.9);
        let (policy, trace) = bisect(&params, 1e-9).unwrap();
        assert_eq!(policy.low_policy.threshold, 1);
        assert_eq!(policy.high_policy.threshold, 1);
        assert_eq!(policy.mix_prob, 1.0);
        assert_eq!((trace.beta_minus, trace.beta_plus), (0.0, 0.0));
        assert_eq!(trace.iterations.len(), 1);
        let e = mixture_energy(&params, &policy).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn binding_budget_brackets_the_jump_and_interpolates() {
        // W = 1, p = 0: Ē(k) = 1/k and the optimal threshold steps from 2
        // to 3 at β = 3, so E_max = 0.4 lands between 1/2 and 1/3 with
        // interpolation weight (0.4 − 1/3)/(1/2 − 1/3) = 0.4.
        let params = single_level(0.0, 1.0, 0.4);
        let (policy, trace) = bisect(&params, 1e-9).unwrap();
        assert_eq!(policy.low_policy.threshold, 2);
        assert_eq!(policy.high_policy.threshold, 3);
        assert!((policy.mix_prob - 0.4).abs() < 1e-9, "{}", policy.mix_prob);
        assert!((trace.beta_minus - 3.0).abs() < 1e-8);
        assert!(trace.beta_plus - trace.beta_minus <= 1e-9);
        assert!(trace.beta_plus >= trace.beta_minus);
    }

    #[test]
    fn mixture_averages_follow_renewal_reward_not_interpolation() {
        // Same bracketing as above. Per-delivery redraws weight the two
        // policies by cycle length, so the realized energy is
        // 1/(0.4·2 + 0.6·3) = 1/2.6, a little under the 0.4 target, and
        // the realized age is (0.4·3 + 0.6·6)/2.6.
        let params = single_level(0.0, 1.0, 0.4);
        let (policy, _) = bisect(&params, 1e-9).unwrap();
        let e = mixture_energy(&params, &policy).unwrap();
        let a = mixture_age(&params, &policy).unwrap();
        assert!((e - 1.0 / 2.6).abs() < 1e-9, "{e}");
        assert!((a - 4.8 / 2.6).abs() < 1e-9, "{a}");

        let sim = simulate(&params, &SimPolicy::from(policy), 1_000_000, 13).unwrap();
        assert!((sim.empirical_avg_energy - e).abs() < 0.005, "{}", sim.empirical_avg_energy);
        assert!((sim.empirical_avg_age - a).abs() < 0.01, "{}", sim.empirical_avg_age);
    }

    #[test]
    fn tight_budget_is_met_within_one_percent_in_simulation() {
        let spec = DistortionSpec::new(vec![1, 25, 50], vec![2, 5, 7], 8).unwrap();
        let pmf = crate::model::pmf_from_erasures(&[0.5; 8]).unwrap();
        let params = SystemParams::new(0.5, pmf, spec, 0.1).unwrap();
        let (policy, _) = bisect(&params, 1e-6).unwrap();
        let sim = simulate(&params, &SimPolicy::from(policy), 10_000_000, 5).unwrap();
        let error = (sim.empirical_avg_energy - 0.1).abs() / 0.1;
        assert!(error <= 0.01, "{}", sim.empirical_avg_energy);
    }

    #[test]
    fn degenerate_bracket_collapses_to_a_single_policy() {
        let params = single_level(0.0, 1.0, 0.4);
        let (policy, _) = bisect(&params, 1e-9).unwrap();
        let single = MixturePolicy::single(policy.high_policy, 5.0);
        let e = mixture_energy(&params, &single).unwrap();
        let report = oracle_cost(&params, single.high_policy.threshold, 0.0).unwrap();
        assert_eq!(e, report.avg_energy);
    }

    #[test]
    fn hopeless_budget_reports_a_bracketing_failure() {
        let params = single_level(0.0, 1.0, 1e-300);
        match bisect(&params, 1e-6) {
            Err(Error::NoBracket { max_doublings }) => assert_eq!(max_doublings, 128),
            other => panic!("expected NoBracket, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn bisection_maintains_its_bracketing_invariant(
            params in arb_instance(3, 8),
            e_frac in 0.05f64..0.95,
        ) {
            // Scale the budget into the binding range below the free
            // optimum's spend.
            let free = probe(&params, 0.0).unwrap();
            let e_max = free.avg_energy * e_frac;
            prop_assume!(e_max > 1e-9);
            let params = params.with_e_max(e_max).unwrap();
            let (policy, trace) = bisect(&params, 1e-7).unwrap();

            prop_assert!(trace.beta_plus - trace.beta_minus <= 1e-7);
            let low_e = avg_energy(&params, policy.low_policy.threshold).unwrap();
            let high_e = avg_energy(&params, policy.high_policy.threshold).unwrap();
            if policy.low_policy.threshold != policy.high_policy.threshold {
                prop_assert!(low_e > e_max, "{low_e} vs {e_max}");
                prop_assert!(high_e <= e_max, "{high_e} vs {e_max}");
                prop_assert!((0.0..=1.0).contains(&policy.mix_prob));
                let predicted = policy.mix_prob * low_e + (1.0 - policy.mix_prob) * high_e;
                prop_assert!((predicted - e_max).abs() < 1e-9);
            }
            prop_assert!(policy.low_policy.threshold <= policy.high_policy.threshold);
        }
    }
}
