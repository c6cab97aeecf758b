//! Dynamic-programming verification path on a truncated state space.
//!
//! States are pairs `(Δ, Λ)` with the age capped at `X` (the cap state
//! climbs to itself), actions are transmit or suspend with transmit
//! admissible only when `Λ ≥ D(Δ)`, and the stage cost is `Δ + β·u`.
//! [`discounted_vi`] solves the discounted problem by value iteration;
//! [`rvi`] solves the average-cost problem by relative value iteration.
//! Neither knows anything about thresholds: they optimize over all
//! history-independent policies on the truncated chain, which is what
//! makes agreement with the closed-form search evidence rather than
//! circularity.
//!
//! The cap only distorts values through trajectories that actually reach
//! it; its probability decays like `(B_L)^(X−δ_L)`, so the default
//! `X = 8·δ_L` keeps the bias far below the tolerances the test suite
//! asserts.

use crate::model::{State, SystemParams};
use crate::{invalid, Error};

/// Finite-state truncation of the scheduling problem at energy price `β`.
#[derive(Debug, Clone)]
pub struct TruncatedMdp {
    params: SystemParams,
    beta: f64,
    age_cap: u64,
}

impl TruncatedMdp {
    /// Builds the truncated problem. `age_cap` defaults to `8·δ_L` and
    /// may not go below `4·δ_L`, where truncation bias would start to
    /// show in the tested digits.
    pub fn new(params: &SystemParams, beta: f64, age_cap: Option<u64>) -> Result<Self, Error> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(invalid("beta", format!("{beta} is not a finite nonnegative real")));
        }
        let last = params.distortion().last_breakpoint();
        let cap = age_cap.unwrap_or(8 * last);
        if cap < 4 * last {
            return Err(invalid(
                "age_cap",
                format!("{cap} is below the minimum of {} (4 times the last breakpoint)", 4 * last),
            ));
        }
        Ok(TruncatedMdp {
            params: params.clone(),
            beta,
            age_cap: cap,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Age cap `X`; ages run over `1..=X`.
    pub fn age_cap(&self) -> u64 {
        self.age_cap
    }

    fn sample_states(&self) -> usize {
        self.params.distortion().sensor_count() + 1
    }

    fn index(&self, age: u64, samples: usize) -> usize {
        (age as usize - 1) * self.sample_states() + samples
    }
}

/// Value function over the truncated state space, either discounted
/// (`discount = Some(α)`) or a relative-value bias (`discount = None`).
#[derive(Debug, Clone)]
pub struct ValueFunction {
    values: Vec<f64>,
    age_cap: u64,
    sample_states: usize,
    pub discount: Option<f64>,
}

/// Comparison slack for the monotonicity checks: value iteration leaves
/// noise of a few ulps, which must not read as a structural violation.
const MONOTONE_SLACK: f64 = 1e-9;

impl ValueFunction {
    pub fn get(&self, age: u64, samples: usize) -> f64 {
        self.values[(age as usize - 1) * self.sample_states + samples]
    }

    pub fn age_cap(&self) -> u64 {
        self.age_cap
    }

    /// True when the value never drops as the age grows, at every sample
    /// count (up to solver noise).
    pub fn non_decreasing_in_age(&self) -> bool {
        for samples in 0..self.sample_states {
            for age in 1..self.age_cap {
                let here = self.get(age, samples);
                let up = self.get(age + 1, samples);
                if up < here - MONOTONE_SLACK * here.abs().max(1.0) {
                    return false;
                }
            }
        }
        true
    }

    /// True when the value never rises as more samples arrive, at every
    /// age (up to solver noise).
    pub fn non_increasing_in_samples(&self) -> bool {
        for age in 1..=self.age_cap {
            for samples in 0..self.sample_states - 1 {
                let here = self.get(age, samples);
                let more = self.get(age, samples + 1);
                if more > here + MONOTONE_SLACK * here.abs().max(1.0) {
                    return false;
                }
            }
        }
        true
    }
}

/// Deterministic stationary policy on the truncated state space.
#[derive(Debug, Clone)]
pub struct PolicyTable {
    transmit: Vec<bool>,
    age_cap: u64,
    sample_states: usize,
}

impl PolicyTable {
    pub fn transmits(&self, age: u64, samples: usize) -> bool {
        self.transmit[(age as usize - 1) * self.sample_states + samples]
    }

    pub fn age_cap(&self) -> u64 {
        self.age_cap
    }

    #[cfg(test)]
    pub(crate) fn from_fn(
        age_cap: u64,
        sample_states: usize,
        f: impl Fn(u64, usize) -> bool,
    ) -> Self {
        let mut transmit = Vec::with_capacity(age_cap as usize * sample_states);
        for age in 1..=age_cap {
            for samples in 0..sample_states {
                transmit.push(f(age, samples));
            }
        }
        PolicyTable {
            transmit,
            age_cap,
            sample_states,
        }
    }
}

/// One Bellman sweep: writes `T v` into `out` and the greedy action into
/// `policy`, returning the sup-norm difference from `v`. `alpha = 1`
/// gives the average-cost operator.
fn bellman_sweep(
    mdp: &TruncatedMdp,
    alpha: f64,
    v: &[f64],
    out: &mut [f64],
    policy: Option<&mut PolicyTable>,
) -> f64 {
    let spec = mdp.params.distortion();
    let m = mdp.sample_states();
    let x = mdp.age_cap;
    let pmf = mdp.params.pmf();
    let p = mdp.params.p();

    // E[v(age, Λ')] for each age, so each sweep is O(X·M).
    let mut ev = vec![0.0; x as usize + 1];
    for age in 1..=x {
        let base = (age as usize - 1) * m;
        ev[age as usize] = pmf
            .iter()
            .zip(&v[base..base + m])
            .map(|(&q, &val)| q * val)
            .sum();
    }

    let mut policy = policy;
    let mut sup = 0.0f64;
    for age in 1..=x {
        let next = (age + 1).min(x);
        let climb = ev[next as usize];
        let stage = age as f64;
        let q0 = stage + alpha * climb;
        let q1 = stage + mdp.beta + alpha * (p * climb + (1.0 - p) * ev[1]);
        let need = spec.distortion_at(age);
        for samples in 0..m {
            let idx = (age as usize - 1) * m + samples;
            let admissible = samples >= need;
            let transmit = admissible && q1 < q0;
            let value = if transmit { q1 } else { q0 };
            out[idx] = value;
            if let Some(table) = policy.as_mut() {
                table.transmit[idx] = transmit;
            }
            sup = sup.max((value - v[idx]).abs());
        }
    }
    sup
}

/// Discounted value iteration from `V ≡ 0`, run until the sup-norm step
/// is at most `tol·(1−α)/(2α)`, which bounds the value error by `tol`.
/// Returns the value function and the greedy policy (ties suspend).
pub fn discounted_vi(
    mdp: &TruncatedMdp,
    alpha: f64,
    tol: f64,
) -> Result<(ValueFunction, PolicyTable), Error> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 1)")));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(invalid("tol", format!("{tol} is not a positive real")));
    }
    let m = mdp.sample_states();
    let n = mdp.age_cap as usize * m;
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut policy = PolicyTable {
        transmit: vec![false; n],
        age_cap: mdp.age_cap,
        sample_states: m,
    };
    let stop = tol * (1.0 - alpha) / (2.0 * alpha);
    loop {
        let sup = bellman_sweep(mdp, alpha, &v, &mut next, Some(&mut policy));
        std::mem::swap(&mut v, &mut next);
        if sup <= stop {
            break;
        }
    }
    Ok((
        ValueFunction {
            values: v,
            age_cap: mdp.age_cap,
            sample_states: m,
            discount: Some(alpha),
        },
        policy,
    ))
}

/// Solution of the average-cost problem on the truncated chain.
#[derive(Debug, Clone)]
pub struct RviSolution {
    /// Optimal long-term average cost (gain).
    pub average_cost: f64,
    /// Relative value (bias), normalized to 0 at the reference state.
    pub bias: ValueFunction,
    /// Greedy policy at convergence (ties suspend).
    pub policy: PolicyTable,
    pub iterations: u64,
}

/// Relative value iteration with reference state `(1, M)`, run until the
/// span of the Bellman residual is at most `tol`; the gain estimate is
/// then within `tol/2` of the truncated chain's optimum.
///
/// Convergence needs an aperiodic optimal chain; `p > 0` guarantees that.
/// Hitting `max_iterations` first reports [`Error::NonConvergence`] with
/// the final span.
pub fn rvi(mdp: &TruncatedMdp, tol: f64, max_iterations: u64) -> Result<RviSolution, Error> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(invalid("tol", format!("{tol} is not a positive real")));
    }
    if max_iterations < 1 {
        return Err(invalid("max_iterations", "must be at least 1"));
    }
    let m = mdp.sample_states();
    let n = mdp.age_cap as usize * m;
    let reference = mdp.index(1, m - 1);
    let mut h = vec![0.0; n];
    let mut th = vec![0.0; n];
    let mut policy = PolicyTable {
        transmit: vec![false; n],
        age_cap: mdp.age_cap,
        sample_states: m,
    };

    let mut span = f64::INFINITY;
    for iteration in 1..=max_iterations {
        bellman_sweep(mdp, 1.0, &h, &mut th, Some(&mut policy));
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (new, old) in th.iter().zip(&h) {
            let residual = new - old;
            lo = lo.min(residual);
            hi = hi.max(residual);
        }
        span = hi - lo;
        if span <= tol {
            let offset = th[reference];
            for (dst, &src) in h.iter_mut().zip(&th) {
                *dst = src - offset;
            }
            return Ok(RviSolution {
                average_cost: 0.5 * (hi + lo),
                bias: ValueFunction {
                    values: h,
                    age_cap: mdp.age_cap,
                    sample_states: m,
                    discount: None,
                },
                policy,
                iterations: iteration,
            });
        }
        let offset = th[reference];
        for (dst, &src) in h.iter_mut().zip(&th) {
            *dst = src - offset;
        }
    }
    Err(Error::NonConvergence {
        solver: "rvi",
        iterations: max_iterations,
        span,
    })
}

/// Transmit and suspend action values of one state under a solved value
/// function (discounted, or bias with `α = 1`). The transmit value is
/// `None` where the distortion requirement blocks transmission.
pub fn q_values(mdp: &TruncatedMdp, vf: &ValueFunction, state: State) -> (f64, Option<f64>) {
    let pmf = mdp.params.pmf();
    let alpha = vf.discount.unwrap_or(1.0);
    let next = (state.age + 1).min(mdp.age_cap);
    let climb: f64 = pmf
        .iter()
        .enumerate()
        .map(|(l, &q)| q * vf.get(next, l))
        .sum();
    let reset: f64 = pmf
        .iter()
        .enumerate()
        .map(|(l, &q)| q * vf.get(1, l))
        .sum();
    let stage = state.age as f64;
    let q0 = stage + alpha * climb;
    let admissible = state.samples >= mdp.params.distortion().distortion_at(state.age);
    let q1 = admissible.then(|| {
        stage + mdp.beta + alpha * (mdp.params.p() * climb + (1.0 - mdp.params.p()) * reset)
    });
    (q0, q1)
}

/// Witness that a policy table is not of threshold type in the age.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureViolation {
    /// Admissible state where transmission starts (defines the candidate
    /// threshold).
    pub reference: State,
    /// First admissible state disagreeing with that threshold.
    pub violator: State,
}

/// Reads the age threshold off a policy table: the smallest age that
/// transmits at some admissible sample count. Verifies that the table
/// transmits at exactly the admissible states with age at or above it,
/// returning the first counterexample pair otherwise. A table that never
/// transmits yields `X + 1`. Inadmissible states are ignored.
pub fn extract_threshold(
    mdp: &TruncatedMdp,
    policy: &PolicyTable,
) -> Result<u64, StructureViolation> {
    let spec = mdp.params.distortion();
    let m = mdp.sample_states();
    let mut reference: Option<State> = None;
    'outer: for age in 1..=policy.age_cap {
        let need = spec.distortion_at(age);
        for samples in need..m {
            if policy.transmits(age, samples) {
                reference = Some(State { age, samples });
                break 'outer;
            }
        }
    }
    let Some(reference) = reference else {
        return Ok(policy.age_cap + 1);
    };

    let k = reference.age;
    for age in 1..=policy.age_cap {
        let need = spec.distortion_at(age);
        for samples in need..m {
            if policy.transmits(age, samples) != (age >= k) {
                return Err(StructureViolation {
                    reference,
                    violator: State { age, samples },
                });
            }
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pmf_from_erasures, DistortionSpec};
    use crate::threshold_search::optimal_threshold;

    fn always_admissible(p: f64) -> SystemParams {
        let spec = DistortionSpec::new(vec![1], vec![1], 1).unwrap();
        SystemParams::new(p, vec![0.0, 1.0], spec, 1.0).unwrap()
    }

    fn three_interval_params(p: f64, q: f64) -> SystemParams {
        let spec = DistortionSpec::new(vec![1, 4, 9], vec![1, 2, 3], 4).unwrap();
        let pmf = pmf_from_erasures(&[q; 4]).unwrap();
        SystemParams::new(p, pmf, spec, 1.0).unwrap()
    }

    #[test]
    fn cap_defaults_to_eight_breakpoints_and_rejects_tight_caps() {
        let params = three_interval_params(0.3, 0.5);
        let mdp = TruncatedMdp::new(&params, 1.0, None).unwrap();
        assert_eq!(mdp.age_cap(), 72);
        assert!(TruncatedMdp::new(&params, 1.0, Some(35)).is_err());
        assert!(TruncatedMdp::new(&params, 1.0, Some(36)).is_ok());
    }

    #[test]
    fn free_energy_discounted_values_solve_by_hand() {
        // Deterministic delivery and β = 0: transmitting resets every
        // slot, so V(age) = age + α·V(1) and V(1) = 1/(1−α).
        let params = always_admissible(0.0);
        let mdp = TruncatedMdp::new(&params, 0.0, Some(4)).unwrap();
        let (vf, policy) = discounted_vi(&mdp, 0.5, 1e-10).unwrap();
        assert!((vf.get(1, 1) - 2.0).abs() < 1e-9);
        assert!((vf.get(3, 1) - 4.0).abs() < 1e-9);
        for age in 1..=4 {
            assert!(policy.transmits(age, 1));
            assert!(!policy.transmits(age, 0));
        }
        assert_eq!(extract_threshold(&mdp, &policy), Ok(1));

        let (vf, _) = discounted_vi(&mdp, 0.9, 1e-10).unwrap();
        assert!((vf.get(1, 1) - 10.0).abs() < 1e-8);
    }

    #[test]
    fn discounted_values_are_monotone_in_age_and_samples() {
        let params = three_interval_params(0.3, 0.5);
        for alpha in [0.9, 0.99] {
            let mdp = TruncatedMdp::new(&params, 20.0, None).unwrap();
            let (vf, policy) = discounted_vi(&mdp, alpha, 1e-8).unwrap();
            assert!(vf.non_decreasing_in_age(), "alpha={alpha}");
            assert!(vf.non_increasing_in_samples(), "alpha={alpha}");
            let k = extract_threshold(&mdp, &policy).unwrap();
            assert!(k >= 1);
        }
    }

    #[test]
    fn transmit_advantage_does_not_depend_on_the_sample_count() {
        let params = three_interval_params(0.4, 0.4);
        let mdp = TruncatedMdp::new(&params, 10.0, None).unwrap();
        let (vf, _) = discounted_vi(&mdp, 0.95, 1e-9).unwrap();
        for age in [1, 3, 5, 9, 20, 40] {
            let mut advantage: Option<f64> = None;
            for samples in 0..=4 {
                let (q0, q1) = q_values(&mdp, &vf, State { age, samples });
                if let Some(q1) = q1 {
                    let gap = q1 - q0;
                    if let Some(prev) = advantage {
                        assert!((gap - prev).abs() < 1e-12, "age={age}");
                    }
                    advantage = Some(gap);
                }
            }
        }
    }

    #[test]
    fn rvi_gain_and_threshold_match_the_closed_form_search() {
        for (p, q, beta) in [(0.3, 0.5, 5.0), (0.5, 0.3, 25.0), (0.1, 0.6, 2.0)] {
            let params = three_interval_params(p, q);
            let mdp = TruncatedMdp::new(&params, beta, Some(90)).unwrap();
            let solution = rvi(&mdp, 1e-9, 2_000_000).unwrap();
            let search = optimal_threshold(&params, beta).unwrap();
            let k = extract_threshold(&mdp, &solution.policy).unwrap();
            assert_eq!(k, search.k_star, "p={p} q={q} beta={beta}");
            let gap = (solution.average_cost - search.cost_star).abs() / search.cost_star;
            assert!(gap < 1e-6, "p={p} q={q} beta={beta}: gap {gap}");
        }
    }

    #[test]
    fn rvi_agrees_with_the_search_on_the_reference_instance() {
        let spec = DistortionSpec::new(vec![1, 25, 50], vec![2, 5, 7], 8).unwrap();
        let pmf = pmf_from_erasures(&[0.5; 8]).unwrap();
        let params = SystemParams::new(0.5, pmf, spec, 1.0).unwrap();
        let search = optimal_threshold(&params, 25.0).unwrap();

        // Solving again with a doubled cap must leave the gain in place,
        // confirming the truncation itself contributes nothing visible.
        let mut gains = Vec::new();
        for cap in [400, 800] {
            let mdp = TruncatedMdp::new(&params, 25.0, Some(cap)).unwrap();
            let solution = rvi(&mdp, 1e-8, 5_000_000).unwrap();
            assert_eq!(extract_threshold(&mdp, &solution.policy), Ok(search.k_star));
            let gap = (solution.average_cost - search.cost_star).abs() / search.cost_star;
            assert!(gap < 1e-4, "cap {cap}: relative gap {gap:.3e}");
            assert!(
                solution.average_cost >= search.cost_star - 1e-4,
                "truncated gain {} undercuts the optimum {}",
                solution.average_cost,
                search.cost_star
            );
            gains.push(solution.average_cost);
        }
        assert!((gains[1] - gains[0]).abs() < 1e-3);
    }

    #[test]
    fn zero_price_policy_transmits_from_age_one() {
        let params = three_interval_params(0.3, 0.5);
        let mdp = TruncatedMdp::new(&params, 0.0, None).unwrap();
        let solution = rvi(&mdp, 1e-9, 2_000_000).unwrap();
        assert_eq!(extract_threshold(&mdp, &solution.policy), Ok(1));
    }

    #[test]
    fn rvi_reports_nonconvergence_with_the_final_span() {
        let params = three_interval_params(0.3, 0.5);
        let mdp = TruncatedMdp::new(&params, 5.0, None).unwrap();
        match rvi(&mdp, 1e-12, 3) {
            Err(Error::NonConvergence {
                solver,
                iterations,
                span,
            }) => {
                assert_eq!(solver, "rvi");
                assert_eq!(iterations, 3);
                assert!(span > 1e-12);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn threshold_extraction_flags_non_threshold_tables() {
        let params = three_interval_params(0.3, 0.5);
        let mdp = TruncatedMdp::new(&params, 1.0, Some(40)).unwrap();

        let all_suspend = PolicyTable::from_fn(40, 5, |_, _| false);
        assert_eq!(extract_threshold(&mdp, &all_suspend), Ok(41));

        let holed = PolicyTable::from_fn(40, 5, |age, samples| {
            samples >= params.distortion().distortion_at(age) && age >= 5 && age != 7
        });
        let err = extract_threshold(&mdp, &holed).unwrap_err();
        assert_eq!(err.reference, State { age: 5, samples: 2 });
        assert_eq!(err.violator, State { age: 7, samples: 2 });
    }
}
