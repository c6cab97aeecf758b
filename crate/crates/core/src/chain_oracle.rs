//! Numeric verification path for threshold policies.
//!
//! Everything here works directly from the age chain's transition
//! structure, never from the closed-form coefficient algebra, so the two
//! routes can legitimately check each other. Under a threshold policy the
//! age climbs deterministically below `k` and, from `k` on, resets with
//! probability `1 − B(Δ)` per slot, where `B(Δ) = 1 − (1−p)·F(D(Δ))` is
//! piecewise constant in the distortion intervals and settles at `B_L`
//! beyond the last breakpoint. Visit weights per renewal cycle follow the
//! one-step recursion
//!
//! ```text
//! w_1 = 1,    w_{Δ+1} = w_Δ           for Δ < k,
//!             w_{Δ+1} = w_Δ · B(Δ)    for Δ ≥ k,
//! ```
//!
//! and every infinite sum is finished off with the exact geometric tail
//! from `max(k, δ_L)` on, so truncation introduces no error at all.
//!
//! The module also carries the Monte Carlo simulator for threshold,
//! mixture, and greedy policies, which estimates the same averages from
//! sampled trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::closed_form::{CostReport, CostSource};
use crate::model::{MixturePolicy, SystemParams, ThresholdPolicy};
use crate::{invalid, Error};

/// Expected totals over one renewal cycle (delivery to delivery) of the
/// threshold-`k` age chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenewalMeasures {
    /// Expected cycle length in slots.
    pub cycle_length: f64,
    /// Expected sum of ages over the cycle.
    pub age_sum: f64,
    /// Expected number of transmissions over the cycle.
    pub energy: f64,
}

fn check_reachable(params: &SystemParams) -> Result<(), Error> {
    let spec = params.distortion();
    for (idx, &h) in spec.levels().iter().enumerate() {
        if params.tail_prob(h) <= 0.0 {
            return Err(Error::UnreachableLevel {
                level: idx + 1,
                min_samples: h,
            });
        }
    }
    Ok(())
}

/// Per-cycle expected length, age sum, and transmission count of the
/// threshold-`k` policy, from the visit-weight recursion plus exact
/// geometric tails.
pub fn renewal_measures(params: &SystemParams, k: u64) -> Result<RenewalMeasures, Error> {
    if k < 1 {
        return Err(invalid("threshold", "must be at least 1"));
    }
    check_reachable(params)?;
    let spec = params.distortion();
    let cap = k.max(spec.last_breakpoint());

    let mut w = 1.0f64;
    let mut cycle_length = 0.0;
    let mut age_sum = 0.0;
    let mut energy = 0.0;
    for age in 1..=cap {
        cycle_length += w;
        age_sum += w * age as f64;
        if age >= k {
            energy += w * params.tail_prob(spec.distortion_at(age));
            w *= params.no_reset_prob(age);
        }
    }

    // Ages beyond cap all transmit, all sit in the last distortion
    // interval, and decay by the constant ratio B_L per step.
    let r = params.no_reset_prob(cap + 1);
    let tail_visits = w / (1.0 - r);
    cycle_length += tail_visits;
    age_sum += w * ((cap + 1) as f64 / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
    energy += tail_visits * params.tail_prob(spec.distortion_at(cap + 1));

    Ok(RenewalMeasures {
        cycle_length,
        age_sum,
        energy,
    })
}

/// Average Lagrangian cost, age, and energy of the threshold-`k` policy,
/// computed by renewal reward over the numeric chain.
pub fn oracle_cost(params: &SystemParams, k: u64, beta: f64) -> Result<CostReport, Error> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(invalid("beta", format!("{beta} is not a finite nonnegative real")));
    }
    let m = renewal_measures(params, k)?;
    let avg_age = m.age_sum / m.cycle_length;
    let avg_energy = m.energy / m.cycle_length;
    Ok(CostReport {
        lagrangian_cost: avg_age + beta * avg_energy,
        avg_age,
        avg_energy,
        threshold: k,
        beta,
        source: CostSource::ChainOracle,
    })
}

/// Stationary distribution of the age chain under a threshold policy.
#[derive(Debug, Clone)]
pub struct SteadyState {
    /// `z[i]` is the stationary probability of age `i + 1`.
    pub z: Vec<f64>,
    /// Stationary mass at ages beyond the stored vector (summed in closed
    /// form, so the distribution is exact: `sum(z) + tail_mass = 1`).
    pub tail_mass: f64,
    /// Threshold the chain was solved for.
    pub threshold: u64,
}

const STEADY_STATE_MAX_AGES: usize = 20_000_000;

/// Stationary age distribution of the threshold-`k` chain, materialized
/// out to the point where the remaining (exactly-summed) geometric tail
/// holds at most a `tail_tol` fraction of the mass.
pub fn steady_state(params: &SystemParams, k: u64, tail_tol: f64) -> Result<SteadyState, Error> {
    if k < 1 {
        return Err(invalid("threshold", "must be at least 1"));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid("tail_tol", format!("{tail_tol} is outside (0, 1)")));
    }
    check_reachable(params)?;
    let spec = params.distortion();
    let min_cap = k.max(spec.last_breakpoint());

    let mut z = Vec::new();
    let mut w = 1.0f64;
    let mut sum = 0.0;
    let mut tail = f64::INFINITY;
    let mut age = 1u64;
    loop {
        z.push(w);
        sum += w;
        if age >= k {
            w *= params.no_reset_prob(age);
        }
        if age >= min_cap {
            let r = params.no_reset_prob(age + 1);
            tail = w / (1.0 - r);
            if tail <= tail_tol * (sum + tail) {
                break;
            }
        }
        if z.len() >= STEADY_STATE_MAX_AGES {
            return Err(Error::NonConvergence {
                solver: "steady_state",
                iterations: z.len() as u64,
                span: tail / (sum + tail),
            });
        }
        age += 1;
    }

    let total = sum + tail;
    for zi in &mut z {
        *zi /= total;
    }
    Ok(SteadyState {
        z,
        tail_mass: tail / total,
        threshold: k,
    })
}

/// Policy accepted by [`simulate`].
#[derive(Debug, Clone)]
pub enum SimPolicy {
    Threshold(ThresholdPolicy),
    Mixture(MixturePolicy),
}

impl From<ThresholdPolicy> for SimPolicy {
    fn from(p: ThresholdPolicy) -> Self {
        SimPolicy::Threshold(p)
    }
}

impl From<MixturePolicy> for SimPolicy {
    fn from(p: MixturePolicy) -> Self {
        SimPolicy::Mixture(p)
    }
}

/// Outcome of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub horizon: u64,
    pub seed: u64,
    /// Identifier of the generator family, for reproducibility notes.
    pub rng: &'static str,
    pub empirical_avg_age: f64,
    pub empirical_avg_energy: f64,
    /// Consecutive-window averages (at most 100 windows) for convergence
    /// diagnostics and CSV series output.
    pub windows: Vec<WindowStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowStats {
    /// Number of slots in the window (the last one may run short).
    pub slots: u64,
    pub avg_age: f64,
    pub avg_energy: f64,
}

const RNG_ALGORITHM: &str = "chacha12";

struct SlotSampler {
    cdf: Vec<f64>,
    success: f64,
}

impl SlotSampler {
    fn new(params: &SystemParams) -> Self {
        let mut cdf = Vec::with_capacity(params.pmf().len());
        let mut acc = 0.0;
        for &q in params.pmf() {
            acc += q;
            cdf.push(acc);
        }
        SlotSampler {
            cdf,
            success: 1.0 - params.p(),
        }
    }

    fn sample_count(&self, rng: &mut ChaCha12Rng) -> usize {
        let u = rng.gen::<f64>();
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cdf.len() - 1)
    }

    fn delivered(&self, rng: &mut ChaCha12Rng) -> bool {
        rng.gen::<f64>() < self.success
    }
}

struct WindowTracker {
    window_len: u64,
    slots: u64,
    age_sum: u128,
    energy: u64,
    windows: Vec<WindowStats>,
}

impl WindowTracker {
    fn new(horizon: u64) -> Self {
        WindowTracker {
            window_len: horizon.div_ceil(100).max(1),
            slots: 0,
            age_sum: 0,
            energy: 0,
            windows: Vec::new(),
        }
    }

    fn record(&mut self, age: u64, transmitted: bool) {
        self.slots += 1;
        self.age_sum += age as u128;
        self.energy += transmitted as u64;
        if self.slots == self.window_len {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.slots > 0 {
            self.windows.push(WindowStats {
                slots: self.slots,
                avg_age: self.age_sum as f64 / self.slots as f64,
                avg_energy: self.energy as f64 / self.slots as f64,
            });
            self.slots = 0;
            self.age_sum = 0;
            self.energy = 0;
        }
    }
}

/// Simulates a threshold or mixture policy for `horizon` slots.
///
/// The generator is consumed in a fixed per-slot order: one uniform draw
/// for the sample count; one for channel success if a transmission
/// happens; for mixture policies, one more to redraw the active threshold
/// after each delivery (and one before the first slot). Identical
/// `(params, policy, horizon, seed)` therefore reproduce the result bit
/// for bit.
pub fn simulate(
    params: &SystemParams,
    policy: &SimPolicy,
    horizon: u64,
    seed: u64,
) -> Result<SimResult, Error> {
    if horizon < 1 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sampler = SlotSampler::new(params);
    let spec = params.distortion();

    let draw_threshold = |rng: &mut ChaCha12Rng| match policy {
        SimPolicy::Threshold(t) => t.threshold,
        SimPolicy::Mixture(m) => {
            if rng.gen::<f64>() < m.mix_prob {
                m.low_policy.threshold
            } else {
                m.high_policy.threshold
            }
        }
    };

    let mut active_k = draw_threshold(&mut rng);
    let mut age = 1u64;
    let mut age_total = 0u128;
    let mut energy_total = 0u64;
    let mut tracker = WindowTracker::new(horizon);

    for _ in 0..horizon {
        let samples = sampler.sample_count(&mut rng);
        let transmit = age >= active_k && samples >= spec.distortion_at(age);
        age_total += age as u128;
        tracker.record(age, transmit);
        let mut delivered = false;
        if transmit {
            energy_total += 1;
            delivered = sampler.delivered(&mut rng);
        }
        if delivered {
            age = 1;
            if matches!(policy, SimPolicy::Mixture(_)) {
                active_k = draw_threshold(&mut rng);
            }
        } else {
            age += 1;
        }
    }
    tracker.flush();

    Ok(SimResult {
        horizon,
        seed,
        rng: RNG_ALGORITHM,
        empirical_avg_age: age_total as f64 / horizon as f64,
        empirical_avg_energy: energy_total as f64 / horizon as f64,
        windows: tracker.windows,
    })
}

/// Simulates the greedy baseline: transmit whenever the distortion
/// requirement is met and the running average energy `e_t/(t−1)` is
/// strictly below the budget (the first slot spends freely).
///
/// Uses the same per-slot draw order as [`simulate`], so greedy and
/// threshold runs with equal seeds see identical sample-count and channel
/// randomness whenever their transmit decisions coincide.
pub fn greedy_simulate(params: &SystemParams, horizon: u64, seed: u64) -> Result<SimResult, Error> {
    if horizon < 1 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sampler = SlotSampler::new(params);
    let spec = params.distortion();
    let e_max = params.e_max();

    let mut age = 1u64;
    let mut age_total = 0u128;
    let mut energy_total = 0u64;
    let mut tracker = WindowTracker::new(horizon);

    for t in 1..=horizon {
        let samples = sampler.sample_count(&mut rng);
        let within_budget = t == 1 || (energy_total as f64) < e_max * (t - 1) as f64;
        let transmit = within_budget && samples >= spec.distortion_at(age);
        age_total += age as u128;
        tracker.record(age, transmit);
        let mut delivered = false;
        if transmit {
            energy_total += 1;
            delivered = sampler.delivered(&mut rng);
        }
        if delivered {
            age = 1;
        } else {
            age += 1;
        }
    }
    tracker.flush();

    Ok(SimResult {
        horizon,
        seed,
        rng: RNG_ALGORITHM,
        empirical_avg_age: age_total as f64 / horizon as f64,
        empirical_avg_energy: energy_total as f64 / horizon as f64,
        windows: tracker.windows,
    })
}
