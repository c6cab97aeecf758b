//! System model shared by every solver: the distortion requirement, the
//! sample-count distribution, channel and budget parameters, states, and
//! policy representations.
//!
//! The distortion requirement is a piecewise-constant non-decreasing map
//! from the current age to the minimum number of received measurements
//! needed before the access point may transmit:
//!
//! ```text
//! D(Δ) = h_l   for Δ ∈ [δ_l, δ_{l+1}),   l = 1..L,
//! ```
//!
//! with `δ_1 = 1`, breakpoints `δ_l` strictly increasing, levels `h_l`
//! strictly increasing, and `δ_{L+1} = ∞` implicit (the last interval is
//! unbounded). Transmission in state `(Δ, Λ)` is admissible iff `Λ ≥ D(Δ)`.

use serde::{Deserialize, Serialize};

use crate::{invalid, Error};

/// Piecewise-constant age-to-minimum-sample-count requirement `D(·)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistortionSpec {
    breakpoints: Vec<u64>,
    levels: Vec<usize>,
    sensor_count: usize,
}

impl DistortionSpec {
    /// Validates and builds a distortion spec.
    ///
    /// `breakpoints` are the ages `δ_1..δ_L` at which the requirement
    /// steps up (`δ_1` must be 1), `levels` the corresponding minimum
    /// sample counts `h_1..h_L`, and `sensor_count` the number of sensors
    /// `M` (so `h_L ≤ M` is satisfiable at all).
    pub fn new(
        breakpoints: Vec<u64>,
        levels: Vec<usize>,
        sensor_count: usize,
    ) -> Result<Self, Error> {
        if breakpoints.is_empty() {
            return Err(invalid("distortion", "needs at least one interval"));
        }
        if breakpoints.len() != levels.len() {
            return Err(invalid(
                "distortion",
                format!(
                    "{} breakpoints but {} levels",
                    breakpoints.len(),
                    levels.len()
                ),
            ));
        }
        if breakpoints[0] != 1 {
            return Err(invalid("distortion", "first breakpoint must be age 1"));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("distortion", "breakpoints must be strictly increasing"));
        }
        if levels[0] < 1 {
            return Err(invalid("distortion", "levels must be at least 1"));
        }
        if !levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("distortion", "levels must be strictly increasing"));
        }
        if *levels.last().unwrap() > sensor_count {
            return Err(invalid(
                "distortion",
                format!(
                    "top level {} exceeds the sensor count {}",
                    levels.last().unwrap(),
                    sensor_count
                ),
            ));
        }
        Ok(DistortionSpec {
            breakpoints,
            levels,
            sensor_count,
        })
    }

    /// Number of distortion intervals `L`.
    pub fn interval_count(&self) -> usize {
        self.breakpoints.len()
    }

    /// Number of sensors `M`.
    pub fn sensor_count(&self) -> usize {
        self.sensor_count
    }

    /// Breakpoints `δ_1..δ_L`.
    pub fn breakpoints(&self) -> &[u64] {
        &self.breakpoints
    }

    /// Levels `h_1..h_L`.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Last breakpoint `δ_L`, the start of the unbounded interval.
    pub fn last_breakpoint(&self) -> u64 {
        *self.breakpoints.last().unwrap()
    }

    /// 1-based index `l` of the interval `[δ_l, δ_{l+1})` containing `age`.
    pub fn interval_of(&self, age: u64) -> usize {
        debug_assert!(age >= 1);
        // partition_point counts the breakpoints ≤ age; δ_1 = 1 ≤ age
        // guarantees at least one.
        self.breakpoints.partition_point(|&d| d <= age)
    }

    /// Minimum sample count `D(age)` required to transmit at `age`.
    pub fn distortion_at(&self, age: u64) -> usize {
        self.levels[self.interval_of(age) - 1]
    }
}

/// Full system parameterization: channel, sample-count distribution,
/// distortion requirement, and energy budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    p: f64,
    pmf: Vec<f64>,
    distortion: DistortionSpec,
    e_max: f64,
}

impl SystemParams {
    /// Validates and builds system parameters.
    ///
    /// `p` is the access-point-to-receiver erasure probability (must be
    /// `< 1`: with `p = 1` nothing is ever delivered and no finite-age
    /// policy exists), `pmf` the distribution of the per-slot sample count
    /// `Λ` over `{0..M}`, and `e_max ∈ (0, 1]` the average-energy budget.
    pub fn new(
        p: f64,
        pmf: Vec<f64>,
        distortion: DistortionSpec,
        e_max: f64,
    ) -> Result<Self, Error> {
        if !(0.0..1.0).contains(&p) {
            return Err(invalid("p", format!("{p} is outside [0, 1)")));
        }
        if pmf.len() != distortion.sensor_count() + 1 {
            return Err(invalid(
                "pmf",
                format!(
                    "has {} entries, expected M+1 = {}",
                    pmf.len(),
                    distortion.sensor_count() + 1
                ),
            ));
        }
        if pmf.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(invalid("pmf", "entries must lie in [0, 1]"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("pmf", format!("sums to {total}, not 1")));
        }
        if !(e_max > 0.0 && e_max <= 1.0) {
            return Err(invalid("e_max", format!("{e_max} is outside (0, 1]")));
        }
        Ok(SystemParams {
            p,
            pmf,
            distortion,
            e_max,
        })
    }

    /// Erasure probability `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Probability mass function of the sample count `Λ` over `{0..M}`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Distortion requirement.
    pub fn distortion(&self) -> &DistortionSpec {
        &self.distortion
    }

    /// Energy budget `E_max`.
    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Replaces the energy budget, revalidating it.
    pub fn with_e_max(&self, e_max: f64) -> Result<Self, Error> {
        SystemParams::new(self.p, self.pmf.clone(), self.distortion.clone(), e_max)
    }

    /// Tail probability `F(r) = P(Λ ≥ r)`.
    ///
    /// `F(D(Δ))` is the per-slot probability that the distortion
    /// requirement at age `Δ` is met.
    pub fn tail_prob(&self, r: usize) -> f64 {
        self.pmf.iter().skip(r).sum()
    }

    /// Per-slot probability that transmitting at `age` fails to reset it:
    /// `B = 1 − (1−p)·F(D(age))`, the chance that either too few samples
    /// arrive or the transmission is erased.
    pub fn no_reset_prob(&self, age: u64) -> f64 {
        1.0 - (1.0 - self.p) * self.tail_prob(self.distortion.distortion_at(age))
    }
}

/// MDP state: current age and current sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct State {
    pub age: u64,
    pub samples: usize,
}

/// Whether `transmit` is allowed in `state`: suspension always is, and
/// transmission requires `Λ ≥ D(Δ)`.
pub fn is_admissible(spec: &DistortionSpec, state: State, transmit: bool) -> bool {
    !transmit || state.samples >= spec.distortion_at(state.age)
}

/// Exact distribution of the number of sensors whose measurement reaches
/// the access point, when sensor `m` is erased independently with
/// probability `q[m]` (a Poisson-binomial count, built by convolving one
/// sensor at a time).
pub fn pmf_from_erasures(q: &[f64]) -> Result<Vec<f64>, Error> {
    for (m, &qm) in q.iter().enumerate() {
        if !(0.0..=1.0).contains(&qm) {
            return Err(invalid(
                "q",
                format!("sensor {m} erasure probability {qm} is outside [0, 1]"),
            ));
        }
    }
    let mut pmf = vec![0.0; q.len() + 1];
    pmf[0] = 1.0;
    for (m, &qm) in q.iter().enumerate() {
        let succ = 1.0 - qm;
        // In-place convolution with {fail: qm, success: 1-qm}; descending
        // so each source entry is consumed before being overwritten.
        for j in (0..=m).rev() {
            pmf[j + 1] += pmf[j] * succ;
            pmf[j] *= qm;
        }
    }
    Ok(pmf)
}

/// Single-threshold scheduling policy: transmit iff `Δ ≥ k` and the
/// distortion requirement is met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub threshold: u64,
}

impl ThresholdPolicy {
    pub fn new(threshold: u64) -> Result<Self, Error> {
        if threshold < 1 {
            return Err(invalid("threshold", "must be at least 1"));
        }
        Ok(ThresholdPolicy { threshold })
    }

    /// Whether the policy transmits in `state`.
    pub fn transmits(&self, spec: &DistortionSpec, state: State) -> bool {
        state.age >= self.threshold && is_admissible(spec, state, true)
    }
}

/// Randomized mixture of two threshold policies.
///
/// After every successful delivery (and initially) the active policy is
/// re-drawn: `low_policy` with probability `mix_prob`, else `high_policy`.
/// `low_policy` is the threshold optimal at the energy price `beta_minus`
/// (spending more than the budget), `high_policy` the one at `beta_plus`
/// (spending within it); mixing meets the budget exactly when it binds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePolicy {
    pub low_policy: ThresholdPolicy,
    pub high_policy: ThresholdPolicy,
    pub mix_prob: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
}

impl MixturePolicy {
    pub fn new(
        low_policy: ThresholdPolicy,
        high_policy: ThresholdPolicy,
        mix_prob: f64,
        beta_minus: f64,
        beta_plus: f64,
    ) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&mix_prob) {
            return Err(invalid("mix_prob", format!("{mix_prob} is outside [0, 1]")));
        }
        if beta_minus > beta_plus {
            return Err(invalid(
                "beta_minus",
                format!("{beta_minus} exceeds beta_plus {beta_plus}"),
            ));
        }
        Ok(MixturePolicy {
            low_policy,
            high_policy,
            mix_prob,
            beta_minus,
            beta_plus,
        })
    }

    /// Degenerate mixture that always plays one threshold policy.
    pub fn single(policy: ThresholdPolicy, beta: f64) -> Self {
        MixturePolicy {
            low_policy: policy,
            high_policy: policy,
            mix_prob: 1.0,
            beta_minus: beta,
            beta_plus: beta,
        }
    }
}

/// JSON problem description accepted by the CLI.
///
/// Schema:
///
/// ```json
/// {
///   "p": 0.5,
///   "e_max": 0.1,
///   "M": 8,
///   "sensors": {"q": [0.5, 0.5, ...]},       // or {"pmf": [...]} over {0..M}
///   "distortion": {"breakpoints": [1, 25, 50], "levels": [2, 5, 7]}
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub p: f64,
    pub e_max: f64,
    pub sensors: SensorsConfig,
    pub distortion: DistortionConfig,
    #[serde(rename = "M")]
    pub sensor_count: usize,
}

/// Sample-count distribution: per-sensor erasure probabilities, or the
/// pmf of `Λ` directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SensorsConfig {
    Erasures { q: Vec<f64> },
    Pmf { pmf: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionConfig {
    pub breakpoints: Vec<u64>,
    pub levels: Vec<usize>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))
    }

    /// Validates the configuration into solver-ready parameters.
    pub fn to_params(&self) -> Result<SystemParams, Error> {
        let spec = DistortionSpec::new(
            self.distortion.breakpoints.clone(),
            self.distortion.levels.clone(),
            self.sensor_count,
        )?;
        let pmf = match &self.sensors {
            SensorsConfig::Erasures { q } => {
                if q.len() != self.sensor_count {
                    return Err(invalid(
                        "q",
                        format!("has {} entries, expected M = {}", q.len(), self.sensor_count),
                    ));
                }
                pmf_from_erasures(q)?
            }
            SensorsConfig::Pmf { pmf } => pmf.clone(),
        };
        SystemParams::new(self.p, pmf, spec, self.e_max)
    }
}
