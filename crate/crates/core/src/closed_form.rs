//! Closed-form average cost and energy of a threshold policy.
//!
//! Under the policy "transmit iff `Δ ≥ k` and `Λ ≥ D(Δ)`", the age process
//! is a renewal chain: it climbs deterministically from 1 to `k`, then in
//! each slot of distortion interval `l` it resets with probability
//! `1 − B_l` and climbs otherwise, where
//!
//! ```text
//! F(r) = P(Λ ≥ r),        B_l = 1 − (1−p)·F(h_l).
//! ```
//!
//! Summing the stationary distribution in closed form gives the long-term
//! average Lagrangian cost of the threshold-`k` policy as a ratio
//!
//! ```text
//!             0.5k² − 0.5k + k/(1−B_{l_k−1}) + 1{l_k≤L}·J_{l_k}·(B_{l_k−1})^(δ_{l_k}−k) + O_{l_k}
//! L̄(π_k;β) = ───────────────────────────────────────────────────────────────────────────────────
//!             k − 1 + 1/(1−B_{l_k−1}) + 1{l_k≤L}·I_{l_k}·(B_{l_k−1})^(δ_{l_k}−k)
//! ```
//!
//! whose denominator is the expected renewal-cycle length and where
//! `l_k = min{l ≤ L+1 : δ_l > k}` locates the threshold among the
//! distortion intervals. The coefficient families `J, I, O` and the
//! inter-interval survival products `w(i,j)` depend only on the instance
//! and `β`, so a [`CoefficientSet`] is built once and reused across
//! thresholds.
//!
//! On the unbounded final interval `k ≥ δ_L` the cost is unimodal in `k`
//! and its minimizer has a closed form ([`k_ub`]); with a single
//! distortion level this specializes to the optimal threshold itself
//! ([`constant_threshold`]).

use serde::Serialize;

use crate::model::{DistortionSpec, SystemParams};
use crate::{invalid, Error};

/// Interval index `l_k = min{l ≤ L+1 : δ_l > k}` of the first breakpoint
/// strictly beyond the threshold `k`, with `δ_{L+1} = ∞` implicit.
///
/// Always at least 2, since `δ_1 = 1 ≤ k`.
pub fn l_index(spec: &DistortionSpec, k: u64) -> usize {
    debug_assert!(k >= 1);
    spec.interval_of(k) + 1
}

/// `base^exp` for the survival powers `(B_l)^(δ_{l+1}−δ_l)`.
///
/// Huge exponents underflow to 0, which is the correct limit everywhere
/// these powers appear (they multiply bounded correction terms).
fn bpow(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}

/// Instance- and `β`-dependent coefficients of the closed-form cost,
/// computed once per `(params, β)` pair and shared across thresholds.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    spec: DistortionSpec,
    beta: f64,
    /// `F(r)` for `r = 0..=M`.
    f: Vec<f64>,
    /// `F(h_l)` for `l = 1..=L`.
    f_level: Vec<f64>,
    /// `B_l` for `l = 1..=L`.
    b: Vec<f64>,
    /// `J_l` for `l = 2..=L`.
    j: Vec<f64>,
    /// `I_l` for `l = 2..=L`.
    i: Vec<f64>,
    /// `O_l` for `l = 2..=L+1`.
    o: Vec<f64>,
}

/// Builds the coefficient family for one `(params, β)` pair.
///
/// Fails with [`Error::UnreachableLevel`] if some level has `F(h_l) = 0`:
/// the age chain then never leaves that distortion regime and every
/// `1/(1−B_l)` term diverges.
pub fn coefficients(params: &SystemParams, beta: f64) -> Result<CoefficientSet, Error> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(invalid("beta", format!("{beta} is not a finite nonnegative real")));
    }
    let spec = params.distortion().clone();
    let m = spec.sensor_count();
    let levels = spec.levels().to_vec();
    let breaks = spec.breakpoints().to_vec();
    let count = spec.interval_count();

    // Right-to-left cumulative tail sums keep F exact at the top.
    let mut f = vec![0.0; m + 1];
    let mut acc = 0.0;
    for r in (0..=m).rev() {
        acc += params.pmf()[r];
        f[r] = acc;
    }

    let f_level: Vec<f64> = levels.iter().map(|&h| f[h]).collect();
    for (idx, &fl) in f_level.iter().enumerate() {
        if fl <= 0.0 {
            return Err(Error::UnreachableLevel {
                level: idx + 1,
                min_samples: levels[idx],
            });
        }
    }
    let b: Vec<f64> = f_level.iter().map(|&fl| 1.0 - (1.0 - params.p()) * fl).collect();

    let set = CoefficientSet {
        spec,
        beta,
        f,
        f_level,
        b,
        j: Vec::new(),
        i: Vec::new(),
        o: Vec::new(),
    };

    let mut j = Vec::with_capacity(count.saturating_sub(1));
    let mut i = Vec::with_capacity(count.saturating_sub(1));
    for l in 2..=count {
        let g_prev = 1.0 / (1.0 - set.b(l - 1));
        let age_cost_prev = breaks[l - 1] as f64 - 1.0 + beta * set.f_level(l - 1);
        let mut jl = -g_prev * g_prev - age_cost_prev * g_prev;
        let mut il = -g_prev;
        for jj in l..=count {
            let g = 1.0 / (1.0 - set.b(jj));
            let age_cost = breaks[jj - 1] as f64 - 1.0 + beta * set.f_level(jj);
            let (survive, next_age_cost) = if jj < count {
                let gap = breaks[jj] - breaks[jj - 1];
                (
                    bpow(set.b(jj), gap),
                    breaks[jj] as f64 - 1.0 + beta * set.f_level(jj),
                )
            } else {
                (0.0, 0.0)
            };
            let wj = set.w(l, jj);
            jl += wj
                * ((1.0 - survive * (1.0 + next_age_cost * (1.0 - set.b(jj)))) * g * g
                    + age_cost * g);
            il += wj * (1.0 - survive) * g;
        }
        j.push(jl);
        i.push(il);
    }

    let mut o = Vec::with_capacity(count);
    for l in 2..=count + 1 {
        let g_prev = 1.0 / (1.0 - set.b(l - 1));
        o.push(g_prev * g_prev + (-1.0 + beta * set.f_level(l - 1)) * g_prev);
    }

    Ok(CoefficientSet { j, i, o, ..set })
}

impl CoefficientSet {
    /// Energy price `β` the set was built for.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Distortion spec the set was built for.
    pub fn spec(&self) -> &DistortionSpec {
        &self.spec
    }

    /// Tail probability `F(r) = P(Λ ≥ r)`, `0 ≤ r ≤ M`.
    pub fn f(&self, r: usize) -> f64 {
        self.f[r]
    }

    /// `F(h_l)`, 1-based `l ≤ L`.
    pub fn f_level(&self, l: usize) -> f64 {
        self.f_level[l - 1]
    }

    /// No-reset probability `B_l = 1 − (1−p)F(h_l)`, 1-based `l ≤ L`.
    pub fn b(&self, l: usize) -> f64 {
        self.b[l - 1]
    }

    /// `J_l`, defined for `2 ≤ l ≤ L`.
    pub fn j_coef(&self, l: usize) -> f64 {
        self.j[l - 2]
    }

    /// `I_l`, defined for `2 ≤ l ≤ L`.
    pub fn i_coef(&self, l: usize) -> f64 {
        self.i[l - 2]
    }

    /// `O_l`, defined for `2 ≤ l ≤ L+1`.
    pub fn o_coef(&self, l: usize) -> f64 {
        self.o[l - 2]
    }

    /// Probability `w(i,j)` of climbing through intervals `i..j` without a
    /// reset: `∏_{v=i}^{j−1} (B_v)^(δ_{v+1}−δ_v)`, and 1 when `i ≥ j`.
    pub fn w(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i >= 1 && j <= self.spec.interval_count());
        if i >= j {
            return 1.0;
        }
        let breaks = self.spec.breakpoints();
        let mut prod = 1.0;
        for v in i..j {
            prod *= bpow(self.b(v), breaks[v] - breaks[v - 1]);
        }
        prod
    }
}

/// Per-policy cost summary: average Lagrangian cost, average age, and
/// average energy, tagged with how they were computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub lagrangian_cost: f64,
    pub avg_age: f64,
    pub avg_energy: f64,
    pub threshold: u64,
    pub beta: f64,
    pub source: CostSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSource {
    ClosedForm,
    ChainOracle,
    Simulation,
    Rvi,
}

/// Closed-form cost of the threshold-`k` policy using prebuilt
/// coefficients (the fast path for search loops). Requires `k ≥ 1`.
pub fn threshold_cost(coeffs: &CoefficientSet, k: u64) -> CostReport {
    debug_assert!(k >= 1);
    let count = coeffs.spec.interval_count();
    let lk = l_index(&coeffs.spec, k);
    let g_prev = 1.0 / (1.0 - coeffs.b(lk - 1));
    let kf = k as f64;

    let (survive, correction_j, correction_i) = if lk <= count {
        let pw = bpow(coeffs.b(lk - 1), coeffs.spec.breakpoints()[lk - 1] - k);
        (pw, coeffs.j_coef(lk) * pw, coeffs.i_coef(lk) * pw)
    } else {
        (0.0, 0.0, 0.0)
    };

    let numerator = 0.5 * kf * kf - 0.5 * kf + kf * g_prev + correction_j + coeffs.o_coef(lk);
    let cycle = kf - 1.0 + g_prev + correction_i;
    let lagrangian_cost = numerator / cycle;

    // Average energy shares the same cycle length; its numerator is the
    // expected number of transmissions per cycle.
    let mut sends = coeffs.f_level(lk - 1) * g_prev;
    if lk <= count {
        let mut upper = -coeffs.f_level(lk - 1) * g_prev;
        for j in lk..=count {
            let pw_j = if j < count {
                bpow(
                    coeffs.b(j),
                    coeffs.spec.breakpoints()[j] - coeffs.spec.breakpoints()[j - 1],
                )
            } else {
                0.0
            };
            upper += coeffs.w(lk, j) * coeffs.f_level(j) * (1.0 - pw_j) / (1.0 - coeffs.b(j));
        }
        sends += survive * upper;
    }
    let avg_energy = sends / cycle;

    CostReport {
        lagrangian_cost,
        avg_age: lagrangian_cost - coeffs.beta * avg_energy,
        avg_energy,
        threshold: k,
        beta: coeffs.beta,
        source: CostSource::ClosedForm,
    }
}

/// Closed-form average Lagrangian cost, age, and energy of the
/// threshold-`k` policy.
pub fn avg_lagrangian_cost(params: &SystemParams, k: u64, beta: f64) -> Result<CostReport, Error> {
    if k < 1 {
        return Err(invalid("threshold", "must be at least 1"));
    }
    let coeffs = coefficients(params, beta)?;
    Ok(threshold_cost(&coeffs, k))
}

/// Closed-form long-term average energy of the threshold-`k` policy
/// (independent of `β`).
pub fn avg_energy(params: &SystemParams, k: u64) -> Result<f64, Error> {
    Ok(avg_lagrangian_cost(params, k, 0.0)?.avg_energy)
}

/// Smallest `k ≥ 0` with `H(k) ≥ 0` for the marginal-cost quadratic
/// `H(k) = 0.5k² + (0.5 + B/(1−B))·k − β·F/(1−B)`.
///
/// `H(k)` has the sign of `L̄(π_{k+1}) − L̄(π_k)` on the final interval, so
/// this is the unconstrained minimizer of the tail cost. The root
/// `σ = −(1+B)/(2(1−B)) + sqrt(B²/(1−B)² + (B+2βF)/(1−B) + 1/4)` is
/// evaluated in the cancellation-free form `4βF/((1+B) + sqrt((1+B)² +
/// 8βF(1−B)))`, then `⌈σ⌉` is nudged against `H` itself so a root landing
/// exactly on an integer cannot round to the wrong side.
fn tail_minimizer(b: f64, f: f64, beta: f64) -> u64 {
    let c = 4.0 * beta * f;
    let s = 1.0 + b;
    let sigma = if c == 0.0 {
        0.0
    } else {
        c / (s + (s * s + 2.0 * c * (1.0 - b)).sqrt())
    };
    let g = 1.0 / (1.0 - b);
    let h = |k: u64| {
        let kf = k as f64;
        0.5 * kf * kf + (0.5 + b * g) * kf - beta * f * g
    };
    let mut y = sigma.ceil() as u64;
    while y > 0 && h(y - 1) >= 0.0 {
        y -= 1;
    }
    while h(y) < 0.0 {
        y += 1;
    }
    y
}

/// Optimal threshold restricted to the final distortion interval
/// `k ≥ δ_L`: the tail cost first decreases then increases in `k`, and
/// its minimizer is `max{δ_L, ⌈σ⌉}` with `σ` the positive root of the
/// marginal-cost quadratic in `B_L` and `F(h_L)`.
pub fn k_ub(params: &SystemParams, beta: f64) -> Result<u64, Error> {
    let coeffs = coefficients(params, beta)?;
    let count = coeffs.spec.interval_count();
    let y = tail_minimizer(coeffs.b(count), coeffs.f_level(count), beta);
    Ok(y.max(params.distortion().last_breakpoint()))
}

/// Optimal threshold when the distortion requirement is a constant `h`
/// (a single interval), in terms of the per-slot probability `W = F(h)`
/// that the requirement is met and the erasure probability `p`:
/// `max{1, ⌈σ⌉}` with `σ` the positive root of the marginal-cost
/// quadratic in `R = 1 − (1−p)W` and `W`.
pub fn constant_threshold(beta: f64, w: f64, p: f64) -> Result<u64, Error> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(invalid("beta", format!("{beta} is not a finite nonnegative real")));
    }
    if !(w > 0.0 && w <= 1.0) {
        return Err(invalid("W", format!("{w} is outside (0, 1]")));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(invalid("p", format!("{p} is outside [0, 1)")));
    }
    let r = 1.0 - (1.0 - p) * w;
    Ok(tail_minimizer(r, w, beta).max(1))
}

/// Axis swept by [`monotonicity_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeAxis {
    P,
    W,
    Beta,
}

/// Constant-distortion thresholds along a grid on one axis, holding the
/// other two parameters fixed. Test support for the threshold's
/// monotonicity in `p`, `W`, and `β`.
pub fn monotonicity_probe(
    beta: f64,
    w: f64,
    p: f64,
    axis: ProbeAxis,
    grid: &[f64],
) -> Result<Vec<u64>, Error> {
    grid.iter()
        .map(|&g| match axis {
            ProbeAxis::P => constant_threshold(beta, w, g),
            ProbeAxis::W => constant_threshold(beta, g, p),
            ProbeAxis::Beta => constant_threshold(g, w, p),
        })
        .collect()
}
