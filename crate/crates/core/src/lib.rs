//! Transmission scheduling that minimizes the long-term average age of
//! information (AoI) at a receiver, subject to a long-term average energy
//! budget and an age-dependent distortion requirement.
//!
//! The system is slotted. Each slot, `M` sensors report measurements of a
//! common process to an access point; `Λ_t` of them arrive. The access point
//! may fuse the measurements into one update and transmit it over an erasure
//! channel (erasure probability `p`), but only if the sample count meets the
//! distortion requirement `Λ_t ≥ D(Δ_t)`, where the age `Δ_t` is the number
//! of slots since the last delivered update was generated and `D` is a
//! non-decreasing step function: the staler the receiver's copy, the better
//! the next update has to be. Age dynamics:
//!
//! ```text
//!           | 1          if u_t = 1 and the transmission is delivered,
//! Δ_{t+1} = |
//!           | Δ_t + 1    otherwise.
//! ```
//!
//! Transmitting costs one unit of energy; the long-term average energy spent
//! per slot must stay within a budget `E_max`. The goal is a scheduling
//! policy minimizing the long-term average age subject to that budget.
//!
//! The constrained problem is solved through its Lagrangian relaxation: for
//! an energy price `β ≥ 0` the per-slot cost becomes `Δ_t + β·u_t`, the
//! relaxed problem is solved by an age-threshold policy ("transmit iff
//! `Δ ≥ k` and admissible"), and the budget is met exactly by randomizing
//! between the threshold policies bracketing the critical price.
//!
//! Module layout:
//!
//! - [`model`]: system parameters, distortion spec, policies, JSON config.
//! - [`closed_form`]: exact average cost and energy of a threshold policy,
//!   the optimal threshold over the last distortion interval, and the
//!   constant-distortion special case.
//! - [`threshold_search`]: optimal threshold at fixed `β` in `O(δ_L)`
//!   evaluations, plus a brute-force reference search.
//! - [`lagrange`]: bisection on `β` and assembly of the budget-meeting
//!   mixture policy.
//! - [`chain_oracle`]: independent verification path: numeric steady state
//!   of the age chain, Monte Carlo simulation, greedy baseline.
//! - [`mdp_oracle`]: independent verification path: discounted and
//!   relative value iteration on a truncated state space.
//! - [`cli`]: implementation of the `aoi-sched` command line interface.

pub mod chain_oracle;
pub mod cli;
pub mod closed_form;
pub mod lagrange;
pub mod mdp_oracle;
pub mod model;
pub mod threshold_search;

#[cfg(test)]
pub(crate) mod test_support;

/// Errors shared across the crate.
///
/// [`Error::code`] gives a stable machine-readable identifier; the CLI
/// prints it and maps it to a nonzero exit status.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter failed validation at construction time.
    #[error("invalid {field}: {message}")]
    InvalidParameter { field: String, message: String },

    /// A distortion level can never be met: `P(Λ ≥ h_l) = 0`, so once the
    /// age enters interval `l` the chain can never reset and the average
    /// age diverges.
    #[error(
        "distortion level {level} requires {min_samples} samples, \
         which arrive with probability zero"
    )]
    UnreachableLevel { level: usize, min_samples: usize },

    /// Doubling the energy price never brought the average energy under
    /// the budget.
    #[error("could not bracket the energy budget within {max_doublings} doublings of beta")]
    NoBracket { max_doublings: u32 },

    /// An iterative solver hit its iteration cap before meeting its
    /// convergence criterion.
    #[error("{solver} did not converge within {iterations} iterations (span {span:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: u64,
        span: f64,
    },

    /// Reading or writing a file failed.
    #[error("{context}: {message}")]
    Io { context: String, message: String },
}

impl Error {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::UnreachableLevel { .. } => "unreachable_level",
            Error::NoBracket { .. } => "no_bracket",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io { .. } => "io",
        }
    }
}

pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        message: message.into(),
    }
}
