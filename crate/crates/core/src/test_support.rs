//! Shared proptest strategies for randomized unit tests.

use proptest::collection::vec;
use proptest::prelude::*;

use crate::model::{DistortionSpec, SystemParams};

/// Relative gap |a − b| / max(1, |a|, |b|).
pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
}

/// Normalizes positive weights into a pmf whose entries sum to 1 exactly
/// up to the last-entry residual fix, so `SystemParams::new` accepts it.
pub(crate) fn normalize_pmf(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = pmf[..pmf.len() - 1].iter().sum();
    let last = pmf.len() - 1;
    pmf[last] = (1.0 - head).max(0.0);
    pmf
}

/// Random instance with up to `max_l` distortion intervals and up to
/// `max_m` sensors. Every pmf entry is bounded away from zero so all
/// distortion levels stay reachable.
pub(crate) fn arb_instance(max_l: usize, max_m: usize) -> impl Strategy<Value = SystemParams> {
    (2usize..=max_m)
        .prop_flat_map(move |m| (Just(m), 1usize..=max_l.min(m)))
        .prop_flat_map(move |(m, l)| {
            (
                Just(m),
                vec(0.05f64..1.0, m + 1),
                vec(1u64..40, l - 1),
                vec(1usize..=m, l),
                0.0f64..0.9,
            )
        })
        .prop_map(|(m, weights, gaps, level_steps, p)| {
            let pmf = normalize_pmf(&weights);
            let mut breakpoints = vec![1u64];
            for g in gaps {
                breakpoints.push(breakpoints.last().unwrap() + g);
            }
            let mut levels = Vec::with_capacity(level_steps.len());
            let mut h = 0usize;
            for (idx, step) in level_steps.iter().enumerate() {
                let room = m - h - (level_steps.len() - 1 - idx);
                h += 1.max(*step % room.max(1));
                levels.push(h);
            }
            let spec = DistortionSpec::new(breakpoints, levels, m).unwrap();
            SystemParams::new(p, pmf, spec, 0.5).unwrap()
        })
}
