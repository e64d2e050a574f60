//! Genericity check on valuation multisets.
//!
//! Patients are independent when no two different subsets of the valuation
//! multiset, each containing a positive entry, share a sum. Independence is
//! the condition under which the minimum equilibrium is unique and the
//! waiting-time dynamics provably converges.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::model::Instance;
use crate::Result;

/// Largest valuation-multiset size the exact check will enumerate.
pub const EXACT_CAP: usize = 24;

fn flatten(instance: &Instance) -> Vec<u64> {
    (0..instance.num_patients())
        .flat_map(|j| instance.patient_values(j).iter().copied())
        .collect()
}

/// Dependence witnesses that need no enumeration:
/// - a zero entry next to any positive entry (`{0, v}` and `{v}` collide);
/// - two equal positive entries at different positions.
fn quick_dependence(values: &[u64]) -> Option<bool> {
    let any_positive = values.iter().any(|&v| v > 0);
    if !any_positive {
        // With no positive entries there is no qualifying subset pair.
        return Some(true);
    }
    if values.iter().any(|&v| v == 0) {
        return Some(false);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Some(false);
    }
    None
}

/// All `2^n` subset sums of strictly positive values collide iff two
/// qualifying subsets share a sum.
fn has_subset_sum_collision(values: &[u64]) -> bool {
    let mut sums: Vec<u128> = Vec::with_capacity(1 << values.len());
    sums.push(0);
    for &v in values {
        let len = sums.len();
        for idx in 0..len {
            sums.push(sums[idx] + v as u128);
        }
    }
    sums.sort_unstable();
    sums.windows(2).any(|w| w[0] == w[1])
}

/// Exact independence decision. Requires `k * m <= EXACT_CAP`.
pub fn check_independence(instance: &Instance) -> Result<bool> {
    let values = flatten(instance);
    if let Some(verdict) = quick_dependence(&values) {
        return Ok(verdict);
    }
    if values.len() > EXACT_CAP {
        return Err(Error::CapExceeded {
            work: 1u128 << values.len().min(127),
            cap: 1u128 << EXACT_CAP,
        });
    }
    Ok(!has_subset_sum_collision(&values))
}

/// Heuristic verdict for instances too large to check exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeuristicIndependence {
    /// A genuine dependency was exhibited; the instance is dependent.
    Dependent,
    /// No dependency found among the sampled windows. The instance may
    /// still be dependent across entries that never shared a window.
    NoDependencyFound { windows_checked: usize },
}

/// Window size for the sampled exact checks.
const WINDOW: usize = 16;

/// Samples `windows` random index windows of the valuation multiset and
/// runs the exact collision check inside each. Any collision found is a
/// real dependency, so a dependent pair that fits inside a checked window
/// is never reported as independent.
pub fn check_independence_windowed(
    instance: &Instance,
    seed: u64,
    windows: usize,
) -> HeuristicIndependence {
    let values = flatten(instance);
    if let Some(verdict) = quick_dependence(&values) {
        return if verdict {
            HeuristicIndependence::NoDependencyFound { windows_checked: 0 }
        } else {
            HeuristicIndependence::Dependent
        };
    }
    if values.len() <= WINDOW {
        return if has_subset_sum_collision(&values) {
            HeuristicIndependence::Dependent
        } else {
            HeuristicIndependence::NoDependencyFound { windows_checked: 1 }
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..values.len()).collect();
    for _ in 0..windows {
        indices.shuffle(&mut rng);
        let sample: Vec<u64> = indices[..WINDOW].iter().map(|&i| values[i]).collect();
        if has_subset_sum_collision(&sample) {
            return HeuristicIndependence::Dependent;
        }
    }
    HeuristicIndependence::NoDependencyFound {
        windows_checked: windows,
    }
}
