//! Choice of the draft that iterative refinement starts from.

use crate::verifier::ErrorRank;

/// Index of the attempt with the fewest errors; the earliest one on ties.
/// Timed-out attempts rank below every finite count.
pub fn select_seed(ranks: &[ErrorRank]) -> Option<usize> {
    ranks
        .iter()
        .enumerate()
        .min_by_key(|&(i, r)| (*r, i))
        .map(|(i, _)| i)
}
