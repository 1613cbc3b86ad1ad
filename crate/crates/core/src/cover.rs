//! Greedy coverage selection over follower sets.
//!
//! Both selectors pick `k` bots one at a time by marginal coverage — the
//! number of followers a candidate adds on top of the union already covered
//! by earlier picks. `MinCover` always takes the candidate adding the fewest
//! new followers, `MaxCover` the most. Ties break toward the lowest bot id,
//! so selection is fully deterministic.

use std::collections::BTreeSet;
use std::collections::HashSet;

use thiserror::Error;

use crate::graph::UserId;

#[derive(Error, Debug)]
pub enum CoverError {
    #[error("requested {requested} bots but only {available} candidates are available")]
    InsufficientCandidates { requested: usize, available: usize },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Goal {
    Min,
    Max,
}

/// `candidates` must be sorted ascending by id with no duplicates; callers in
/// this crate iterate `BTreeMap`s, which guarantees that.
fn greedy_cover(
    candidates: &[(UserId, &BTreeSet<UserId>)],
    k: usize,
    goal: Goal,
) -> Result<Vec<UserId>, CoverError> {
    if k > candidates.len() {
        return Err(CoverError::InsufficientCandidates {
            requested: k,
            available: candidates.len(),
        });
    }
    let mut chosen = Vec::with_capacity(k);
    let mut covered: HashSet<UserId> = HashSet::new();
    let mut taken = vec![false; candidates.len()];
    for _ in 0..k {
        let mut best: Option<(usize, usize)> = None; // (candidate index, marginal gain)
        for (idx, (_, set)) in candidates.iter().enumerate() {
            if taken[idx] {
                continue;
            }
            let gain = set.iter().filter(|u| !covered.contains(u)).count();
            let better = match best {
                None => true,
                // Strict comparison keeps the earliest (lowest-id) candidate
                // on ties because candidates are scanned in ascending order.
                Some((_, best_gain)) => match goal {
                    Goal::Min => gain < best_gain,
                    Goal::Max => gain > best_gain,
                },
            };
            if better {
                best = Some((idx, gain));
            }
        }
        let (idx, _) = best.expect("k <= candidates.len() guarantees a pick");
        taken[idx] = true;
        let (id, set) = candidates[idx];
        covered.extend(set.iter().copied());
        chosen.push(id);
    }
    Ok(chosen)
}

/// Picks `k` bots whose union of follower sets is (greedily) smallest:
/// each step takes the candidate adding the fewest uncovered followers.
/// Returns the picks in selection order.
pub fn min_cover_greedy(
    candidates: &[(UserId, &BTreeSet<UserId>)],
    k: usize,
) -> Result<Vec<UserId>, CoverError> {
    greedy_cover(candidates, k, Goal::Min)
}

/// Picks `k` bots whose union of follower sets is (greedily) largest:
/// each step takes the candidate adding the most uncovered followers.
/// Returns the picks in selection order.
pub fn max_cover_greedy(
    candidates: &[(UserId, &BTreeSet<UserId>)],
    k: usize,
) -> Result<Vec<UserId>, CoverError> {
    greedy_cover(candidates, k, Goal::Max)
}

/// Union of the follower sets of `chosen`.
pub fn coverage_of(
    candidates: &[(UserId, &BTreeSet<UserId>)],
    chosen: &[UserId],
) -> BTreeSet<UserId> {
    let mut union = BTreeSet::new();
    for (id, set) in candidates {
        if chosen.contains(id) {
            union.extend(set.iter().copied());
        }
    }
    union
}
