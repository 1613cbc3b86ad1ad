//! Exhaustive reference solver for tiny distribution instances.
//!
//! Enumerates every assignment of bots to levels (including "unplaced"),
//! keeps the feasible ones, and returns the assignment minimizing the
//! objective. Exists purely as an oracle against which the greedy
//! [`crate::forest::build_forest`] heuristic can be checked, so it is
//! deliberately capped at 8 bots and height 4.

use std::collections::{BTreeMap, BTreeSet};

use crate::forest::{metrics_from_levels, RetweetForest, SpamParams, TreeError};
use crate::graph::{BotnetInstance, UserId};

const MAX_BOTS: usize = 8;
const MAX_HEIGHT: usize = 4;

/// Finds the optimal forest by brute force and returns it with its objective
/// value. Ties are broken toward the lexicographically smallest assignment
/// (bots in ascending id order, "unplaced" sorting before level 1).
///
/// Errors with [`TreeError::BruteForceTooLarge`] beyond 8 bots or height 4,
/// and with [`TreeError::EmptyCoverage`] when no placement reaches any
/// follower (i.e. no bot has followers).
pub fn brute_force_optimum(
    botnet: &BotnetInstance,
    params: &SpamParams,
) -> Result<(RetweetForest, f64), TreeError> {
    params.validate()?;
    let bots: Vec<UserId> = botnet.bots().collect();
    let n = bots.len();
    let height = params.max_height;
    if n > MAX_BOTS || height > MAX_HEIGHT {
        return Err(TreeError::BruteForceTooLarge {
            bots: n,
            height,
            max_bots: MAX_BOTS,
            max_height: MAX_HEIGHT,
        });
    }
    let base = height + 1; // digit 0 = unplaced, digit k = level k
    let total = (base as u64).checked_pow(n as u32).unwrap_or(u64::MAX);

    let quota = |bot: UserId| -> usize {
        botnet
            .followers(bot)
            .map(|f| params.child_quota(f.len()))
            .unwrap_or(0)
    };

    let mut best: Option<(Vec<BTreeSet<UserId>>, f64)> = None;
    let mut digits = vec![0usize; n];
    for code in 0..total {
        let mut rest = code;
        for i in (0..n).rev() {
            digits[i] = (rest % base as u64) as usize;
            rest /= base as u64;
        }

        let mut levels: Vec<BTreeSet<UserId>> = vec![BTreeSet::new(); height];
        for (i, d) in digits.iter().enumerate() {
            if *d > 0 {
                levels[*d - 1].insert(bots[i]);
            }
        }
        if !is_feasible(&levels, params, &quota) {
            continue;
        }
        let Ok(metrics) = metrics_from_levels(&levels, botnet, params) else {
            continue; // nothing covered
        };
        let better = match &best {
            None => true,
            Some((_, best_f)) => metrics.objective_f < *best_f,
        };
        if better {
            best = Some((levels, metrics.objective_f));
        }
    }

    let Some((levels, objective_f)) = best else {
        return Err(TreeError::EmptyCoverage);
    };
    let forest = link_parents(levels, botnet, params);
    Ok((forest, objective_f))
}

/// Structural feasibility: levels are populated contiguously from level 1,
/// the first `M` levels respect the budget, and each level at depth `M+1`
/// and below fits within the child capacity of the level above.
fn is_feasible(
    levels: &[BTreeSet<UserId>],
    params: &SpamParams,
    quota: &impl Fn(UserId) -> usize,
) -> bool {
    let depth = params.suspension_depth;
    let top = match levels.iter().rposition(|l| !l.is_empty()) {
        Some(idx) => idx + 1,
        None => return false,
    };
    if levels.iter().take(top).any(|l| l.is_empty()) {
        return false;
    }
    let early: usize = levels.iter().take(depth).map(|l| l.len()).sum();
    if early > params.budget {
        return false;
    }
    for k in depth..levels.len() {
        let Some(children) = levels.get(k) else { break };
        if children.is_empty() {
            continue;
        }
        let capacity: usize = levels[k - 1].iter().map(|b| quota(*b)).sum();
        if capacity < children.len() {
            return false;
        }
    }
    true
}

/// Produces any valid parent linking for a feasible level assignment:
/// children rotate over the parents one level up; parents within the
/// suspended region have unlimited fan-out, deeper ones honor their quota.
fn link_parents(
    levels: Vec<BTreeSet<UserId>>,
    botnet: &BotnetInstance,
    params: &SpamParams,
) -> RetweetForest {
    let mut parent = BTreeMap::new();
    for k in 1..levels.len() {
        let children = &levels[k];
        if children.is_empty() {
            continue;
        }
        let parents: Vec<UserId> = levels[k - 1].iter().copied().collect();
        let unlimited = k < params.suspension_depth; // parent level < M
        let mut remaining: Vec<usize> = parents
            .iter()
            .map(|p| {
                if unlimited {
                    usize::MAX
                } else {
                    botnet
                        .followers(*p)
                        .map(|f| params.child_quota(f.len()))
                        .unwrap_or(0)
                }
            })
            .collect();
        let mut cursor = 0usize;
        for child in children {
            for _ in 0..parents.len() {
                let idx = cursor % parents.len();
                cursor += 1;
                if remaining[idx] > 0 {
                    if remaining[idx] != usize::MAX {
                        remaining[idx] -= 1;
                    }
                    parent.insert(*child, parents[idx]);
                    break;
                }
            }
        }
    }
    RetweetForest::new(levels, parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{build_forest, default_lags, objective, validate};

    fn u(raw: u64) -> UserId {
        UserId(raw)
    }

    fn botnet_from(spec: &[(u64, &[u64])]) -> BotnetInstance {
        let mut followers = BTreeMap::new();
        for (bot, fs) in spec {
            followers.insert(u(*bot), fs.iter().map(|f| u(*f)).collect::<BTreeSet<_>>());
        }
        BotnetInstance::new(followers).unwrap()
    }

    fn two_bot_params(alpha: f64) -> SpamParams {
        let mut p = SpamParams::new(alpha, 1);
        p.child_ratio = 0.5;
        p.suspension_depth = 1;
        p.max_height = 2;
        p.lags = vec![0.0, 1.0];
        p
    }

    #[test]
    fn single_bot_gets_level_one_and_alpha_beta() {
        let botnet = botnet_from(&[(1, &[10, 11])]);
        let mut params = SpamParams::new(0.3, 1);
        params.suspension_depth = 1;
        params.max_height = 2;
        params.lags = vec![0.0, 1.0];
        let (forest, f) = brute_force_optimum(&botnet, &params).unwrap();
        assert_eq!(forest.levels[0], BTreeSet::from([u(1)]));
        assert!((f - 0.3).abs() < 1e-12);
    }

    #[test]
    fn low_alpha_sacrifices_the_large_bot() {
        // With alpha = 0.3 delay dominates, so the optimum tweets through
        // the large bot directly and leaves the small one unplaced; hand
        // enumeration of all 9 assignments gives f = 0.3.
        let botnet = botnet_from(&[(1, &[10]), (2, &[20, 21, 22, 23])]);
        let (forest, f) = brute_force_optimum(&botnet, &two_bot_params(0.3)).unwrap();
        assert_eq!(forest.levels[0], BTreeSet::from([u(2)]));
        assert!(forest.levels[1].is_empty());
        assert_eq!(forest.placed_count(), 1);
        assert!((f - 0.3).abs() < 1e-12);
    }

    #[test]
    fn high_alpha_hides_the_large_bot_below_the_suspended_region() {
        // With alpha = 0.9 losses dominate: sacrifice the 1-follower bot at
        // level 1 and park the 4-follower bot at level 2, giving
        // f = 0.9 * (1/5) + 0.1 * (4/5) = 0.26.
        let botnet = botnet_from(&[(1, &[10]), (2, &[20, 21, 22, 23])]);
        let params = two_bot_params(0.9);
        let (forest, f) = brute_force_optimum(&botnet, &params).unwrap();
        assert_eq!(forest.levels[0], BTreeSet::from([u(1)]));
        assert_eq!(forest.levels[1], BTreeSet::from([u(2)]));
        assert_eq!(forest.parent[&u(2)], u(1));
        assert!((f - 0.26).abs() < 1e-12);
        assert!(validate(&forest, &botnet, &params).is_empty());
    }

    #[test]
    fn optimum_never_exceeds_heuristic_or_independent_baseline() {
        let instances = vec![
            botnet_from(&[(1, &[10]), (2, &[11, 12]), (3, &[13, 14, 15])]),
            botnet_from(&[
                (1, &[10, 11]),
                (2, &[11, 12]),
                (3, &[12, 13]),
                (4, &[13, 14, 15, 16]),
            ]),
            botnet_from(&[
                (1, &[10]),
                (2, &[20, 21]),
                (3, &[30, 31, 32]),
                (4, &[40, 41, 42, 43]),
                (5, &[50, 51, 52, 53, 54]),
            ]),
        ];
        for alpha in [0.2, 0.5, 0.8] {
            for botnet in &instances {
                let mut params = SpamParams::new(alpha, 2);
                params.child_ratio = 0.5;
                params.suspension_depth = 2;
                params.max_height = 3;
                params.lags = default_lags(3);
                let (best_forest, best_f) = brute_force_optimum(botnet, &params).unwrap();
                assert!(validate(&best_forest, botnet, &params).is_empty());
                let recomputed = objective(&best_forest, botnet, &params).unwrap();
                assert!((recomputed.objective_f - best_f).abs() < 1e-12);

                let heuristic = build_forest(botnet, &params).unwrap();
                let heuristic_f = objective(&heuristic, botnet, &params).unwrap().objective_f;
                assert!(
                    best_f <= heuristic_f + 1e-12,
                    "brute force {best_f} worse than heuristic {heuristic_f} (alpha {alpha})"
                );
                assert!(best_f <= alpha * params.beta_scale + 1e-12);
            }
        }
    }

    #[test]
    fn refuses_oversized_instances() {
        let spec: Vec<(u64, Vec<u64>)> = (1..=9).map(|b| (b, vec![100 + b])).collect();
        let borrowed: Vec<(u64, &[u64])> =
            spec.iter().map(|(b, f)| (*b, f.as_slice())).collect();
        let botnet = botnet_from(&borrowed);
        let mut params = SpamParams::new(0.5, 3);
        params.max_height = 4;
        params.lags = default_lags(4);
        assert!(matches!(
            brute_force_optimum(&botnet, &params),
            Err(TreeError::BruteForceTooLarge { bots: 9, .. })
        ));

        let small = botnet_from(&[(1, &[10])]);
        let mut tall = SpamParams::new(0.5, 1);
        tall.suspension_depth = 1;
        tall.max_height = 5;
        tall.lags = default_lags(5);
        assert!(matches!(
            brute_force_optimum(&small, &tall),
            Err(TreeError::BruteForceTooLarge { height: 5, .. })
        ));
    }

    #[test]
    fn errors_when_no_bot_has_followers() {
        let botnet = botnet_from(&[(1, &[]), (2, &[])]);
        let params = two_bot_params(0.5);
        assert!(matches!(
            brute_force_optimum(&botnet, &params),
            Err(TreeError::EmptyCoverage)
        ));
    }
}
