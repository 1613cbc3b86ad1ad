//! Retweet-forest construction and evaluation.
//!
//! A botnet distributes a spam tweet through a forest of retweet trees with
//! at most `K` levels. The defender is assumed to suspend every bot within
//! the first `M` levels of the source, and the attacker protects at most `c`
//! bots ("the budget") by placing them there deliberately. Each bot `i` with
//! `|F_i|` followers can relay to at most `ceil(r*|F_i|/(1-r))` child bots.
//!
//! The attacker trades spread against speed: the objective
//! `f = alpha * beta * |S~|/|C| + (1 - alpha) * tau` combines the fraction of
//! reachable followers lost to suspensions (`S~`) with the average delivery
//! delay in hours (`tau`), and lower is better. [`build_forest`] implements a
//! greedy heuristic for the (NP-hard) exact problem; `brute_force_optimum` in
//! [`crate::brute`] provides a reference answer for tiny instances.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{max_cover_greedy, min_cover_greedy, CoverError};
use crate::graph::{BotnetInstance, GraphError, UserId};

/// Parameters of the distribution problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpamParams {
    /// Weight of the coverage-loss term versus the delay term, in `[0, 1]`.
    pub alpha: f64,
    /// Visibility scale `beta` applied to the coverage-loss term.
    pub beta_scale: f64,
    /// Per-bot child capacity ratio `r` in `(0, 1)`: bot `i` may relay to at
    /// most `ceil(r*|F_i|/(1-r))` children.
    pub child_ratio: f64,
    /// Number of levels `M` the defender suspends, counted from the source.
    pub suspension_depth: usize,
    /// Maximum forest height `K`.
    pub max_height: usize,
    /// Suspension budget `c`: how many bots the attacker is willing to lose
    /// in the first `M` levels.
    pub budget: usize,
    /// Per-level retweet lags `t_1..t_K` in hours; `t_1` must be 0. A
    /// follower first reached at level `k` sees the spam after
    /// `t_1 + ... + t_k` hours.
    pub lags: Vec<f64>,
}

/// Default per-level lags for height `k`: the source tweets immediately and
/// a level-`i` bot waits `0.5 * i` hours before retweeting.
pub fn default_lags(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| if i == 1 { 0.0 } else { 0.5 * i as f64 })
        .collect()
}

impl SpamParams {
    /// Standard parameter set: `beta = 1`, `r = 0.2`, `M = 3`, `K = 10`, and
    /// the default lag schedule.
    pub fn new(alpha: f64, budget: usize) -> Self {
        SpamParams {
            alpha,
            beta_scale: 1.0,
            child_ratio: 0.2,
            suspension_depth: 3,
            max_height: 10,
            budget,
            lags: default_lags(10),
        }
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(TreeError::AlphaOutOfRange(self.alpha));
        }
        if !self.beta_scale.is_finite() || self.beta_scale < 0.0 {
            return Err(TreeError::BetaNegative(self.beta_scale));
        }
        if !self.child_ratio.is_finite() || self.child_ratio <= 0.0 || self.child_ratio >= 1.0 {
            return Err(TreeError::RatioOutOfRange(self.child_ratio));
        }
        if self.suspension_depth == 0 {
            return Err(TreeError::DepthZero);
        }
        if self.suspension_depth > self.max_height {
            return Err(TreeError::DepthExceedsHeight {
                depth: self.suspension_depth,
                height: self.max_height,
            });
        }
        if self.budget < self.suspension_depth {
            return Err(TreeError::BudgetBelowDepth {
                budget: self.budget,
                depth: self.suspension_depth,
            });
        }
        if self.lags.len() != self.max_height {
            return Err(TreeError::LagCount {
                expected: self.max_height,
                found: self.lags.len(),
            });
        }
        for (i, lag) in self.lags.iter().enumerate() {
            if !lag.is_finite() || *lag < 0.0 {
                return Err(TreeError::LagNegative {
                    index: i,
                    value: *lag,
                });
            }
        }
        if self.lags[0] != 0.0 {
            return Err(TreeError::LagFirstNonzero(self.lags[0]));
        }
        Ok(())
    }

    /// Maximum number of child bots a bot with `follower_count` followers can
    /// serve: `ceil(r * follower_count / (1 - r))`.
    pub fn child_quota(&self, follower_count: usize) -> usize {
        let x = self.child_ratio * follower_count as f64 / (1.0 - self.child_ratio);
        // Snap to the nearest integer before taking the ceiling so that
        // exact-integer quotas survive floating-point noise (e.g. r = 0.2,
        // 32 followers must give 8, not 9).
        let snapped = x.round();
        let q = if (x - snapped).abs() < 1e-9 { snapped } else { x.ceil() };
        q as usize
    }

    /// Cumulative lag `t_1 + ... + t_k` for a 1-based level `k`.
    pub fn cumulative_lag(&self, level: usize) -> f64 {
        self.lags.iter().take(level).sum()
    }
}

/// Placement of bots into levels `V_1..V_K` plus parent links. Levels are
/// disjoint; every bot outside level 1 has a parent one level above. Bots
/// absent from all levels do not participate in the distribution.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetweetForest {
    /// `levels[k]` holds the bots of level `k + 1`.
    pub levels: Vec<BTreeSet<UserId>>,
    /// Parent of every non-root placed bot.
    pub parent: BTreeMap<UserId, UserId>,
    /// Bots relocated from level `M` to level 1 as stand-alone roots because
    /// the level below had spare capacity (see [`build_forest`], step 4).
    #[serde(default)]
    pub promoted_roots: BTreeSet<UserId>,
}

impl RetweetForest {
    pub fn new(levels: Vec<BTreeSet<UserId>>, parent: BTreeMap<UserId, UserId>) -> Self {
        RetweetForest {
            levels,
            parent,
            promoted_roots: BTreeSet::new(),
        }
    }

    /// 1-based level of `bot`, or `None` if unplaced.
    pub fn level_of(&self, bot: UserId) -> Option<usize> {
        self.levels
            .iter()
            .position(|level| level.contains(&bot))
            .map(|idx| idx + 1)
    }

    pub fn placed(&self) -> impl Iterator<Item = UserId> + '_ {
        self.levels.iter().flat_map(|level| level.iter().copied())
    }

    pub fn placed_count(&self) -> usize {
        self.levels.iter().map(|level| level.len()).sum()
    }

    /// Bots in the first `m` levels (the ones a depth-`m` defender suspends).
    pub fn first_levels(&self, m: usize) -> BTreeSet<UserId> {
        self.levels
            .iter()
            .take(m)
            .flat_map(|level| level.iter().copied())
            .collect()
    }

    /// Children of each placed bot, ascending by id.
    pub fn children_map(&self) -> BTreeMap<UserId, Vec<UserId>> {
        let mut map: BTreeMap<UserId, Vec<UserId>> = BTreeMap::new();
        for (child, parent) in &self.parent {
            map.entry(*parent).or_default().push(*child);
        }
        map
    }
}

/// Evaluation of a forest against a botnet instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionMetrics {
    /// `C`: all followers reached by placed bots.
    pub coverage: BTreeSet<UserId>,
    /// `|C| / |F|` where `F` is the union over the whole botnet.
    pub coverage_ratio: f64,
    /// `phi[k]`: followers first reached at level `k + 1`.
    pub phi: Vec<BTreeSet<UserId>>,
    /// Average delivery delay over `C`, in hours.
    pub tau_hours: f64,
    /// `S`: placed bots within the first `M` levels (lost to suspension).
    pub suspended_bots: BTreeSet<UserId>,
    /// `S~`: followers reachable only through suspended bots.
    pub lost_followers: BTreeSet<UserId>,
    /// Objective `f = alpha * beta * |S~|/|C| + (1 - alpha) * tau`.
    pub objective_f: f64,
}

/// A single constraint violation found by [`validate`].
#[derive(Error, Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    #[error("bot {bot} at level {level} is not part of the botnet")]
    UnknownBot { bot: UserId, level: usize },
    #[error("bot {bot} placed at both level {first} and level {second}")]
    DuplicatePlacement {
        bot: UserId,
        first: usize,
        second: usize,
    },
    #[error("{placed} bots in the first {depth} levels exceed the budget of {budget}")]
    BudgetExceeded {
        placed: usize,
        depth: usize,
        budget: usize,
    },
    #[error("level {level} holds {occupancy} bots but the level above can serve only {capacity}")]
    CapacityExceeded {
        level: usize,
        capacity: usize,
        occupancy: usize,
    },
    #[error("level {level} is above the maximum height {max}")]
    HeightExceeded { level: usize, max: usize },
    #[error("bot {bot} at level {level} has no parent")]
    MissingParent { bot: UserId, level: usize },
    #[error("bot {child} at level {child_level} has parent {parent} at level {parent_level}, expected level {}", child_level - 1)]
    ParentLevelMismatch {
        child: UserId,
        child_level: usize,
        parent: UserId,
        parent_level: usize,
    },
    #[error("bot {child} has parent {parent}, which is not placed in the forest")]
    ParentNotPlaced { child: UserId, parent: UserId },
    #[error("root {bot} at level 1 must not have a parent")]
    RootWithParent { bot: UserId },
    #[error("parent entry for {bot}, which is not placed in the forest")]
    StrayParentEntry { bot: UserId },
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Error, Debug)]
pub enum TreeError {
    #[error("alpha = {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("beta_scale = {0} must be non-negative")]
    BetaNegative(f64),
    #[error("child_ratio = {0} is outside (0, 1)")]
    RatioOutOfRange(f64),
    #[error("suspension_depth must be at least 1")]
    DepthZero,
    #[error("suspension_depth = {depth} exceeds max_height = {height}")]
    DepthExceedsHeight { depth: usize, height: usize },
    #[error("budget = {budget} is below suspension_depth = {depth}")]
    BudgetBelowDepth { budget: usize, depth: usize },
    #[error("expected {expected} per-level lags, found {found}")]
    LagCount { expected: usize, found: usize },
    #[error("lag[{index}] = {value} must be a non-negative finite number")]
    LagNegative { index: usize, value: f64 },
    #[error("the first lag must be 0 (the source tweets immediately), found {0}")]
    LagFirstNonzero(f64),
    #[error("botnet has {bots} bots, fewer than the budget {budget}")]
    InsufficientBots { bots: usize, budget: usize },
    #[error("forest violates constraints: {}", join_violations(.0))]
    InvalidForest(Vec<Violation>),
    #[error("coverage is empty: no placed bot has any follower")]
    EmptyCoverage,
    #[error(
        "instance too large for exhaustive search: {bots} bots, height {height} \
         (limits: {max_bots} bots, height {max_height})"
    )]
    BruteForceTooLarge {
        bots: usize,
        height: usize,
        max_bots: usize,
        max_height: usize,
    },
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// First-reach sets per level: `phi[k]` contains the followers of level-`k+1`
/// bots that no earlier level reaches.
pub fn compute_phi(
    forest: &RetweetForest,
    botnet: &BotnetInstance,
) -> Result<Vec<BTreeSet<UserId>>, TreeError> {
    phi_from_levels(&forest.levels, botnet)
}

pub(crate) fn phi_from_levels(
    levels: &[BTreeSet<UserId>],
    botnet: &BotnetInstance,
) -> Result<Vec<BTreeSet<UserId>>, TreeError> {
    let mut phi = Vec::with_capacity(levels.len());
    let mut seen: BTreeSet<UserId> = BTreeSet::new();
    for level in levels {
        let mut fresh = BTreeSet::new();
        for bot in level {
            for f in botnet.followers(*bot)? {
                if !seen.contains(f) {
                    fresh.insert(*f);
                }
            }
        }
        seen.extend(fresh.iter().copied());
        phi.push(fresh);
    }
    Ok(phi)
}

/// Average delivery delay in hours: each follower first reached at level `k`
/// waits the cumulative lag `t_1 + ... + t_k`. Errors when nothing is covered.
pub fn compute_delay(phi: &[BTreeSet<UserId>], lags: &[f64]) -> Result<f64, TreeError> {
    if phi.len() > lags.len() {
        return Err(TreeError::LagCount {
            expected: phi.len(),
            found: lags.len(),
        });
    }
    let covered: usize = phi.iter().map(|p| p.len()).sum();
    if covered == 0 {
        return Err(TreeError::EmptyCoverage);
    }
    let mut cumulative = 0.0;
    let mut weighted = 0.0;
    for (set, lag) in phi.iter().zip(lags) {
        cumulative += lag;
        weighted += cumulative * set.len() as f64;
    }
    Ok(weighted / covered as f64)
}

pub(crate) fn metrics_from_levels(
    levels: &[BTreeSet<UserId>],
    botnet: &BotnetInstance,
    params: &SpamParams,
) -> Result<DistributionMetrics, TreeError> {
    let phi = phi_from_levels(levels, botnet)?;
    let mut coverage = BTreeSet::new();
    for set in &phi {
        coverage.extend(set.iter().copied());
    }
    if coverage.is_empty() {
        return Err(TreeError::EmptyCoverage);
    }
    let tau_hours = compute_delay(&phi, &params.lags)?;

    let depth = params.suspension_depth;
    let suspended_bots: BTreeSet<UserId> = levels
        .iter()
        .take(depth)
        .flat_map(|level| level.iter().copied())
        .collect();
    // Followers still reachable through bots deeper than level M survive.
    let mut surviving = BTreeSet::new();
    for level in levels.iter().skip(depth) {
        for bot in level {
            surviving.extend(botnet.followers(*bot)?.iter().copied());
        }
    }
    let lost_followers: BTreeSet<UserId> =
        coverage.difference(&surviving).copied().collect();

    let ratio_lost = lost_followers.len() as f64 / coverage.len() as f64;
    let objective_f =
        params.alpha * params.beta_scale * ratio_lost + (1.0 - params.alpha) * tau_hours;
    let follower_total = botnet.follower_union().len();
    let coverage_ratio = coverage.len() as f64 / follower_total as f64;

    Ok(DistributionMetrics {
        coverage,
        coverage_ratio,
        phi,
        tau_hours,
        suspended_bots,
        lost_followers,
        objective_f,
    })
}

/// Evaluates a forest. The forest is validated first; any constraint
/// violation is returned as an error naming the violated constraint.
pub fn objective(
    forest: &RetweetForest,
    botnet: &BotnetInstance,
    params: &SpamParams,
) -> Result<DistributionMetrics, TreeError> {
    params.validate()?;
    let violations = validate(forest, botnet, params);
    if !violations.is_empty() {
        return Err(TreeError::InvalidForest(violations));
    }
    metrics_from_levels(&forest.levels, botnet, params)
}

/// Objective of the "independent" baseline where every bot tweets the spam
/// directly: all bots sit at level 1, every covered follower is reached
/// immediately (`tau = 0`) and all of them are lost (`S~ = C`), giving
/// `f = alpha * beta`.
pub fn independent_objective(params: &SpamParams) -> Result<f64, TreeError> {
    params.validate()?;
    Ok(params.alpha * params.beta_scale)
}

/// Checks a forest against every structural constraint and lists all
/// violations (an empty vector means the forest is valid):
/// level disjointness, bot membership, the first-`M`-levels budget, the
/// per-level child capacity for levels `M+1..K`, the height bound, and
/// parent linking.
pub fn validate(
    forest: &RetweetForest,
    botnet: &BotnetInstance,
    params: &SpamParams,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let depth = params.suspension_depth;

    // Height and membership + placement map (first placement wins).
    let mut placement: BTreeMap<UserId, usize> = BTreeMap::new();
    for (idx, level) in forest.levels.iter().enumerate() {
        let level_no = idx + 1;
        if level_no > params.max_height && !level.is_empty() {
            violations.push(Violation::HeightExceeded {
                level: level_no,
                max: params.max_height,
            });
        }
        for bot in level {
            if !botnet.contains_bot(*bot) {
                violations.push(Violation::UnknownBot {
                    bot: *bot,
                    level: level_no,
                });
            }
            if let Some(first) = placement.get(bot) {
                violations.push(Violation::DuplicatePlacement {
                    bot: *bot,
                    first: *first,
                    second: level_no,
                });
            } else {
                placement.insert(*bot, level_no);
            }
        }
    }

    // Budget over the first M levels.
    let placed_early = placement.values().filter(|lvl| **lvl <= depth).count();
    if placed_early > params.budget {
        violations.push(Violation::BudgetExceeded {
            placed: placed_early,
            depth,
            budget: params.budget,
        });
    }

    // Child capacity for levels below the suspended region: the bots of
    // level k must be able to serve all of level k+1, for k in [M, K-1].
    // Levels 1..M are exempt (arbitrary fan-out near the source).
    for k in depth..params.max_height {
        let (Some(parents), Some(children)) =
            (forest.levels.get(k - 1), forest.levels.get(k))
        else {
            break;
        };
        if children.is_empty() {
            continue;
        }
        let capacity: usize = parents
            .iter()
            .map(|b| {
                botnet
                    .followers(*b)
                    .map(|f| params.child_quota(f.len()))
                    .unwrap_or(0)
            })
            .sum();
        if capacity < children.len() {
            violations.push(Violation::CapacityExceeded {
                level: k + 1,
                capacity,
                occupancy: children.len(),
            });
        }
    }

    // Parent links: roots have none, everyone else points one level up.
    if let Some(roots) = forest.levels.first() {
        for bot in roots {
            if forest.parent.contains_key(bot) {
                violations.push(Violation::RootWithParent { bot: *bot });
            }
        }
    }
    for (idx, level) in forest.levels.iter().enumerate().skip(1) {
        let level_no = idx + 1;
        for bot in level {
            match forest.parent.get(bot) {
                None => violations.push(Violation::MissingParent {
                    bot: *bot,
                    level: level_no,
                }),
                Some(parent) => match placement.get(parent) {
                    None => violations.push(Violation::ParentNotPlaced {
                        child: *bot,
                        parent: *parent,
                    }),
                    Some(parent_level) if *parent_level != level_no - 1 => {
                        violations.push(Violation::ParentLevelMismatch {
                            child: *bot,
                            child_level: level_no,
                            parent: *parent,
                            parent_level: *parent_level,
                        })
                    }
                    Some(_) => {}
                },
            }
        }
    }
    for bot in forest.parent.keys() {
        if !placement.contains_key(bot) {
            violations.push(Violation::StrayParentEntry { bot: *bot });
        }
    }

    violations
}

/// Assigns each child a parent from the level above, cycling through parents
/// in ascending id order while respecting per-parent quotas. Children are
/// handed out in descending follower-count order (ties toward the lower id)
/// so large subtrees spread evenly across parents.
fn assign_children(
    parent_map: &mut BTreeMap<UserId, UserId>,
    parents: &BTreeSet<UserId>,
    children: &BTreeSet<UserId>,
    botnet: &BotnetInstance,
    quota: impl Fn(UserId) -> usize,
) {
    if children.is_empty() {
        return;
    }
    let slots: Vec<UserId> = parents.iter().copied().collect();
    let mut remaining: Vec<usize> = slots.iter().map(|p| quota(*p)).collect();
    let mut ordered: Vec<UserId> = children.iter().copied().collect();
    ordered.sort_by_key(|c| {
        let count = botnet.followers(*c).map(|f| f.len()).unwrap_or(0);
        (std::cmp::Reverse(count), *c)
    });
    let mut cursor = 0usize;
    for child in ordered {
        // Capacity is checked by the callers; an exhausted rotation would
        // mean the forest was built inconsistently, so fall back to the
        // first parent rather than panic.
        let mut assigned = None;
        for _ in 0..slots.len() {
            let idx = cursor % slots.len();
            cursor += 1;
            if remaining[idx] > 0 {
                remaining[idx] -= 1;
                assigned = Some(slots[idx]);
                break;
            }
        }
        parent_map.insert(child, assigned.unwrap_or(slots[0]));
    }
}

/// Greedy forest construction:
///
/// 1. Sacrifice the `c` bots whose combined follower sets are (greedily)
///    smallest; they occupy the suspended first `M` levels.
/// 2. Of those, keep the `c - M + 1` with the (greedily) largest coverage at
///    level `M`; the remaining `M - 1` form a single line above it, largest
///    follower set at level 1.
/// 3. Fill each level below `M` with the (greedily) largest-coverage bots
///    still unplaced, bounded by the child capacity of the level above.
/// 4. If every bot is placed and level `M + 1` still has spare capacity,
///    relocate level-`M` bots to level 1 as stand-alone roots (recorded in
///    [`RetweetForest::promoted_roots`]) as long as the remaining capacity
///    still covers level `M + 1`.
pub fn build_forest(
    botnet: &BotnetInstance,
    params: &SpamParams,
) -> Result<RetweetForest, TreeError> {
    params.validate()?;
    let n = botnet.bot_count();
    if n < params.budget {
        return Err(TreeError::InsufficientBots {
            bots: n,
            budget: params.budget,
        });
    }
    let depth = params.suspension_depth;
    let height = params.max_height;

    let owned: Vec<(UserId, &BTreeSet<UserId>)> =
        botnet.iter().map(|(b, s)| (b, s)).collect();
    let follower_count = |bot: UserId| botnet.followers(bot).map(|f| f.len()).unwrap_or(0);

    // Step 1: bots to sacrifice in the suspended region.
    let sacrificed = min_cover_greedy(&owned, params.budget)?;
    let sacrificed_set: BTreeSet<UserId> = sacrificed.iter().copied().collect();

    // Step 2: maximize what the sacrificed bots still deliver from level M.
    let sacrificed_refs: Vec<(UserId, &BTreeSet<UserId>)> = owned
        .iter()
        .filter(|(b, _)| sacrificed_set.contains(b))
        .map(|(b, s)| (*b, *s))
        .collect();
    let level_m: BTreeSet<UserId> = max_cover_greedy(&sacrificed_refs, params.budget - depth + 1)?
        .into_iter()
        .collect();
    let mut line: Vec<UserId> = sacrificed_set.difference(&level_m).copied().collect();
    line.sort_by_key(|b| (std::cmp::Reverse(follower_count(*b)), *b));

    let mut levels: Vec<BTreeSet<UserId>> = vec![BTreeSet::new(); height];
    for (idx, bot) in line.iter().enumerate() {
        levels[idx].insert(*bot);
    }
    levels[depth - 1] = level_m;

    // Step 3: fill the lower levels, each bounded by the capacity above.
    let mut unplaced: BTreeSet<UserId> = botnet
        .bots()
        .filter(|b| !sacrificed_set.contains(b))
        .collect();
    for k in depth..height {
        if unplaced.is_empty() {
            break;
        }
        let capacity: usize = levels[k - 1]
            .iter()
            .map(|b| params.child_quota(follower_count(*b)))
            .sum();
        if capacity == 0 {
            break;
        }
        let take = capacity.min(unplaced.len());
        let candidates: Vec<(UserId, &BTreeSet<UserId>)> = owned
            .iter()
            .filter(|(b, _)| unplaced.contains(b))
            .map(|(b, s)| (*b, *s))
            .collect();
        let picked = max_cover_greedy(&candidates, take)?;
        for bot in &picked {
            unplaced.remove(bot);
            levels[k].insert(*bot);
        }
    }

    // Step 4: promote surplus level-M bots to stand-alone roots when the
    // level below has spare capacity, so their followers are served with no
    // delay at all.
    let mut promoted_roots = BTreeSet::new();
    if depth >= 2 && depth < height && unplaced.is_empty() {
        let occupancy = levels[depth].len();
        let mut capacity: usize = levels[depth - 1]
            .iter()
            .map(|b| params.child_quota(follower_count(*b)))
            .sum();
        if occupancy < capacity {
            let mut movable: Vec<UserId> = levels[depth - 1].iter().copied().collect();
            movable.sort_by_key(|b| (std::cmp::Reverse(follower_count(*b)), *b));
            for bot in movable {
                let q = params.child_quota(follower_count(bot));
                if capacity - q >= occupancy {
                    capacity -= q;
                    levels[depth - 1].remove(&bot);
                    levels[0].insert(bot);
                    promoted_roots.insert(bot);
                }
            }
        }
    }

    // Parent links: the line is a chain, level M hangs off the line's end,
    // and deeper levels are distributed round-robin under per-parent quotas.
    let mut parent = BTreeMap::new();
    for pair in line.windows(2) {
        parent.insert(pair[1], pair[0]);
    }
    if depth >= 2 {
        let anchor = line[depth - 2];
        for bot in &levels[depth - 1] {
            parent.insert(*bot, anchor);
        }
    }
    for k in depth..height {
        let (upper, lower) = (levels[k - 1].clone(), levels[k].clone());
        assign_children(&mut parent, &upper, &lower, botnet, |p| {
            params.child_quota(follower_count(p))
        });
    }

    Ok(RetweetForest {
        levels,
        parent,
        promoted_roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(raw: u64) -> UserId {
        UserId(raw)
    }

    /// Botnet where bot `i` follows the id convention of the module tests:
    /// follower ids are packed in disjoint blocks of the given sizes.
    fn disjoint_botnet(sizes: &[usize]) -> BotnetInstance {
        let mut followers = BTreeMap::new();
        let mut next = 100u64;
        for (i, size) in sizes.iter().enumerate() {
            let set: BTreeSet<UserId> = (0..*size)
                .map(|_| {
                    next += 1;
                    u(next)
                })
                .collect();
            followers.insert(u(i as u64 + 1), set);
        }
        BotnetInstance::new(followers).unwrap()
    }

    fn botnet_from(spec: &[(u64, &[u64])]) -> BotnetInstance {
        let mut followers = BTreeMap::new();
        for (bot, fs) in spec {
            followers.insert(u(*bot), fs.iter().map(|f| u(*f)).collect());
        }
        BotnetInstance::new(followers).unwrap()
    }

    #[test]
    fn params_validation_names_offending_field() {
        let mut p = SpamParams::new(0.5, 10);
        assert!(p.validate().is_ok());
        p.alpha = 1.5;
        assert!(matches!(p.validate(), Err(TreeError::AlphaOutOfRange(_))));
        p = SpamParams::new(0.5, 2);
        assert!(matches!(
            p.validate(),
            Err(TreeError::BudgetBelowDepth { budget: 2, depth: 3 })
        ));
        p = SpamParams::new(0.5, 10);
        p.child_ratio = 1.0;
        assert!(matches!(p.validate(), Err(TreeError::RatioOutOfRange(_))));
        p = SpamParams::new(0.5, 10);
        p.lags[0] = 0.25;
        assert!(matches!(p.validate(), Err(TreeError::LagFirstNonzero(_))));
        p = SpamParams::new(0.5, 10);
        p.lags.pop();
        assert!(matches!(p.validate(), Err(TreeError::LagCount { .. })));
    }

    #[test]
    fn child_quota_handles_exact_integers() {
        let p = SpamParams::new(0.5, 10);
        // r = 0.2 -> quota = ceil(f / 4).
        assert_eq!(p.child_quota(32), 8);
        assert_eq!(p.child_quota(27), 7);
        assert_eq!(p.child_quota(1), 1);
        assert_eq!(p.child_quota(0), 0);
        let mut half = SpamParams::new(0.5, 10);
        half.child_ratio = 0.5;
        // r = 0.5 -> quota = f.
        assert_eq!(half.child_quota(3), 3);
        assert_eq!(half.child_quota(7), 7);
    }

    #[test]
    fn default_lag_schedule_cumulates() {
        let lags = default_lags(10);
        assert_eq!(lags[0], 0.0);
        assert_eq!(lags[1], 1.0);
        assert_eq!(lags[2], 1.5);
        let p = SpamParams::new(0.5, 10);
        // A follower first reached at level 3 waits 0 + 1.0 + 1.5 hours.
        assert_eq!(p.cumulative_lag(3), 2.5);
    }

    #[test]
    fn phi_matches_first_reach_oracle() {
        // Oracle: a follower belongs to phi_k exactly when k is the minimum
        // level among the placed bots it follows.
        let botnet = botnet_from(&[
            (1, &[10, 11, 12]),
            (2, &[11, 13]),
            (3, &[12, 14, 15]),
        ]);
        let forest = RetweetForest::new(
            vec![
                BTreeSet::from([u(1)]),
                BTreeSet::from([u(2)]),
                BTreeSet::from([u(3)]),
            ],
            BTreeMap::from([(u(2), u(1)), (u(3), u(2))]),
        );
        let phi = compute_phi(&forest, &botnet).unwrap();

        let mut oracle: Vec<BTreeSet<UserId>> = vec![BTreeSet::new(); 3];
        for f in botnet.follower_union() {
            let min_level = forest
                .levels
                .iter()
                .enumerate()
                .filter(|(_, level)| {
                    level
                        .iter()
                        .any(|b| botnet.followers(*b).unwrap().contains(f))
                })
                .map(|(idx, _)| idx)
                .min()
                .unwrap();
            oracle[min_level].insert(*f);
        }
        assert_eq!(phi, oracle);
        // Shared followers appear only at the earliest level.
        assert_eq!(phi[0], BTreeSet::from([u(10), u(11), u(12)]));
        assert_eq!(phi[1], BTreeSet::from([u(13)]));
        assert!(phi[1].len() < botnet.followers(u(2)).unwrap().len());
    }

    #[test]
    fn delay_matches_hand_computation() {
        // Two levels with lags [0, 1.0]: 3 followers arrive immediately and
        // 2 after one hour -> tau = (3*0 + 2*1) / 5 = 0.4.
        let phi = vec![
            BTreeSet::from([u(1), u(2), u(3)]),
            BTreeSet::from([u(4), u(5)]),
        ];
        let tau = compute_delay(&phi, &[0.0, 1.0]).unwrap();
        assert!((tau - 0.4).abs() < 1e-12);
    }

    #[test]
    fn delay_errors_on_empty_coverage() {
        let phi = vec![BTreeSet::new(), BTreeSet::new()];
        assert!(matches!(
            compute_delay(&phi, &[0.0, 1.0]),
            Err(TreeError::EmptyCoverage)
        ));
    }

    #[test]
    fn tau_is_zero_exactly_when_all_coverage_is_at_level_one() {
        let botnet = botnet_from(&[(1, &[10, 11]), (2, &[12])]);
        let all_first = RetweetForest::new(
            vec![BTreeSet::from([u(1), u(2)]), BTreeSet::new()],
            BTreeMap::new(),
        );
        let phi = compute_phi(&all_first, &botnet).unwrap();
        assert_eq!(compute_delay(&phi, &[0.0, 1.0]).unwrap(), 0.0);

        let spread = RetweetForest::new(
            vec![BTreeSet::from([u(1)]), BTreeSet::from([u(2)])],
            BTreeMap::from([(u(2), u(1))]),
        );
        let phi = compute_phi(&spread, &botnet).unwrap();
        assert!(compute_delay(&phi, &[0.0, 1.0]).unwrap() > 0.0);
    }

    #[test]
    fn objective_of_all_bots_at_level_one_is_alpha_beta() {
        // Every bot tweets directly: all coverage is immediate but every
        // follower is lost, so f = alpha * beta.
        let sizes = vec![3usize; 12];
        let botnet = disjoint_botnet(&sizes);
        let mut params = SpamParams::new(0.65, 12);
        params.max_height = 10;
        let levels = {
            let mut v = vec![BTreeSet::new(); 10];
            v[0] = botnet.bots().collect();
            v
        };
        let forest = RetweetForest::new(levels, BTreeMap::new());
        let m = objective(&forest, &botnet, &params).unwrap();
        assert_eq!(m.tau_hours, 0.0);
        assert_eq!(m.lost_followers, m.coverage);
        assert!((m.objective_f - 0.65).abs() < 1e-12);
        assert!((independent_objective(&params).unwrap() - 0.65).abs() < 1e-15);
    }

    #[test]
    fn objective_rejects_invalid_forest_with_named_constraint() {
        let botnet = botnet_from(&[(1, &[10]), (2, &[11]), (3, &[12]), (4, &[13])]);
        let mut params = SpamParams::new(0.5, 3);
        params.suspension_depth = 1;
        params.max_height = 2;
        params.lags = default_lags(2);
        // Level 2 holds 3 bots but bot 1 can serve only ceil(0.2*1/0.8) = 1.
        let forest = RetweetForest::new(
            vec![
                BTreeSet::from([u(1)]),
                BTreeSet::from([u(2), u(3), u(4)]),
            ],
            BTreeMap::from([(u(2), u(1)), (u(3), u(1)), (u(4), u(1))]),
        );
        let err = objective(&forest, &botnet, &params).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("level 2"), "unexpected message: {msg}");
        assert!(msg.contains("serve only 1"), "unexpected message: {msg}");
    }

    #[test]
    fn validator_lists_every_violation() {
        let botnet = botnet_from(&[(1, &[10]), (2, &[11]), (3, &[12])]);
        let mut params = SpamParams::new(0.5, 1);
        params.suspension_depth = 1;
        params.max_height = 2;
        params.lags = default_lags(2);
        let forest = RetweetForest::new(
            vec![
                BTreeSet::from([u(1), u(2), u(9)]), // unknown bot, over budget
                BTreeSet::from([u(2), u(3)]),       // duplicate, bot 3 missing parent
            ],
            BTreeMap::from([(u(1), u(2)), (u(7), u(1))]), // root with parent, stray entry
        );
        let violations = validate(&forest, &botnet, &params);
        let kinds: Vec<&str> = violations
            .iter()
            .map(|v| match v {
                Violation::UnknownBot { .. } => "unknown",
                Violation::DuplicatePlacement { .. } => "duplicate",
                Violation::BudgetExceeded { .. } => "budget",
                Violation::CapacityExceeded { .. } => "capacity",
                Violation::HeightExceeded { .. } => "height",
                Violation::MissingParent { .. } => "missing-parent",
                Violation::ParentLevelMismatch { .. } => "parent-level",
                Violation::ParentNotPlaced { .. } => "parent-unplaced",
                Violation::RootWithParent { .. } => "root-parent",
                Violation::StrayParentEntry { .. } => "stray-parent",
            })
            .collect();
        for expected in [
            "unknown",
            "duplicate",
            "budget",
            "missing-parent",
            "root-parent",
            "stray-parent",
        ] {
            assert!(kinds.contains(&expected), "missing {expected} in {kinds:?}");
        }
    }

    #[test]
    fn build_forest_matches_hand_trace() {
        // Five bots with disjoint follower sets of sizes 1..5, c = 3, M = 3,
        // K = 4, r = 0.5. Hand trace:
        //   min cover   -> bots {1, 2, 3}
        //   level 3     -> bot 3 (largest of the sacrificed)
        //   line        -> bot 2 at level 1, bot 1 at level 2
        //   capacity 4  -> ceil(0.5*3/0.5) = 3 -> level 4 gets bots {5, 4}
        // Level 4 is under capacity (2 < 3) but removing bot 3 would strand
        // it, so nothing is promoted.
        let botnet = disjoint_botnet(&[1, 2, 3, 4, 5]);
        let mut params = SpamParams::new(0.5, 3);
        params.child_ratio = 0.5;
        params.suspension_depth = 3;
        params.max_height = 4;
        params.lags = default_lags(4);

        let forest = build_forest(&botnet, &params).unwrap();
        assert_eq!(forest.levels[0], BTreeSet::from([u(2)]));
        assert_eq!(forest.levels[1], BTreeSet::from([u(1)]));
        assert_eq!(forest.levels[2], BTreeSet::from([u(3)]));
        assert_eq!(forest.levels[3], BTreeSet::from([u(4), u(5)]));
        assert!(forest.promoted_roots.is_empty());
        assert_eq!(forest.parent[&u(1)], u(2));
        assert_eq!(forest.parent[&u(3)], u(1));
        assert_eq!(forest.parent[&u(4)], u(3));
        assert_eq!(forest.parent[&u(5)], u(3));
        assert!(validate(&forest, &botnet, &params).is_empty());

        let m = objective(&forest, &botnet, &params).unwrap();
        assert_eq!(m.coverage.len(), 15);
        // Lost followers = followers of the sacrificed bots 1..3.
        assert_eq!(m.lost_followers.len(), 6);
    }

    #[test]
    fn build_forest_with_budget_equal_depth_builds_a_line() {
        // c = M = 3 with more bots than budget: the sacrificed bots form a
        // straight line and level M holds exactly one bot.
        let botnet = disjoint_botnet(&[2, 3, 4, 6, 6]);
        let mut params = SpamParams::new(0.5, 3);
        params.suspension_depth = 3;
        params.max_height = 5;
        params.lags = default_lags(5);
        let forest = build_forest(&botnet, &params).unwrap();
        assert_eq!(forest.levels[0].len(), 1);
        assert_eq!(forest.levels[1].len(), 1);
        assert_eq!(forest.levels[2].len(), 1);
        assert_eq!(forest.placed_count(), botnet.bot_count());
        assert!(validate(&forest, &botnet, &params).is_empty());
    }

    #[test]
    fn build_forest_promotes_surplus_level_m_bots() {
        // Two bots, c = n = 2, M = 2, K = 3: nothing remains for level 3, so
        // the level-2 bot is promoted to a stand-alone root.
        let botnet = disjoint_botnet(&[2, 3]);
        let mut params = SpamParams::new(0.5, 2);
        params.suspension_depth = 2;
        params.max_height = 3;
        params.lags = default_lags(3);
        let forest = build_forest(&botnet, &params).unwrap();
        assert_eq!(forest.levels[0], BTreeSet::from([u(1), u(2)]));
        assert!(forest.levels[1].is_empty());
        assert_eq!(forest.promoted_roots, BTreeSet::from([u(2)]));
        assert!(validate(&forest, &botnet, &params).is_empty());
        // All coverage immediate.
        let m = objective(&forest, &botnet, &params).unwrap();
        assert_eq!(m.tau_hours, 0.0);
    }

    #[test]
    fn build_forest_requires_enough_bots() {
        let botnet = disjoint_botnet(&[1, 2]);
        let params = SpamParams::new(0.5, 3);
        assert!(matches!(
            build_forest(&botnet, &params),
            Err(TreeError::InsufficientBots { bots: 2, budget: 3 })
        ));
    }

    #[test]
    fn forests_serialize_to_json_and_back() {
        let botnet = disjoint_botnet(&[1, 2, 3, 4, 5]);
        let mut params = SpamParams::new(0.5, 3);
        params.max_height = 4;
        params.lags = default_lags(4);
        let forest = build_forest(&botnet, &params).unwrap();
        let json = serde_json::to_string(&forest).unwrap();
        let back: RetweetForest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, forest);
    }
}
