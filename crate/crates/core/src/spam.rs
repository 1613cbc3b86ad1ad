//! Multi-round spam-campaign simulation with pluggable suspension defenses.
//!
//! Each round the surviving bots rebuild their retweet forest, cascade one
//! spam tweet through it, and legitimate followers occasionally retweet what
//! they see. At the end of the round the platform applies a suspension
//! policy; suspended users take no further actions. The simulation reports
//! classification quality (how many bots versus bystanders were suspended)
//! round over round.
//!
//! Hop distances: a tweet's source has hop 0, a bot at forest level `k` has
//! hop `k - 1`, and a legitimate retweeter sits one hop below the bot it
//! follows.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{RetweetForest, SpamParams, TreeError};
use crate::graph::{BotnetInstance, UserId, UserRole};

#[derive(Error, Debug)]
pub enum SpamError {
    #[error("campaign network has no bots")]
    EmptyNetwork,
    #[error("user {0} is both a bot and a legitimate user")]
    LegitBotOverlap(UserId),
    #[error("follower {0} is not part of the legitimate population")]
    FollowerOutsideLegit(UserId),
    #[error("rounds must be at least 1")]
    RoundsZero,
    #[error("beta_retweet = {0} is outside [0, 1]")]
    BetaOutOfRange(f64),
    #[error("depth parameter m must be at least 1")]
    DepthZero,
    #[error("delta = {0} must be at least 1")]
    DeltaTooSmall(f64),
    #[error("gamma = {0} must be in (0, 1]")]
    GammaOutOfRange(f64),
    #[error("threshold = {0} must be positive")]
    ThresholdNotPositive(f64),
    #[error("popularity update needs n_t >= 1 within the scored region, got {0}")]
    PopularityZeroRetweets(f64),
    #[error("bot {bot} at level {level} has no parent tweet to retweet")]
    MissingParentTweet { bot: UserId, level: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Suspension policies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefensePolicy {
    /// Defense I: suspend every campaign participant within the first `m`
    /// levels (hop distance at most `m - 1`).
    DepthM { m: usize },
    /// Defense II: one point per spam (re)tweet, suspend at `delta` points.
    CountThreshold { delta: f64 },
    /// Defense III: retweeters within the first `m` levels gain
    /// `1 / ln(1 + n_t)` points, where `n_t` is how often the tweet they
    /// retweeted was retweeted this round; suspend at `delta` points.
    PopularityWeighted { delta: f64, m: usize },
    /// Defense IV: every participant at hop `d` gains `gamma^d` points;
    /// suspend at `threshold` points.
    AttenuatedScore { gamma: f64, threshold: f64 },
}

impl DefensePolicy {
    pub fn validate(&self) -> Result<(), SpamError> {
        match *self {
            DefensePolicy::DepthM { m } => {
                if m == 0 {
                    return Err(SpamError::DepthZero);
                }
            }
            DefensePolicy::CountThreshold { delta } => {
                if !delta.is_finite() || delta < 1.0 {
                    return Err(SpamError::DeltaTooSmall(delta));
                }
            }
            DefensePolicy::PopularityWeighted { delta, m } => {
                if !delta.is_finite() || delta < 1.0 {
                    return Err(SpamError::DeltaTooSmall(delta));
                }
                if m == 0 {
                    return Err(SpamError::DepthZero);
                }
            }
            DefensePolicy::AttenuatedScore { gamma, threshold } => {
                if !gamma.is_finite() || gamma <= 0.0 || gamma > 1.0 {
                    return Err(SpamError::GammaOutOfRange(gamma));
                }
                if !threshold.is_finite() || threshold <= 0.0 {
                    return Err(SpamError::ThresholdNotPositive(threshold));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            DefensePolicy::DepthM { .. } => "depth_m",
            DefensePolicy::CountThreshold { .. } => "count_threshold",
            DefensePolicy::PopularityWeighted { .. } => "popularity_weighted",
            DefensePolicy::AttenuatedScore { .. } => "attenuated_score",
        }
    }

    /// The policy's headline tuning knob, for report columns.
    pub fn gamma_or_delta(&self) -> f64 {
        match *self {
            DefensePolicy::DepthM { m } => m as f64,
            DefensePolicy::CountThreshold { delta } => delta,
            DefensePolicy::PopularityWeighted { delta, .. } => delta,
            DefensePolicy::AttenuatedScore { gamma, .. } => gamma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub rounds: usize,
    /// Probability that a legitimate follower retweets a spam they see.
    pub beta_retweet: f64,
    pub rng_seed: u64,
    /// Penalty values `P` for the overall metric `TPR - P * FPR`.
    pub penalties: Vec<u64>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            rounds: 10,
            beta_retweet: 0.01,
            rng_seed: 0,
            penalties: vec![10, 100, 1000, 10000],
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), SpamError> {
        if self.rounds == 0 {
            return Err(SpamError::RoundsZero);
        }
        if !self.beta_retweet.is_finite() || !(0.0..=1.0).contains(&self.beta_retweet) {
            return Err(SpamError::BetaOutOfRange(self.beta_retweet));
        }
        Ok(())
    }
}

/// The population a campaign runs on: a botnet plus the legitimate users
/// (at least everyone who follows a bot; possibly more).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignNetwork {
    pub botnet: BotnetInstance,
    pub legit_users: BTreeSet<UserId>,
}

impl CampaignNetwork {
    pub fn new(
        botnet: BotnetInstance,
        legit_users: BTreeSet<UserId>,
    ) -> Result<Self, SpamError> {
        if botnet.bot_count() == 0 {
            return Err(SpamError::EmptyNetwork);
        }
        for bot in botnet.bots() {
            if legit_users.contains(&bot) {
                return Err(SpamError::LegitBotOverlap(bot));
            }
        }
        for f in botnet.follower_union() {
            if !legit_users.contains(f) {
                return Err(SpamError::FollowerOutsideLegit(*f));
            }
        }
        Ok(CampaignNetwork {
            botnet,
            legit_users,
        })
    }

    /// Network whose legitimate population is exactly the followers.
    pub fn from_botnet(botnet: BotnetInstance) -> Result<Self, SpamError> {
        let legit = botnet.follower_union().clone();
        CampaignNetwork::new(botnet, legit)
    }

    pub fn roles(&self) -> BTreeMap<UserId, UserRole> {
        let mut roles: BTreeMap<UserId, UserRole> = self
            .legit_users
            .iter()
            .map(|u| (*u, UserRole::Legit))
            .collect();
        for bot in self.botnet.bots() {
            roles.insert(bot, UserRole::Bot);
        }
        roles
    }
}

/// One action in a round: a fresh spam tweet (`retweet_of = None`) or a
/// retweet of an earlier tweet this round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub user: UserId,
    /// Hop distance from the source: 0 for the source itself.
    pub hop: usize,
    pub tweet_id: u64,
    pub retweet_of: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub posts: Vec<PostRecord>,
    /// Retweets each tweet received within this round (bots plus legit).
    pub retweet_totals: BTreeMap<u64, u64>,
    /// Users suspended at the end of this round.
    pub newly_suspended: BTreeSet<UserId>,
}

/// Full campaign transcript; serializable for replay.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignState {
    pub spam_score: BTreeMap<UserId, f64>,
    pub suspended: BTreeSet<UserId>,
    pub round_log: Vec<RoundRecord>,
}

/// Classification quality of the suspensions accumulated so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub round: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    /// `TPR - P * FPR` per penalty `P`.
    pub overall: BTreeMap<u64, f64>,
}

/// Defense IV score update: `s + gamma^d` for a participant at hop `d`.
pub fn update_score_attenuated(score: f64, gamma: f64, hop: usize) -> f64 {
    score + gamma.powi(hop as i32)
}

/// Defense III score update: `s + 1 / ln(1 + n_t)` when the retweet happened
/// within the scored region, unchanged otherwise. `n_t` must be at least 1
/// when scored (a retweeted tweet has at least that one retweet), otherwise
/// the increment would divide by `ln(1) = 0`.
pub fn update_score_popularity(
    score: f64,
    n_t: f64,
    within_depth: bool,
) -> Result<f64, SpamError> {
    if !within_depth {
        return Ok(score);
    }
    if !(n_t >= 1.0) {
        return Err(SpamError::PopularityZeroRetweets(n_t));
    }
    Ok(score + 1.0 / (1.0 + n_t).ln())
}

/// Rates over the *initial* populations: `TPR` = suspended bots / all bots,
/// `FPR` = suspended legit / all legit, precision = suspended bots / all
/// suspended (0 when nothing is suspended yet).
pub fn classify(
    suspended: &BTreeSet<UserId>,
    roles: &BTreeMap<UserId, UserRole>,
    penalties: &[u64],
    round: usize,
) -> ClassificationReport {
    let mut n_bots = 0usize;
    let mut n_legit = 0usize;
    let mut s_bots = 0usize;
    let mut s_legit = 0usize;
    for (user, role) in roles {
        match role.is_bot() {
            true => {
                n_bots += 1;
                if suspended.contains(user) {
                    s_bots += 1;
                }
            }
            false => {
                n_legit += 1;
                if suspended.contains(user) {
                    s_legit += 1;
                }
            }
        }
    }
    let tpr = if n_bots > 0 { s_bots as f64 / n_bots as f64 } else { 0.0 };
    let fpr = if n_legit > 0 { s_legit as f64 / n_legit as f64 } else { 0.0 };
    let precision = if s_bots + s_legit > 0 {
        s_bots as f64 / (s_bots + s_legit) as f64
    } else {
        0.0
    };
    let overall = penalties
        .iter()
        .map(|p| (*p, tpr - *p as f64 * fpr))
        .collect();
    ClassificationReport {
        round,
        tpr,
        fpr,
        precision,
        overall,
    }
}

/// Forest builder that reuses `params` every round, shrinking the budget
/// (and, if necessary, the suspension depth) to fit the surviving botnet.
pub fn heuristic_builder(
    params: SpamParams,
) -> impl FnMut(&BotnetInstance) -> Result<RetweetForest, TreeError> {
    move |botnet| {
        let mut p = params.clone();
        p.budget = p.budget.min(botnet.bot_count());
        p.suspension_depth = p.suspension_depth.min(p.budget);
        crate::forest::build_forest(botnet, &p)
    }
}

/// Runs a spam campaign for up to `cfg.rounds` rounds (stopping early once
/// every bot is suspended) and reports classification quality per round.
///
/// Each round: the builder arranges the surviving bots into a forest, one of
/// the level-1 bots is picked at random to carry the main tree, the spam
/// cascades level by level, and legitimate followers retweet the earliest
/// copy they see with probability `beta_retweet`. The defense then scores
/// every action and suspensions take effect before the next round.
pub fn run_campaign(
    network: &CampaignNetwork,
    mut forest_builder: impl FnMut(&BotnetInstance) -> Result<RetweetForest, TreeError>,
    defense: &DefensePolicy,
    cfg: &CampaignConfig,
) -> Result<(CampaignState, Vec<ClassificationReport>), SpamError> {
    defense.validate()?;
    cfg.validate()?;
    if network.botnet.bot_count() == 0 {
        return Err(SpamError::EmptyNetwork);
    }

    let roles = network.roles();
    let all_bots: BTreeSet<UserId> = network.botnet.bots().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut state = CampaignState::default();
    let mut reports = Vec::new();
    let mut next_tweet_id = 0u64;

    for round in 1..=cfg.rounds {
        let alive: BTreeSet<UserId> =
            all_bots.difference(&state.suspended).copied().collect();
        if alive.is_empty() {
            break;
        }
        let suspended_legit: BTreeSet<UserId> = state
            .suspended
            .intersection(&network.legit_users)
            .copied()
            .collect();
        let botnet = network.botnet.restricted(&alive, &suspended_legit);
        let mut forest = forest_builder(&botnet)?;
        reroot_main_tree(&mut forest, &mut rng);

        let posts = cascade(&forest, &botnet, cfg.beta_retweet, &mut rng, &mut next_tweet_id)?;
        let mut retweet_totals: BTreeMap<u64, u64> = BTreeMap::new();
        for post in &posts {
            if let Some(parent_tweet) = post.retweet_of {
                *retweet_totals.entry(parent_tweet).or_insert(0) += 1;
            }
        }

        let newly_suspended =
            apply_defense(defense, &posts, &retweet_totals, &mut state.spam_score)?;
        state.suspended.extend(newly_suspended.iter().copied());
        state.round_log.push(RoundRecord {
            round,
            posts,
            retweet_totals,
            newly_suspended,
        });
        reports.push(classify(&state.suspended, &roles, &cfg.penalties, round));
    }

    Ok((state, reports))
}

/// When the forest has one main tree (a unique root with children), hand
/// that tree to a root chosen uniformly from level 1, modeling the botmaster
/// picking a different bot as the round's source.
fn reroot_main_tree(forest: &mut RetweetForest, rng: &mut ChaCha8Rng) {
    let Some(roots) = forest.levels.first() else { return };
    if roots.len() < 2 {
        return;
    }
    let with_children: Vec<UserId> = roots
        .iter()
        .copied()
        .filter(|r| forest.parent.values().any(|p| p == r))
        .collect();
    let [head] = with_children.as_slice() else { return };
    let head = *head;
    let candidates: Vec<UserId> = roots.iter().copied().collect();
    let chosen = candidates[rng.random_range(0..candidates.len())];
    if chosen == head {
        return;
    }
    let children: Vec<UserId> = forest
        .parent
        .iter()
        .filter(|(_, p)| **p == head)
        .map(|(c, _)| *c)
        .collect();
    for child in children {
        forest.parent.insert(child, chosen);
    }
}

/// Plays one round: every root posts the spam, deeper bots retweet their
/// parent's copy, and each covered legitimate follower sees the earliest
/// copy (lowest level, then lowest bot id) and retweets it with probability
/// `beta`.
fn cascade(
    forest: &RetweetForest,
    botnet: &BotnetInstance,
    beta: f64,
    rng: &mut ChaCha8Rng,
    next_tweet_id: &mut u64,
) -> Result<Vec<PostRecord>, SpamError> {
    let mut posts = Vec::new();
    let mut tweet_of: BTreeMap<UserId, u64> = BTreeMap::new();
    let mut fresh = || {
        let id = *next_tweet_id;
        *next_tweet_id += 1;
        id
    };

    for (idx, level) in forest.levels.iter().enumerate() {
        let level_no = idx + 1;
        for bot in level {
            let tweet_id = fresh();
            let retweet_of = if level_no == 1 {
                None
            } else {
                let parent = forest.parent.get(bot).ok_or(SpamError::MissingParentTweet {
                    bot: *bot,
                    level: level_no,
                })?;
                let parent_tweet =
                    tweet_of
                        .get(parent)
                        .ok_or(SpamError::MissingParentTweet {
                            bot: *bot,
                            level: level_no,
                        })?;
                Some(*parent_tweet)
            };
            tweet_of.insert(*bot, tweet_id);
            posts.push(PostRecord {
                user: *bot,
                hop: level_no - 1,
                tweet_id,
                retweet_of,
            });
        }
    }

    // First exposure of each covered follower: lowest level, then lowest
    // bot id among that level's bots it follows.
    let mut exposure: BTreeMap<UserId, (usize, UserId)> = BTreeMap::new();
    for (idx, level) in forest.levels.iter().enumerate() {
        let level_no = idx + 1;
        for bot in level {
            for f in botnet.followers(*bot).map_err(TreeError::from)? {
                exposure.entry(*f).or_insert((level_no, *bot));
            }
        }
    }
    for (follower, (level_no, bot)) in exposure {
        if rng.random_bool(beta) {
            let tweet_id = fresh();
            posts.push(PostRecord {
                user: follower,
                hop: level_no, // one hop below the bot it follows
                tweet_id,
                retweet_of: Some(tweet_of[&bot]),
            });
        }
    }
    Ok(posts)
}

/// Scores the round's posts and returns the users crossing the suspension
/// bar. Scores accumulate across rounds; Defense I suspends directly
/// without bookkeeping.
fn apply_defense(
    defense: &DefensePolicy,
    posts: &[PostRecord],
    retweet_totals: &BTreeMap<u64, u64>,
    spam_score: &mut BTreeMap<UserId, f64>,
) -> Result<BTreeSet<UserId>, SpamError> {
    let mut suspended = BTreeSet::new();
    match *defense {
        DefensePolicy::DepthM { m } => {
            for post in posts {
                if post.hop <= m - 1 {
                    suspended.insert(post.user);
                }
            }
        }
        DefensePolicy::CountThreshold { delta } => {
            for post in posts {
                let score = spam_score.entry(post.user).or_insert(0.0);
                *score += 1.0;
                if *score >= delta {
                    suspended.insert(post.user);
                }
            }
        }
        DefensePolicy::PopularityWeighted { delta, m } => {
            for post in posts {
                let Some(parent_tweet) = post.retweet_of else {
                    continue; // sources tweeted, not retweeted
                };
                let within = post.hop <= m - 1;
                if !within {
                    continue;
                }
                let n_t = retweet_totals.get(&parent_tweet).copied().unwrap_or(0);
                let current = spam_score.get(&post.user).copied().unwrap_or(0.0);
                let updated = update_score_popularity(current, n_t as f64, true)?;
                spam_score.insert(post.user, updated);
                if updated >= delta {
                    suspended.insert(post.user);
                }
            }
        }
        DefensePolicy::AttenuatedScore { gamma, threshold } => {
            for post in posts {
                let current = spam_score.get(&post.user).copied().unwrap_or(0.0);
                let updated = update_score_attenuated(current, gamma, post.hop);
                spam_score.insert(post.user, updated);
                if updated >= threshold {
                    suspended.insert(post.user);
                }
            }
        }
    }
    Ok(suspended)
}
