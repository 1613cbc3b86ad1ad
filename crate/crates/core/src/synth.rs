//! Synthetic botnets, follower sets, legitimate action graphs, and
//! ground-truth attack networks.
//!
//! Everything here is a pure function of `(config, seed)`: identical inputs
//! produce identical outputs, byte for byte in serialized form, so
//! independent trials can run in parallel with distinct seed streams.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ActionGraph, BotnetInstance, GraphError, UserId, UserRole};

#[derive(Error, Debug)]
pub enum SynthError {
    #[error("bot_count must be at least 1")]
    InvalidBotCount,
    #[error("follower_pool must be at least 1")]
    InvalidPool,
    #[error("mu = {0} must be a positive finite number")]
    InvalidMu(f64),
    #[error("sigma2 = {0} must be a non-negative finite number")]
    InvalidSigma(f64),
    #[error("omega = {0} must be a non-negative finite number")]
    OmegaNegative(f64),
    #[error("candidate_pool_factor must be at least 1")]
    PoolFactorZero,
    #[error("users must be at least 2 to draw distinct endpoints")]
    TooFewUsers,
    #[error("interactions must be at least 1")]
    NoInteractions,
    #[error("zipf_exponent = {0} must be a positive finite number")]
    InvalidZipfExponent(f64),
    #[error("seed {0} is not a vertex of the legitimate graph")]
    UnknownSeed(UserId),
    #[error("cannot draw {requested} distinct attack sources from {available} candidates")]
    TooManyAttackEdges { requested: usize, available: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Configuration for [`gen_follower_sets`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthFollowerConfig {
    /// Number of bots; they receive ids `1..=bot_count`.
    pub bot_count: usize,
    /// Size of the shared follower pool; followers receive the ids directly
    /// after the bots.
    pub follower_pool: usize,
    /// Mean of the Gaussian follower-count distribution.
    pub mu: f64,
    /// Variance of the follower-count distribution.
    pub sigma2: f64,
    pub rng_seed: u64,
}

impl Default for SynthFollowerConfig {
    fn default() -> Self {
        SynthFollowerConfig {
            bot_count: 400,
            follower_pool: 6000,
            mu: 32.0,
            sigma2: 5.0,
            rng_seed: 0,
        }
    }
}

impl SynthFollowerConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.bot_count == 0 {
            return Err(SynthError::InvalidBotCount);
        }
        if self.follower_pool == 0 {
            return Err(SynthError::InvalidPool);
        }
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(SynthError::InvalidMu(self.mu));
        }
        if !self.sigma2.is_finite() || self.sigma2 < 0.0 {
            return Err(SynthError::InvalidSigma(self.sigma2));
        }
        Ok(())
    }
}

/// Draws each bot's follower count from `Normal(mu, sigma2)` (rounded, then
/// clamped to `[0, follower_pool]`) and fills the set by sampling that many
/// members uniformly without replacement from the shared pool.
pub fn gen_follower_sets(cfg: &SynthFollowerConfig) -> Result<BotnetInstance, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let normal = Normal::new(cfg.mu, cfg.sigma2.sqrt()).expect("validated std dev");
    let first_follower = cfg.bot_count as u64 + 1;

    let mut followers = BTreeMap::new();
    for bot in 1..=cfg.bot_count as u64 {
        let draw: f64 = normal.sample(&mut rng);
        let size = draw.round().clamp(0.0, cfg.follower_pool as f64) as usize;
        let set: BTreeSet<UserId> = rand::seq::index::sample(&mut rng, cfg.follower_pool, size)
            .into_iter()
            .map(|idx| UserId(first_follower + idx as u64))
            .collect();
        followers.insert(UserId(bot), set);
    }
    Ok(BotnetInstance::new(followers)?)
}

/// How attack-edge sources are selected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Sources drawn uniformly from all legitimate users.
    Random,
    /// Sources drawn from the users closest to the seed set.
    SeedTargeting,
}

impl AttackKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::Random => "random",
            AttackKind::SeedTargeting => "seed_targeting",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Attack parameters. The number of forged legit-to-bot arcs is
/// `round(omega * g)` where `g` is the arc count of the legitimate graph the
/// attack is mounted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Attack strength: forged arcs as a fraction of legitimate arcs.
    pub omega: f64,
    pub kind: AttackKind,
    /// Seed-targeting draws sources from the `candidate_pool_factor *
    /// round(omega * g)` users nearest to the seeds.
    pub candidate_pool_factor: usize,
}

impl AttackConfig {
    pub fn new(omega: f64, kind: AttackKind) -> Self {
        AttackConfig {
            omega,
            kind,
            candidate_pool_factor: 100,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !self.omega.is_finite() || self.omega < 0.0 {
            return Err(SynthError::OmegaNegative(self.omega));
        }
        if self.candidate_pool_factor == 0 {
            return Err(SynthError::PoolFactorZero);
        }
        Ok(())
    }
}

/// Number of forged arcs for attack strength `omega` against a legitimate
/// graph with `legit_arcs` arcs, using half-up rounding.
pub fn attack_edge_count(omega: f64, legit_arcs: usize) -> usize {
    (omega * legit_arcs as f64).round() as usize
}

/// A legitimate action graph with a botnet attached to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthNetwork {
    /// Legitimate arcs plus the forged legit-to-bot attack arcs. Contains no
    /// arc leaving the botnet.
    pub action_graph: ActionGraph,
    pub roles: BTreeMap<UserId, UserRole>,
    /// Forged arcs in creation order; every arc has weight 1.
    pub attack_edges: Vec<(UserId, UserId)>,
    /// The botnet reroutes anything it receives internally without limit, so
    /// its internal arcs are never materialized; this flag records that the
    /// bots should be treated as completely connected among themselves.
    pub botnet_fully_connected: bool,
    /// Set when seed targeting wanted a larger candidate pool than the seeds
    /// can reach and fell back to all reachable users.
    pub pool_fallback: bool,
}

impl GroundTruthNetwork {
    pub fn bots(&self) -> impl Iterator<Item = UserId> + '_ {
        self.roles
            .iter()
            .filter(|(_, role)| role.is_bot())
            .map(|(id, _)| *id)
    }

    pub fn legit_users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.roles
            .iter()
            .filter(|(_, role)| role.is_legit())
            .map(|(id, _)| *id)
    }
}

/// Hop distance from the seed set to every reachable vertex, following
/// outgoing arcs (the direction credits flow).
pub fn seed_distances(graph: &ActionGraph, seeds: &BTreeSet<UserId>) -> BTreeMap<UserId, usize> {
    let mut dist: BTreeMap<UserId, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for seed in seeds {
        if graph.contains(*seed) {
            dist.insert(*seed, 0);
            queue.push_back(*seed);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for (next, _) in graph.out_arcs(v) {
            if !dist.contains_key(&next) {
                dist.insert(next, d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

/// Attaches `bot_count` bots to a legitimate graph and forges
/// `round(omega * g)` unit-weight arcs from legitimate users to bots.
///
/// Sources are sampled without replacement (a user forges at most one attack
/// arc); each source points to a uniformly chosen bot. Seed targeting ranks
/// candidates by `(hop distance to the seeds, id)`, skips the seeds
/// themselves, and falls back to all reachable users (setting
/// [`GroundTruthNetwork::pool_fallback`]) when the requested pool exceeds
/// reachability.
pub fn gen_ground_truth(
    legit: &ActionGraph,
    bot_count: usize,
    atk: &AttackConfig,
    seeds: &BTreeSet<UserId>,
    rng_seed: u64,
) -> Result<GroundTruthNetwork, SynthError> {
    atk.validate()?;
    if bot_count == 0 {
        return Err(SynthError::InvalidBotCount);
    }
    for seed in seeds {
        if !legit.contains(*seed) {
            return Err(SynthError::UnknownSeed(*seed));
        }
    }

    let legit_users: Vec<UserId> = legit.vertices().collect();
    let max_id = legit_users.iter().map(|u| u.0).max().unwrap_or(0);
    let bots: Vec<UserId> = (1..=bot_count as u64).map(|i| UserId(max_id + i)).collect();

    let mut graph = legit.clone();
    for bot in &bots {
        graph.add_vertex(*bot);
    }
    let mut roles: BTreeMap<UserId, UserRole> = legit_users
        .iter()
        .map(|u| {
            let role = if seeds.contains(u) { UserRole::Seed } else { UserRole::Legit };
            (*u, role)
        })
        .collect();
    for bot in &bots {
        roles.insert(*bot, UserRole::Bot);
    }

    let count = attack_edge_count(atk.omega, legit.arc_count());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pool_fallback = false;
    let sources: Vec<UserId> = if count == 0 {
        Vec::new()
    } else {
        let candidates: Vec<UserId> = match atk.kind {
            AttackKind::Random => legit_users.clone(),
            AttackKind::SeedTargeting => {
                let dist = seed_distances(legit, seeds);
                let mut reachable: Vec<UserId> = dist
                    .keys()
                    .filter(|u| !seeds.contains(u))
                    .copied()
                    .collect();
                reachable.sort_by_key(|u| (dist[u], *u));
                let wanted = atk.candidate_pool_factor.saturating_mul(count);
                if reachable.len() < wanted {
                    pool_fallback = true;
                } else {
                    reachable.truncate(wanted);
                }
                reachable
            }
        };
        if candidates.len() < count {
            return Err(SynthError::TooManyAttackEdges {
                requested: count,
                available: candidates.len(),
            });
        }
        rand::seq::index::sample(&mut rng, candidates.len(), count)
            .into_iter()
            .map(|idx| candidates[idx])
            .collect()
    };

    let mut attack_edges = Vec::with_capacity(sources.len());
    for src in sources {
        let bot = bots[rng.random_range(0..bots.len())];
        graph.add_interaction(src, bot, 1)?;
        attack_edges.push((src, bot));
    }

    Ok(GroundTruthNetwork {
        action_graph: graph,
        roles,
        attack_edges,
        botnet_fully_connected: true,
        pool_fallback,
    })
}

/// Configuration for [`gen_legit_action_graph`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LegitGraphConfig {
    pub users: usize,
    /// Interaction events to draw; arcs between the same pair merge, so the
    /// final arc count is at most this.
    pub interactions: usize,
    /// Skew of the activity / popularity distributions.
    pub zipf_exponent: f64,
    pub rng_seed: u64,
}

impl Default for LegitGraphConfig {
    fn default() -> Self {
        LegitGraphConfig {
            users: 10_000,
            interactions: 200_000,
            zipf_exponent: 1.0,
            rng_seed: 0,
        }
    }
}

impl LegitGraphConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.users < 2 {
            return Err(SynthError::TooFewUsers);
        }
        if self.interactions == 0 {
            return Err(SynthError::NoInteractions);
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent <= 0.0 {
            return Err(SynthError::InvalidZipfExponent(self.zipf_exponent));
        }
        Ok(())
    }
}

/// Generates a legitimate action graph with users `1..=users` by drawing
/// interaction events: both the acting and the receiving user follow Zipf
/// distributions over independently shuffled ranks, so a few users are very
/// active and a few are very popular, without the two groups coinciding.
/// Self-interactions are redrawn; repeated pairs accumulate weight.
pub fn gen_legit_action_graph(cfg: &LegitGraphConfig) -> Result<ActionGraph, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut graph = ActionGraph::new();
    for u in 1..=cfg.users as u64 {
        graph.add_vertex(UserId(u));
    }

    let mut activity: Vec<u64> = (1..=cfg.users as u64).collect();
    activity.shuffle(&mut rng);
    let mut popularity: Vec<u64> = (1..=cfg.users as u64).collect();
    popularity.shuffle(&mut rng);

    let zipf = Zipf::new(cfg.users as f64, cfg.zipf_exponent)
        .expect("validated zipf parameters");
    for _ in 0..cfg.interactions {
        let src_rank = zipf.sample(&mut rng) as usize - 1;
        let src = activity[src_rank.min(cfg.users - 1)];
        let dst = loop {
            let dst_rank = zipf.sample(&mut rng) as usize - 1;
            let dst = popularity[dst_rank.min(cfg.users - 1)];
            if dst != src {
                break dst;
            }
        };
        graph.add_interaction(UserId(src), UserId(dst), 1)?;
    }
    Ok(graph)
}

/// The `count` users with the largest total outgoing weight (ties toward the
/// smaller id); the usual choice of trusted seed users in the experiments.
pub fn top_out_weight_seeds(graph: &ActionGraph, count: usize) -> BTreeSet<UserId> {
    let mut users: Vec<(UserId, u64)> = graph
        .vertices()
        .map(|u| (u, graph.out_weight(u).unwrap_or(0)))
        .collect();
    users.sort_by_key(|(u, w)| (std::cmp::Reverse(*w), *u));
    users.into_iter().take(count).map(|(u, _)| u).collect()
}
