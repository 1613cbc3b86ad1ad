//! Shared graph types: user identities and roles, weighted action graphs,
//! and bot/follower structures.
//!
//! An [`ActionGraph`] is a weighted directed graph where an arc `u -> v` with
//! weight `w` means user `u` performed `w` actions (retweets, replies,
//! mentions) on content of user `v`. A [`BotnetInstance`] holds the follower
//! sets of a collection of bot accounts; followers are always legitimate
//! users, never other bots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a user (bot or legitimate), unique per experiment.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for UserId {
    fn from(raw: u64) -> Self {
        UserId(raw)
    }
}

/// Role of an account. `Seed` users are trusted legitimate users (e.g.
/// verified accounts); every seed is also legitimate.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserRole {
    Bot,
    Legit,
    Seed,
}

impl UserRole {
    pub fn is_legit(self) -> bool {
        matches!(self, UserRole::Legit | UserRole::Seed)
    }

    pub fn is_bot(self) -> bool {
        matches!(self, UserRole::Bot)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UserRole::Bot => "bot",
            UserRole::Legit => "legit",
            UserRole::Seed => "seed",
        }
    }
}

impl fmt::Display for UserRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UserRole {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, GraphError> {
        match s {
            "bot" => Ok(UserRole::Bot),
            "legit" => Ok(UserRole::Legit),
            "seed" => Ok(UserRole::Seed),
            other => Err(GraphError::UnknownRole {
                role: other.to_string(),
            }),
        }
    }
}

#[derive(Error, Debug)]
pub enum GraphError {
    #[error("self-loop on user {user} is not allowed")]
    SelfLoop { user: UserId },
    #[error("zero-weight arc {src} -> {dst} is not allowed")]
    ZeroWeight { src: UserId, dst: UserId },
    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<GraphError>,
    },
    #[error("unknown vertex {0}")]
    UnknownVertex(UserId),
    #[error("unknown bot {0}")]
    UnknownBot(UserId),
    #[error("bot {bot} appears in the follower set of bot {owner}; followers must be legitimate users")]
    BotFollower { owner: UserId, bot: UserId },
    #[error("unknown role {role:?} (expected bot, legit, or seed)")]
    UnknownRole { role: String },
}

/// Weighted directed action graph without self-loops.
///
/// Vertices can be isolated (registered without arcs). Arc weights are
/// strictly positive; repeated interactions between the same pair merge by
/// summing weights, so construction is independent of record order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionGraph {
    vertices: BTreeSet<UserId>,
    out: BTreeMap<UserId, BTreeMap<UserId, u64>>,
    incoming: BTreeMap<UserId, BTreeMap<UserId, u64>>,
    arc_count: usize,
    total_weight: u64,
}

impl ActionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `v` as a vertex, with or without arcs.
    pub fn add_vertex(&mut self, v: UserId) {
        self.vertices.insert(v);
    }

    /// Adds `count` actions from `src` to `dst`, merging with any existing
    /// arc. Rejects self-loops and zero counts.
    pub fn add_interaction(&mut self, src: UserId, dst: UserId, count: u64) -> Result<(), GraphError> {
        if src == dst {
            return Err(GraphError::SelfLoop { user: src });
        }
        if count == 0 {
            return Err(GraphError::ZeroWeight { src, dst });
        }
        self.vertices.insert(src);
        self.vertices.insert(dst);
        let slot = self.out.entry(src).or_default().entry(dst).or_insert(0);
        if *slot == 0 {
            self.arc_count += 1;
        }
        *slot += count;
        *self.incoming.entry(dst).or_default().entry(src).or_insert(0) += count;
        self.total_weight += count;
        Ok(())
    }

    pub fn contains(&self, v: UserId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = UserId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_set(&self) -> &BTreeSet<UserId> {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of distinct arcs.
    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    /// Sum of all arc weights.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn arc_weight(&self, src: UserId, dst: UserId) -> Option<u64> {
        self.out.get(&src).and_then(|m| m.get(&dst)).copied()
    }

    /// Outgoing arcs of `v` as `(destination, weight)`, ascending by id.
    pub fn out_arcs(&self, v: UserId) -> impl Iterator<Item = (UserId, u64)> + '_ {
        self.out
            .get(&v)
            .into_iter()
            .flat_map(|m| m.iter().map(|(d, w)| (*d, *w)))
    }

    /// Incoming arcs of `v` as `(source, weight)`, ascending by id.
    pub fn in_arcs(&self, v: UserId) -> impl Iterator<Item = (UserId, u64)> + '_ {
        self.incoming
            .get(&v)
            .into_iter()
            .flat_map(|m| m.iter().map(|(s, w)| (*s, *w)))
    }

    /// Total weight of outgoing arcs of `v`. Errors on unknown vertices.
    pub fn out_weight(&self, v: UserId) -> Result<u64, GraphError> {
        if !self.contains(v) {
            return Err(GraphError::UnknownVertex(v));
        }
        Ok(self.out_arcs(v).map(|(_, w)| w).sum())
    }

    /// Total weight of incoming arcs of `v`. Errors on unknown vertices.
    pub fn in_weight(&self, v: UserId) -> Result<u64, GraphError> {
        if !self.contains(v) {
            return Err(GraphError::UnknownVertex(v));
        }
        Ok(self.in_arcs(v).map(|(_, w)| w).sum())
    }

    pub fn out_degree(&self, v: UserId) -> usize {
        self.out.get(&v).map_or(0, |m| m.len())
    }

    /// All arcs as `(src, dst, weight)`, ascending by `(src, dst)`.
    pub fn arcs(&self) -> impl Iterator<Item = (UserId, UserId, u64)> + '_ {
        self.out
            .iter()
            .flat_map(|(s, m)| m.iter().map(move |(d, w)| (*s, *d, *w)))
    }
}

/// Builds an [`ActionGraph`] from `(src, dst, count)` records. Invalid
/// records are rejected with an error naming the offending record index
/// (0-based). Permuting the records yields an identical graph.
pub fn build_action_graph<I>(records: I) -> Result<ActionGraph, GraphError>
where
    I: IntoIterator<Item = (UserId, UserId, u64)>,
{
    let mut g = ActionGraph::new();
    for (index, (src, dst, count)) in records.into_iter().enumerate() {
        g.add_interaction(src, dst, count).map_err(|e| GraphError::Record {
            index,
            source: Box::new(e),
        })?;
    }
    Ok(g)
}

/// Follower sets of a bot collection: bot `i` is followed by the legitimate
/// users in `F_i`. The union of all follower sets is precomputed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotnetInstance {
    followers: BTreeMap<UserId, BTreeSet<UserId>>,
    union: BTreeSet<UserId>,
}

impl BotnetInstance {
    /// Builds an instance from per-bot follower sets. Errors if any bot id
    /// appears inside a follower set (followers must be legitimate users).
    pub fn new(followers: BTreeMap<UserId, BTreeSet<UserId>>) -> Result<Self, GraphError> {
        let bot_ids: BTreeSet<UserId> = followers.keys().copied().collect();
        let mut union = BTreeSet::new();
        for (owner, set) in &followers {
            for f in set {
                if bot_ids.contains(f) {
                    return Err(GraphError::BotFollower {
                        owner: *owner,
                        bot: *f,
                    });
                }
                union.insert(*f);
            }
        }
        Ok(BotnetInstance { followers, union })
    }

    pub fn bots(&self) -> impl Iterator<Item = UserId> + '_ {
        self.followers.keys().copied()
    }

    pub fn bot_count(&self) -> usize {
        self.followers.len()
    }

    pub fn contains_bot(&self, bot: UserId) -> bool {
        self.followers.contains_key(&bot)
    }

    pub fn followers(&self, bot: UserId) -> Result<&BTreeSet<UserId>, GraphError> {
        self.followers.get(&bot).ok_or(GraphError::UnknownBot(bot))
    }

    pub fn follower_count(&self, bot: UserId) -> Result<usize, GraphError> {
        self.followers(bot).map(|s| s.len())
    }

    /// Union of all follower sets (the reachable legitimate audience `F`).
    pub fn follower_union(&self) -> &BTreeSet<UserId> {
        &self.union
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserId, &BTreeSet<UserId>)> + '_ {
        self.followers.iter().map(|(b, s)| (*b, s))
    }

    /// Sub-instance keeping only `alive` bots and dropping `removed_followers`
    /// from every follower set. Used by campaign rounds after suspensions.
    pub fn restricted(
        &self,
        alive: &BTreeSet<UserId>,
        removed_followers: &BTreeSet<UserId>,
    ) -> BotnetInstance {
        let followers: BTreeMap<UserId, BTreeSet<UserId>> = self
            .followers
            .iter()
            .filter(|(b, _)| alive.contains(b))
            .map(|(b, s)| {
                let kept: BTreeSet<UserId> = if removed_followers.is_empty() {
                    s.clone()
                } else {
                    s.difference(removed_followers).copied().collect()
                };
                (*b, kept)
            })
            .collect();
        let mut union = BTreeSet::new();
        for set in followers.values() {
            union.extend(set.iter().copied());
        }
        BotnetInstance { followers, union }
    }
}
