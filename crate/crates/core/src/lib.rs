//! Deterministic simulator for spam distribution over a social botnet, the
//! suspension policies that fight it, and credit-based influence scoring
//! that resists botnet manipulation.
//!
//! The crate is organized around three questions:
//!
//! * **Distribution** ([`forest`], [`brute`], [`cover`]): how should a
//!   botnet arrange retweet trees to spread spam widely and quickly while
//!   expecting its first few levels to be suspended?
//! * **Defense** ([`spam`]): how well do depth-, count-, popularity- and
//!   attenuation-based suspension policies identify the participants of
//!   such campaigns round over round?
//! * **Measurement** ([`influence`]): how can influence be scored from an
//!   action graph so that botnets gain almost nothing by colluding?
//!
//! [`synth`] generates reproducible synthetic inputs for all three,
//! [`experiment`] runs parameter sweeps and writes CSV/JSON reports, and
//! [`io`] holds the TSV loaders. Everything is deterministic given a seed:
//! identical configurations produce byte-identical outputs.

pub mod brute;
pub mod cover;
pub mod forest;
pub mod graph;
pub mod io;
pub mod spam;
pub mod synth;

pub use brute::brute_force_optimum;
pub use cover::{coverage_of, max_cover_greedy, min_cover_greedy, CoverError};
pub use forest::{
    build_forest, compute_delay, compute_phi, default_lags, independent_objective, objective,
    validate, DistributionMetrics, RetweetForest, SpamParams, TreeError, Violation,
};
pub use graph::{
    build_action_graph, ActionGraph, BotnetInstance, GraphError, UserId, UserRole,
};
pub use io::{
    load_edge_list, load_follower_sets, load_roles, write_edge_list, write_follower_sets,
    write_roles, IoError,
};
pub use spam::{
    classify, heuristic_builder, run_campaign, update_score_attenuated,
    update_score_popularity, CampaignConfig, CampaignNetwork, CampaignState,
    ClassificationReport, DefensePolicy, PostRecord, RoundRecord, SpamError,
};
pub use synth::{
    attack_edge_count, gen_follower_sets, gen_ground_truth, gen_legit_action_graph,
    seed_distances, top_out_weight_seeds, AttackConfig, AttackKind, GroundTruthNetwork,
    LegitGraphConfig, SynthError, SynthFollowerConfig,
};
