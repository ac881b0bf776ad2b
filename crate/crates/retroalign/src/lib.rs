//! Tooling for multi-step retrosynthetic routes written as reaction SMILES.
//!
//! - [`smiles`]: molecular graphs, rooted SMILES writing, canonical keys.
//! - [`route`]: route graphs, validation, datasets and stock files.
//! - [`align`]: root-inheriting rendering of a route as reaction lines.
//! - [`reward`]: parsing generated plans and scoring them.
//! - [`eval`]: top-k exact match and edit-distance drift.
//! - [`consensus`]: voting over augmented inferences, ranking pairs.

pub mod align;
pub mod consensus;
pub mod eval;
pub mod reward;
pub mod route;
pub mod smiles;

pub use align::{
    align_route, augment_roots, parse_sequence, render_sequence, AlignedSequence, ReactionLine,
};
pub use consensus::{build_ranking_pairs, margin_rank_loss, vote, CandidateSlate, RankingPair};
pub use eval::{is_success, levenshtein, nld_profile, topk_accuracy, EvalRecord, EvalReport};
pub use reward::{
    jaccard, parse_plan, score_plan, weighted_loss, GeneratedPlan, PlanScore, RewardConfig,
};
pub use route::{route_depth, validate_route, Reaction, Route, RouteTree, StockSet};
pub use smiles::{
    canonical_key, canonical_ranks, find_isomorphism, is_isomorphic, parse_smiles, write_rooted,
    CanonicalKey, Molecule, SmilesError,
};
