//! Frequency voting over candidate plans from augmented inputs, and the
//! pairwise margin objective for ranking input notations.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::smiles::{is_isomorphic, CanonicalKey, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlateEntry {
    pub plan_id: String,
    pub precursors: BTreeSet<CanonicalKey>,
    pub depth: usize,
    pub notation_id: usize,
}

/// Candidates for one target, in inference (notation pre-rank) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateSlate {
    pub target: CanonicalKey,
    pub entries: Vec<SlateEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ranked {
    /// The earliest entry proposing this precursor set.
    pub entry: SlateEntry,
    /// Number of entries proposing the same set.
    pub score: usize,
    pub first_index: usize,
}

/// Ranks distinct precursor sets by how many entries propose them; ties go
/// to the set proposed first.
pub fn vote(slate: &CandidateSlate) -> Vec<Ranked> {
    let mut slot: HashMap<&BTreeSet<CanonicalKey>, usize> = HashMap::new();
    let mut ranked: Vec<Ranked> = Vec::new();
    for (i, e) in slate.entries.iter().enumerate() {
        match slot.get(&e.precursors) {
            Some(&s) => ranked[s].score += 1,
            None => {
                slot.insert(&e.precursors, ranked.len());
                ranked.push(Ranked {
                    entry: e.clone(),
                    score: 1,
                    first_index: i,
                });
            }
        }
    }
    // stable, and first_index already ascending
    ranked.sort_by_key(|r| std::cmp::Reverse(r.score));
    ranked
}

/// Hinge loss for a pair that should score `s_pos > s_neg` by `margin`.
pub fn margin_rank_loss(s_pos: f64, s_neg: f64, margin: f64) -> f64 {
    (-(s_pos - s_neg) + margin).max(0.0)
}

pub const DEFAULT_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotationOutcome {
    pub notation: String,
    pub target: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingPair {
    pub positive: String,
    pub negative: String,
    pub label: i8,
}

impl RankingPair {
    /// Both notations parse and describe the same molecule.
    pub fn is_consistent(&self) -> bool {
        match (
            Molecule::from_smiles(&self.positive),
            Molecule::from_smiles(&self.negative),
        ) {
            (Ok(a), Ok(b)) => is_isomorphic(&a, &b),
            _ => false,
        }
    }
}

/// Every (success, failure) pair of notations of the same target. Targets
/// appear in order of first mention; pairs in (success, failure) order.
pub fn build_ranking_pairs(outcomes: &[NotationOutcome]) -> Vec<RankingPair> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, (Vec<&str>, Vec<&str>)> = HashMap::new();
    for o in outcomes {
        let g = groups.entry(&o.target).or_insert_with(|| {
            order.push(&o.target);
            Default::default()
        });
        if o.success {
            g.0.push(&o.notation);
        } else {
            g.1.push(&o.notation);
        }
    }
    let mut pairs = Vec::new();
    for t in order {
        let (pos, neg) = &groups[t];
        for p in pos {
            for n in neg {
                pairs.push(RankingPair {
                    positive: p.to_string(),
                    negative: n.to_string(),
                    label: 1,
                });
            }
        }
    }
    pairs
}
