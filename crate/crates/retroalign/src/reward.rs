//! Verifiable reward for generated multi-step plans.
//!
//! A plan is free text: an optional reasoning segment between two delimiters,
//! then one `PRODUCT>>P1.P2` line per reaction. The reward gates on the
//! answer describing a connected route to the target, then pays
//!
//! ```text
//! R   = r_fmt + Φ                        (0 if the plan cannot be parsed)
//! Φ   = λ_acc − Ψ      if the starting materials match a reference exactly
//!     = λ_sim · J_max  otherwise
//! Ψ   = η_v · min(c_inv, inv_cap) + η_d · clip(D − D*, 0, depth_cap)
//! ```
//!
//! where `J_max` is the best Jaccard similarity of the plan's starting
//! materials against the references, `c_inv` counts reactions with an
//! invalid molecule and `D`, `D*` are plan and reference depth.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{render_sequence, ReactionLine};
use crate::route::{route_depth, Reaction, Route};
use crate::smiles::{canonical_key, parse_smiles, CanonicalKey, Molecule};

/// Slack for the ordering constraint, which the defaults meet with equality.
const CONSTRAINT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("reward constants break λ_acc − (η_v·inv_cap + η_d·depth_cap) ≥ λ_sim: {lhs} < {rhs}")]
    Ordering { lhs: f64, rhs: f64 },
    #[error("reward constant {0} must be finite and non-negative")]
    BadConstant(&'static str),
    #[error("no reference starting-material sets")]
    NoReferences,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("weight {0} outside [0, 1]")]
pub struct DomainError(pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub r_fmt: f64,
    pub lambda_acc: f64,
    pub lambda_sim: f64,
    pub eta_v: f64,
    pub eta_d: f64,
    pub inv_cap: usize,
    pub depth_cap: usize,
    /// Pay `r_fmt` only when both reasoning delimiters are present in order.
    pub strict_delimiters: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            r_fmt: 0.5,
            lambda_acc: 1.5,
            lambda_sim: 0.5,
            eta_v: 0.1,
            eta_d: 0.2,
            inv_cap: 4,
            depth_cap: 3,
            strict_delimiters: false,
        }
    }
}

impl RewardConfig {
    /// Largest possible penalty Ψ.
    pub fn max_penalty(&self) -> f64 {
        self.eta_v * self.inv_cap as f64 + self.eta_d * self.depth_cap as f64
    }

    /// Checks that the worst exact match still earns at least the best
    /// non-exact one.
    pub fn validate(&self) -> Result<(), RewardError> {
        for (name, v) in [
            ("r_fmt", self.r_fmt),
            ("lambda_acc", self.lambda_acc),
            ("lambda_sim", self.lambda_sim),
            ("eta_v", self.eta_v),
            ("eta_d", self.eta_d),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(RewardError::BadConstant(name));
            }
        }
        let lhs = self.lambda_acc - self.max_penalty();
        if lhs + CONSTRAINT_SLACK < self.lambda_sim {
            return Err(RewardError::Ordering {
                lhs,
                rhs: self.lambda_sim,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delimiters {
    pub open: String,
    pub close: String,
}

impl Default for Delimiters {
    fn default() -> Self {
        Delimiters {
            open: "<think>".into(),
            close: "</think>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineFailure {
    /// 1-based line number within the answer segment.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct GeneratedPlan {
    pub raw_text: String,
    pub thought: Option<String>,
    pub answer: String,
    /// Both delimiters present, opening before closing.
    pub delimited: bool,
    pub parsed_route: Option<Route>,
    pub parse_failures: Vec<LineFailure>,
    /// Reactions containing a molecule that does not parse or breaks valence.
    pub invalid_reactions: usize,
}

impl GeneratedPlan {
    pub fn is_parsable(&self) -> bool {
        self.parsed_route.is_some()
    }

    /// Starting materials of the parsed route.
    pub fn leaves(&self) -> Option<BTreeSet<CanonicalKey>> {
        self.parsed_route.as_ref().map(Route::leaves)
    }

    pub fn depth(&self) -> Option<usize> {
        self.parsed_route.as_ref().and_then(|r| route_depth(r).ok())
    }
}

/// Splits `text` on the delimiters and rebuilds a route from the answer.
///
/// The first reaction must produce `target`; every later reaction must
/// produce a precursor of an earlier one. Repeating a reaction is harmless,
/// giving the same product two different precursor sets is not.
pub fn parse_plan(text: &str, target: &Molecule, delimiters: &Delimiters) -> GeneratedPlan {
    let (thought, answer, delimited) = split(text, delimiters);
    let mut plan = GeneratedPlan {
        raw_text: text.to_string(),
        thought,
        answer: answer.to_string(),
        delimited,
        parsed_route: None,
        parse_failures: Vec::new(),
        invalid_reactions: 0,
    };

    let fail = |failures: &mut Vec<LineFailure>, line: usize, message: String| {
        failures.push(LineFailure { line, message });
    };

    let target_key = canonical_key(target);
    let mut reactions: Vec<Reaction> = Vec::new();
    let mut produced: HashMap<CanonicalKey, BTreeSet<CanonicalKey>> = HashMap::new();
    let mut open: BTreeSet<CanonicalKey> = BTreeSet::new();
    let mut fatal = false;

    for (n, raw) in answer.lines().enumerate() {
        let n = n + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: ReactionLine = match raw.parse() {
            Ok(l) => l,
            Err(e) => {
                fail(&mut plan.parse_failures, n, e.to_string());
                continue;
            }
        };
        let product = match single(&line.product) {
            Ok(m) => m,
            Err(message) => {
                fail(&mut plan.parse_failures, n, format!("product: {message}"));
                fatal = true;
                break;
            }
        };
        let mut invalid = !product.has_valid_valences();
        let mut precursors = Vec::new();
        for (i, text) in line.precursors.iter().enumerate() {
            match parse_smiles(text) {
                Ok(parts) => {
                    invalid |= parts.iter().any(|m| !m.has_valid_valences());
                    precursors.extend(parts);
                }
                Err(e) => {
                    invalid = true;
                    fail(&mut plan.parse_failures, n, format!("precursor {}: {e}", i + 1));
                }
            }
        }
        if invalid {
            plan.invalid_reactions += 1;
        }
        let Ok(reaction) = Reaction::new(product, precursors) else {
            fail(&mut plan.parse_failures, n, "no parsable precursor".into());
            fatal = true;
            break;
        };

        let key = reaction.product_key().clone();
        let links = if reactions.is_empty() {
            key == target_key
        } else {
            open.contains(&key)
        };
        if !links {
            fail(&mut plan.parse_failures, n, "product is not an earlier precursor".into());
            fatal = true;
            break;
        }
        let set: BTreeSet<CanonicalKey> = reaction.precursor_keys().iter().cloned().collect();
        match produced.get(&key) {
            Some(seen) if *seen == set => continue,
            Some(_) => {
                fail(&mut plan.parse_failures, n, "product already made from other precursors".into());
                fatal = true;
                break;
            }
            None => {}
        }
        open.extend(set.iter().cloned());
        produced.insert(key, set);
        reactions.push(reaction);
    }

    if !fatal && !reactions.is_empty() {
        let route = Route::new(target.clone(), reactions);
        match route_depth(&route) {
            Ok(_) => plan.parsed_route = Some(route),
            Err(e) => fail(&mut plan.parse_failures, 0, e.to_string()),
        }
    } else if reactions.is_empty() && !fatal {
        fail(&mut plan.parse_failures, 0, "no reaction lines".into());
    }
    plan
}

fn single(text: &str) -> Result<Molecule, String> {
    let mut parts = parse_smiles(text).map_err(|e| e.to_string())?;
    if parts.len() != 1 {
        return Err(format!("{} components", parts.len()));
    }
    Ok(parts.pop().unwrap())
}

fn split<'t>(text: &'t str, d: &Delimiters) -> (Option<String>, &'t str, bool) {
    if let Some(start) = text.find(&d.open) {
        let body = start + d.open.len();
        if let Some(len) = text[body..].find(&d.close) {
            let thought = text[body..body + len].to_string();
            return (Some(thought), &text[body + len + d.close.len()..], true);
        }
    }
    match text.find(&d.close) {
        Some(end) => (None, &text[end + d.close.len()..], false),
        None => (None, text, false),
    }
}

/// Writes reaction lines as a plan with a reasoning segment.
pub fn format_plan(thought: &str, lines: &[ReactionLine], delimiters: &Delimiters) -> String {
    format!(
        "{}{}{}\n{}",
        delimiters.open,
        thought,
        delimiters.close,
        render_sequence(lines)
    )
}

/// An exact fraction `shared / union`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Jaccard {
    pub shared: usize,
    pub union: usize,
}

impl Jaccard {
    pub fn value(self) -> f64 {
        self.shared as f64 / self.union as f64
    }

    pub fn is_one(self) -> bool {
        self.shared == self.union
    }
}

impl PartialEq for Jaccard {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Jaccard {}

impl PartialOrd for Jaccard {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Jaccard {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.shared * other.union).cmp(&(other.shared * self.union))
    }
}

impl fmt::Display for Jaccard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.shared, self.union)
    }
}

/// `|a ∩ b| / |a ∪ b|`, defined as 1 when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Jaccard {
    let shared = a.intersection(b).count();
    let union = a.len() + b.len() - shared;
    if union == 0 {
        Jaccard { shared: 1, union: 1 }
    } else {
        Jaccard { shared, union }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanScore {
    pub total: f64,
    pub r_fmt_applied: Option<bool>,
    pub j_max: Option<f64>,
    pub exact: Option<bool>,
    pub c_inv: Option<usize>,
    pub depth: Option<usize>,
    pub depth_excess: Option<usize>,
    pub psi: Option<f64>,
    pub phi: Option<f64>,
}

impl PlanScore {
    fn unparsable() -> Self {
        PlanScore {
            total: 0.0,
            r_fmt_applied: None,
            j_max: None,
            exact: None,
            c_inv: None,
            depth: None,
            depth_excess: None,
            psi: None,
            phi: None,
        }
    }
}

pub fn score_plan(
    plan: &GeneratedPlan,
    references: &[BTreeSet<CanonicalKey>],
    ref_depth: usize,
    cfg: &RewardConfig,
) -> Result<PlanScore, RewardError> {
    cfg.validate()?;
    if references.is_empty() {
        return Err(RewardError::NoReferences);
    }
    let (Some(leaves), Some(depth)) = (plan.leaves(), plan.depth()) else {
        return Ok(PlanScore::unparsable());
    };
    let j_max = references.iter().map(|r| jaccard(&leaves, r)).max().unwrap();
    let exact = j_max.is_one();
    let excess = depth.saturating_sub(ref_depth);
    let c_inv = plan.invalid_reactions;
    let fmt = !cfg.strict_delimiters || plan.delimited;
    let (psi, phi, total) = reward_terms(cfg, j_max, c_inv, excess, fmt);
    Ok(PlanScore {
        total,
        r_fmt_applied: Some(fmt),
        j_max: Some(j_max.value()),
        exact: Some(exact),
        c_inv: Some(c_inv),
        depth: Some(depth),
        depth_excess: Some(excess),
        psi: Some(psi),
        phi: Some(phi),
    })
}

/// `(Ψ, Φ, R)` for a parsable plan with best similarity `j_max`, `c_inv`
/// invalid reactions and `depth_excess` extra steps; `fmt` says whether the
/// format bonus is paid.
pub fn reward_terms(
    cfg: &RewardConfig,
    j_max: Jaccard,
    c_inv: usize,
    depth_excess: usize,
    fmt: bool,
) -> (f64, f64, f64) {
    let psi = cfg.eta_v * c_inv.min(cfg.inv_cap) as f64
        + cfg.eta_d * depth_excess.min(cfg.depth_cap) as f64;
    let phi = if j_max.is_one() {
        cfg.lambda_acc - psi
    } else {
        cfg.lambda_sim * j_max.value()
    };
    let total = if fmt { cfg.r_fmt } else { 0.0 } + phi;
    (psi, phi, total)
}

/// `α·l_thought + (1 − α)·l_answer`.
pub fn weighted_loss(l_thought: f64, l_answer: f64, alpha: f64) -> Result<f64, DomainError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DomainError(alpha));
    }
    Ok(alpha * l_thought + (1.0 - alpha) * l_answer)
}
