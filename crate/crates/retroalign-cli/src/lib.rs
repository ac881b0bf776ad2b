//! Batch commands over route datasets. Each `cmd_*` function takes parsed
//! inputs and returns its artifact as a string, so the binary only handles
//! files and exit codes.
//!
//! Artifacts are JSON lines or CSV. Output order always follows input order,
//! whatever the worker count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use retroalign::align::{align_dataset, align_route, canonical_route, AlignError, ReactionLine};
use retroalign::consensus::{vote, CandidateSlate, SlateEntry};
use retroalign::eval::{nld_by_depth, nld_profile, topk_accuracy, Candidate, EvalRecord, EvalReport};
use retroalign::reward::{parse_plan, score_plan, Delimiters, PlanScore, RewardConfig};
use retroalign::route::{to_tree, validate_route, DatasetError, DatasetRecord, StockSet};
use retroalign::smiles::{canonical_ranks, key_of_smiles, CanonicalKey, SmilesErrorKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod config;

pub use config::PipelineConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("route {0}: {1}")]
    Align(usize, AlignError),
    #[error("route {id} out of range ({len} routes)")]
    NoSuchRoute { id: usize, len: usize },
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn schema(line: usize, message: impl ToString) -> Self {
        CliError::Schema {
            line,
            message: message.to_string(),
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;

/// Parses JSON lines, skipping blank ones. Line numbers are 1-based.
pub fn read_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| CliError::schema(n + 1, e)))
        .collect()
}

pub fn write_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("artifact serializes"));
        out.push('\n');
    }
    out
}

fn keys(smiles: &[String], line: usize) -> Result<BTreeSet<CanonicalKey>, CliError> {
    smiles
        .iter()
        .map(|s| key_of_smiles(s).map_err(|e| CliError::schema(line, format!("{s}: {e}"))))
        .collect()
}

fn key_strings(keys: &BTreeSet<CanonicalKey>) -> Vec<String> {
    keys.iter().map(|k| k.as_str().to_owned()).collect()
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouteFailure {
    pub route_id: usize,
    /// Names of the checks that failed.
    pub checks: Vec<&'static str>,
}

/// A record that could not be read as a route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejected {
    pub route_id: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub routes: usize,
    pub failures: Vec<RouteFailure>,
    pub rejected: Vec<Rejected>,
    /// Rejections caused by wildcard atoms.
    pub wildcards: usize,
}

impl IngestSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.rejected.is_empty()
    }
}

impl std::fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            return write!(f, "{} routes ok", self.routes);
        }
        write!(
            f,
            "{} of {} routes failed validation, {} rejected ({} with wildcard atoms)",
            self.failures.len(),
            self.routes,
            self.rejected.len(),
            self.wildcards
        )?;
        for r in &self.rejected {
            write!(f, "\nroute {}: {}", r.route_id, r.reason)?;
        }
        for r in &self.failures {
            write!(f, "\nroute {}: {}", r.route_id, r.checks.join(", "))?;
        }
        Ok(())
    }
}

/// Validates every readable record against `stock` and tallies the records
/// that could not be read.
pub fn cmd_ingest(records: &[Result<DatasetRecord, DatasetError>], stock: &StockSet) -> IngestSummary {
    let failures = records
        .par_iter()
        .enumerate()
        .filter_map(|(route_id, rec)| {
            let v = validate_route(&rec.as_ref().ok()?.route, stock);
            let checks: Vec<&'static str> = [
                ("target_convergence", v.target_convergence.passed),
                ("acyclicity", v.acyclicity.passed),
                ("grounding", v.grounding.passed),
                ("stepwise_linkage", v.stepwise_linkage.passed),
            ]
            .into_iter()
            .filter(|(_, ok)| !ok)
            .map(|(name, _)| name)
            .collect();
            (!checks.is_empty()).then_some(RouteFailure { route_id, checks })
        })
        .collect();
    let errors: Vec<(usize, &DatasetError)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
        .collect();
    IngestSummary {
        routes: records.len(),
        failures,
        wildcards: errors
            .iter()
            .filter(|(_, e)| e.smiles_error().is_some_and(|s| s.kind == SmilesErrorKind::Wildcard))
            .count(),
        rejected: errors
            .into_iter()
            .map(|(route_id, e)| Rejected {
                route_id,
                reason: e.to_string(),
            })
            .collect(),
    }
}

// ----------------------------------------------------------------- align

/// Aligned corpus: `fold` sampled roots per route, one JSON line per
/// rendering.
pub fn cmd_align(records: &[DatasetRecord], fold: usize, seed: u64) -> Result<String, CliError> {
    let corpus = align_dataset(records, fold, seed).map_err(|(id, e)| CliError::Align(id, e))?;
    Ok(write_jsonl(&corpus))
}

// ----------------------------------------------------------------- score

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanLine {
    pub route_id: usize,
    pub plan_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub route_id: usize,
    pub plan_id: String,
    pub reward: f64,
    /// Starting materials as canonical keys; absent for unparsable plans.
    pub precursors: Option<Vec<String>>,
    pub depth: Option<usize>,
    pub parse_failures: usize,
    #[serde(skip_deserializing)]
    pub detail: Option<PlanScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub plans: usize,
    pub parsable: usize,
    pub mean_reward: f64,
}

pub fn cmd_score(
    plans: &[PlanLine],
    records: &[DatasetRecord],
    reward: &RewardConfig,
    delimiters: &Delimiters,
) -> Result<(String, ScoreSummary), CliError> {
    reward
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let lines = plans
        .par_iter()
        .enumerate()
        .map(|(n, p)| {
            let rec = records.get(p.route_id).ok_or(CliError::NoSuchRoute {
                id: p.route_id,
                len: records.len(),
            })?;
            let plan = parse_plan(&p.text, rec.route.target(), delimiters);
            let score = score_plan(&plan, &rec.references, rec.ref_depth, reward)
                .map_err(|e| CliError::schema(n + 1, e))?;
            Ok(ScoreLine {
                route_id: p.route_id,
                plan_id: p.plan_id.clone(),
                reward: score.total,
                precursors: plan.leaves().map(|l| key_strings(&l)),
                depth: score.depth,
                parse_failures: plan.parse_failures.len(),
                detail: Some(score),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let total: f64 = lines.iter().map(|l| l.reward).sum();
    let summary = ScoreSummary {
        plans: lines.len(),
        parsable: lines.iter().filter(|l| l.precursors.is_some()).count(),
        mean_reward: if lines.is_empty() { 0.0 } else { total / lines.len() as f64 },
    };
    Ok((write_jsonl(&lines), summary))
}

// ------------------------------------------------------------------ vote

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlateEntryJson {
    pub plan_id: String,
    pub precursors: Vec<String>,
    pub depth: usize,
    pub notation_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlateJson {
    pub target: String,
    pub entries: Vec<SlateEntryJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedCandidateJson {
    pub plan_id: String,
    pub precursors: Vec<String>,
    pub depth: usize,
    #[serde(default)]
    pub score: usize,
}

/// Consensus output for one target, best candidate first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedJson {
    pub target: String,
    pub candidates: Vec<RankedCandidateJson>,
}

/// Votes over the first `tta` entries of every slate.
pub fn cmd_vote(slates: &[SlateJson], tta: usize) -> Result<String, CliError> {
    let ranked = slates
        .par_iter()
        .enumerate()
        .map(|(n, s)| {
            if s.entries.is_empty() {
                return Err(CliError::schema(n + 1, "slate has no entries"));
            }
            let target = key_of_smiles(&s.target).map_err(|e| CliError::schema(n + 1, e))?;
            let entries = s
                .entries
                .iter()
                .take(tta)
                .map(|e| {
                    Ok(SlateEntry {
                        plan_id: e.plan_id.clone(),
                        precursors: keys(&e.precursors, n + 1)?,
                        depth: e.depth,
                        notation_id: e.notation_id,
                    })
                })
                .collect::<Result<_, CliError>>()?;
            let slate = CandidateSlate { target, entries };
            Ok(RankedJson {
                target: s.target.clone(),
                candidates: vote(&slate)
                    .into_iter()
                    .map(|r| RankedCandidateJson {
                        plan_id: r.entry.plan_id,
                        precursors: key_strings(&r.entry.precursors),
                        depth: r.entry.depth,
                        score: r.score,
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(write_jsonl(&ranked))
}

// ------------------------------------------------------------------ eval

/// `eval` reads either consensus output (one line per target) or score
/// output (one line per plan, ranked by file order within a route).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CandidateLine {
    Ranked(RankedJson),
    Scored(ScoreLine),
}

pub fn cmd_eval(
    lines: &[CandidateLine],
    records: &[DatasetRecord],
    k_max: usize,
) -> Result<EvalReport, CliError> {
    if k_max == 0 {
        return Err(CliError::Config("kmax must be at least 1".into()));
    }
    let mut by_target: BTreeMap<&CanonicalKey, Vec<usize>> = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        by_target.entry(rec.route.target_key()).or_default().push(i);
    }
    let mut candidates: Vec<Vec<Candidate>> = vec![Vec::new(); records.len()];
    for (n, line) in lines.iter().enumerate() {
        match line {
            CandidateLine::Ranked(r) => {
                let key = key_of_smiles(&r.target).map_err(|e| CliError::schema(n + 1, e))?;
                let Some(ids) = by_target.get(&key) else {
                    return Err(CliError::schema(n + 1, format!("target {} not in dataset", r.target)));
                };
                for c in &r.candidates {
                    let cand = Candidate {
                        precursors: keys(&c.precursors, n + 1)?,
                        depth: c.depth,
                        plan_id: Some(c.plan_id.clone()),
                    };
                    for &id in ids {
                        candidates[id].push(cand.clone());
                    }
                }
            }
            CandidateLine::Scored(s) => {
                let slot = candidates.get_mut(s.route_id).ok_or(CliError::NoSuchRoute {
                    id: s.route_id,
                    len: records.len(),
                })?;
                if let (Some(p), Some(depth)) = (&s.precursors, s.depth) {
                    slot.push(Candidate {
                        precursors: keys(p, n + 1)?,
                        depth,
                        plan_id: Some(s.plan_id.clone()),
                    });
                }
            }
        }
    }
    let eval: Vec<EvalRecord> = records
        .iter()
        .zip(candidates)
        .map(|(rec, candidates)| EvalRecord {
            target: rec.route.target_key().clone(),
            references: rec.references.clone(),
            ref_depth: rec.ref_depth,
            candidates,
        })
        .collect();
    Ok(topk_accuracy(&eval, k_max))
}

// ------------------------------------------------------------------- nld

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NldMode {
    Aligned,
    Canonical,
}

/// Per-depth drift of one route as `depth,reactions,nld` CSV. The aligned
/// rendering starts from `root`, or from the first atom in canonical order.
pub fn cmd_nld_route(
    records: &[DatasetRecord],
    route_id: usize,
    mode: NldMode,
    root: Option<usize>,
) -> Result<String, CliError> {
    let rec = records.get(route_id).ok_or(CliError::NoSuchRoute {
        id: route_id,
        len: records.len(),
    })?;
    let tree = to_tree(&rec.route).map_err(|e| CliError::Align(route_id, e.into()))?;
    let rendered = match mode {
        NldMode::Canonical => canonical_route(&tree),
        NldMode::Aligned => {
            let target = rec.route.target();
            let r0 = root.unwrap_or_else(|| {
                let ranks = canonical_ranks(target);
                (0..target.len()).min_by_key(|&a| ranks[a]).unwrap_or(0)
            });
            align_route(&tree, r0)
                .map_err(|e| CliError::Align(route_id, e))?
                .rendered()
        }
    };
    let mut out = String::from("depth,reactions,nld\n");
    for (depth, count, mean) in nld_by_depth(&rendered) {
        writeln!(out, "{depth},{count},{mean}").unwrap();
    }
    Ok(out)
}

/// Mean drift by line position over an aligned corpus, as
/// `step,renderings,nld` CSV.
pub fn cmd_nld_corpus(entries: &[retroalign::align::CorpusEntry]) -> Result<String, CliError> {
    let mut sums: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for (n, e) in entries.iter().enumerate() {
        let lines = e
            .lines
            .iter()
            .map(|l| l.parse::<ReactionLine>().map_err(|err| CliError::schema(n + 1, err)))
            .collect::<Result<Vec<_>, _>>()?;
        for (k, d) in nld_profile(&lines) {
            let slot = sums.entry(k).or_default();
            slot.0 += 1;
            slot.1 += d;
        }
    }
    let mut out = String::from("step,renderings,nld\n");
    for (k, (count, sum)) in sums {
        writeln!(out, "{k},{count},{}", sum / count as f64).unwrap();
    }
    Ok(out)
}
