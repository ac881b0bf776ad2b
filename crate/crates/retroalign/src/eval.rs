//! Top-k exact-match evaluation and textual drift along a route.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::align::{ReactionLine, RenderedRoute};
use crate::smiles::CanonicalKey;

/// A prediction succeeds when its starting-material set equals one of the
/// references and its route is no deeper than the reference route.
pub fn is_success(
    candidate: &BTreeSet<CanonicalKey>,
    depth: usize,
    references: &[BTreeSet<CanonicalKey>],
    ref_depth: usize,
) -> bool {
    depth <= ref_depth && references.iter().any(|r| r == candidate)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub precursors: BTreeSet<CanonicalKey>,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalRecord {
    pub target: CanonicalKey,
    pub references: Vec<BTreeSet<CanonicalKey>>,
    pub ref_depth: usize,
    /// Best first.
    pub candidates: Vec<Candidate>,
}

impl EvalRecord {
    /// 1-based rank of the first successful candidate.
    pub fn first_hit(&self) -> Option<usize> {
        self.candidates
            .iter()
            .position(|c| is_success(&c.precursors, c.depth, &self.references, self.ref_depth))
            .map(|i| i + 1)
    }
}

/// Upper bounds of the closed depth buckets; everything deeper than the last
/// bound falls into one open bucket.
pub const DEFAULT_DEPTH_BOUNDS: [usize; 4] = [1, 2, 3, 4];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthBucket {
    pub label: String,
    pub records: usize,
    pub top1_hits: usize,
    pub top1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub records: usize,
    /// `hits[k - 1]` records have a success within the first `k` candidates.
    pub hits: Vec<usize>,
    pub top_k: Vec<f64>,
    pub depth_buckets: Vec<DepthBucket>,
}

fn ratio(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

pub fn topk_accuracy(records: &[EvalRecord], k_max: usize) -> EvalReport {
    topk_accuracy_with(records, k_max, &DEFAULT_DEPTH_BOUNDS)
}

/// Cumulative top-k accuracy for `k = 1..=k_max`, plus top-1 accuracy per
/// reference-depth bucket.
pub fn topk_accuracy_with(records: &[EvalRecord], k_max: usize, bounds: &[usize]) -> EvalReport {
    assert!(k_max >= 1, "k_max must be at least 1");
    let firsts: Vec<(Option<usize>, usize)> = records
        .par_iter()
        .map(|r| (r.first_hit(), r.ref_depth))
        .collect();

    let mut hits = vec![0; k_max];
    let mut buckets = vec![(0usize, 0usize); bounds.len() + 1];
    for &(first, depth) in &firsts {
        if let Some(rank) = first {
            for h in hits.iter_mut().skip(rank - 1) {
                *h += 1;
            }
        }
        let b = bounds.iter().position(|&ub| depth <= ub).unwrap_or(bounds.len());
        buckets[b].0 += 1;
        if first == Some(1) {
            buckets[b].1 += 1;
        }
    }

    let depth_buckets = buckets
        .into_iter()
        .enumerate()
        .map(|(i, (n, h))| DepthBucket {
            label: bucket_label(bounds, i),
            records: n,
            top1_hits: h,
            top1: ratio(h, n),
        })
        .collect();
    EvalReport {
        records: records.len(),
        top_k: hits.iter().map(|&h| ratio(h, records.len())).collect(),
        hits,
        depth_buckets,
    }
}

fn bucket_label(bounds: &[usize], i: usize) -> String {
    match i {
        _ if i == bounds.len() => match bounds.last() {
            Some(b) => format!(">={}", b + 1),
            None => "all".to_string(),
        },
        0 => format!("<={}", bounds[0]),
        _ if bounds[i] == bounds[i - 1] + 1 => bounds[i].to_string(),
        _ => format!("{}-{}", bounds[i - 1] + 1, bounds[i]),
    }
}

impl EvalReport {
    /// Aligned-column text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "records  {}", self.records).unwrap();
        writeln!(out, "{:<8} {:>8} {:>8}", "k", "hits", "acc").unwrap();
        for (k, (h, a)) in self.hits.iter().zip(&self.top_k).enumerate() {
            writeln!(out, "{:<8} {:>8} {:>8.4}", format!("top-{}", k + 1), h, a).unwrap();
        }
        writeln!(out, "{:<8} {:>8} {:>8}", "depth", "records", "top-1").unwrap();
        for b in &self.depth_buckets {
            writeln!(out, "{:<8} {:>8} {:>8.4}", b.label, b.records, b.top1).unwrap();
        }
        out
    }

    /// Depth buckets as CSV.
    pub fn buckets_csv(&self) -> String {
        let mut out = String::from("depth,records,top1_hits,top1\n");
        for b in &self.depth_buckets {
            writeln!(out, "{},{},{},{}", b.label, b.records, b.top1_hits, b.top1).unwrap();
        }
        out
    }
}

/// Unit-cost edit distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (up + 1).min(row[j] + 1).min(diag + usize::from(ca != cb));
            diag = up;
        }
    }
    row[b.len()]
}

/// Edit distance divided by the longer length; 0 for two empty strings.
pub fn nld(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        0.0
    } else {
        levenshtein(a, b) as f64 / longest as f64
    }
}

/// `(k, NLD(k))` for every step, comparing the first product (the target)
/// with the whole precursor side of step `k`.
pub fn nld_profile(lines: &[ReactionLine]) -> Vec<(usize, f64)> {
    let Some(first) = lines.first() else {
        return Vec::new();
    };
    lines
        .iter()
        .enumerate()
        .map(|(k, l)| (k + 1, nld(&first.product, &l.rhs())))
        .collect()
}

/// Mean NLD per reaction depth: `(depth, steps at that depth, mean NLD)`,
/// ascending by depth. On a branched route several reactions share a depth.
pub fn nld_by_depth(route: &RenderedRoute) -> Vec<(usize, usize, f64)> {
    let mut acc: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for ((_, v), &d) in nld_profile(&route.lines).into_iter().zip(&route.depths) {
        let e = acc.entry(d).or_default();
        e.0 += 1;
        e.1 += v;
    }
    acc.into_iter()
        .map(|(d, (n, sum))| (d, n, sum / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::key_of_smiles;

    #[test]
    fn depth_profile_averages_siblings() {
        let route = RenderedRoute {
            lines: ["ab>>ab", "ab>>cd", "ab>>ad"].iter().map(|l| l.parse().unwrap()).collect(),
            depths: vec![1, 2, 2],
        };
        assert_eq!(nld_by_depth(&route), vec![(1, 1, 0.0), (2, 2, 0.75)]);
    }

    fn set(smiles: &[&str]) -> BTreeSet<CanonicalKey> {
        smiles.iter().map(|s| key_of_smiles(s).unwrap()).collect()
    }

    fn record(ref_depth: usize, hit_at: Option<usize>, n: usize) -> EvalRecord {
        let good = set(&["CCO", "CI"]);
        let bad = set(&["CCN"]);
        EvalRecord {
            target: key_of_smiles("CCOC").unwrap(),
            references: vec![good.clone()],
            ref_depth,
            candidates: (1..=n)
                .map(|r| Candidate {
                    precursors: if Some(r) == hit_at { good.clone() } else { bad.clone() },
                    depth: ref_depth,
                    plan_id: None,
                })
                .collect(),
        }
    }

    #[test]
    fn success_rules() {
        let refs = vec![set(&["CCO", "CI"])];
        assert!(is_success(&set(&["OCC", "IC"]), 2, &refs, 2));
        assert!(!is_success(&set(&["CCO", "CI"]), 3, &refs, 2));
        assert!(!is_success(&set(&["CCO", "CI", "O"]), 1, &refs, 2));
        assert!(!is_success(&set(&["CCO", "CI"]), 1, &[], 2));
    }

    #[test]
    fn hit_at_rank_three() {
        let report = topk_accuracy(&[record(2, Some(3), 5)], 5);
        assert_eq!(report.top_k, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_inputs_give_zero() {
        let report = topk_accuracy(&[], 3);
        assert_eq!(report.top_k, vec![0.0; 3]);
        let report = topk_accuracy(&[record(1, None, 0)], 2);
        assert_eq!(report.top_k, vec![0.0; 2]);
    }

    #[test]
    fn buckets_split_by_reference_depth() {
        let records: Vec<_> = [0, 1, 2, 3, 4, 5, 9]
            .iter()
            .map(|&d| record(d, Some(1), 1))
            .collect();
        let report = topk_accuracy(&records, 1);
        let labels: Vec<&str> = report.depth_buckets.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["<=1", "2", "3", "4", ">=5"]);
        let counts: Vec<usize> = report.depth_buckets.iter().map(|b| b.records).collect();
        assert_eq!(counts, [2, 1, 1, 1, 2]);
        assert!(report.to_table().contains(">=5"));
        assert!(report.buckets_csv().starts_with("depth,records"));
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(levenshtein("CCO", "CCO"), 0);
        assert_eq!(levenshtein("ab", "b"), 1);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(nld("", ""), 0.0);
        assert_eq!(nld("ab", "cdcd"), 1.0);
    }

    #[test]
    fn identity_step_has_zero_drift() {
        let line: ReactionLine = "CCO>>CCO".parse().unwrap();
        assert_eq!(nld_profile(&[line]), vec![(1, 0.0)]);
        assert!(nld_profile(&[]).is_empty());
    }
}
