#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use retroalign::align::{CorpusEntry, ReactionLine};
use retroalign::reward::{format_plan, Delimiters};
use retroalign::route::{parse_dataset, DatasetRecord, RecordJson};
use retroalign_cli::{read_jsonl, PlanLine};

pub fn retroalign_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../retroalign/tests/data")
        .join(name)
}

pub fn synthetic(seed: u64, n: usize) -> Vec<RecordJson> {
    retroalign_testkit::random_dataset(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

pub fn records(raw: &[RecordJson]) -> Vec<DatasetRecord> {
    parse_dataset(&serde_json::to_string(raw).unwrap()).unwrap()
}

/// One SMILES per line: every leaf of every route.
pub fn stock_text(records: &[DatasetRecord]) -> String {
    let leaves: BTreeSet<String> = records
        .iter()
        .flat_map(|r| r.route.leaves())
        .map(|k| k.as_str().to_owned())
        .collect();
    leaves.into_iter().map(|s| s + "\n").collect()
}

/// Writes `dataset.json` and `stock.smi` into `dir`.
pub fn write_inputs(dir: &Path, raw: &[RecordJson]) -> (PathBuf, PathBuf) {
    let dataset = dir.join("dataset.json");
    let stock = dir.join("stock.smi");
    std::fs::write(&dataset, serde_json::to_string_pretty(raw).unwrap()).unwrap();
    std::fs::write(&stock, stock_text(&records(raw))).unwrap();
    (dataset, stock)
}

/// Turns every aligned rendering into a plan with an empty reasoning
/// segment, the way a perfect planner would answer.
pub fn plans_from_corpus(corpus: &str) -> Vec<PlanLine> {
    let entries: Vec<CorpusEntry> = read_jsonl(corpus).unwrap();
    entries
        .into_iter()
        .map(|e| {
            let lines: Vec<ReactionLine> = e.lines.iter().map(|l| l.parse().unwrap()).collect();
            PlanLine {
                route_id: e.route_id,
                plan_id: format!("{}@{}", e.route_id, e.target_root),
                text: format_plan("", &lines, &Delimiters::default()),
            }
        })
        .collect()
}
