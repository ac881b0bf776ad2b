//! JSON route datasets and newline-delimited stock files.
//!
//! A dataset file is a JSON array of records:
//!
//! ```json
//! [{"target": "[CH3:1][OH:2]",
//!   "reactions": [{"product": "[CH3:1][OH:2]", "precursors": ["[CH3:1]I", "[OH2:2]"]}],
//!   "references": [["CI", "O"]],
//!   "ref_depth": 1}]
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{single_molecule, Reaction, Route, RouteError};
use crate::smiles::{key_of_smiles, CanonicalKey, SmilesError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema error{}: {message}", at(*.index))]
    Schema {
        index: Option<usize>,
        message: String,
    },
    #[error("record {index}, {field}: {source}")]
    Smiles {
        index: usize,
        field: String,
        source: RouteError,
    },
    #[error("stock file {0} has no entries")]
    EmptyStock(PathBuf),
    #[error("stock line {line}: {source}")]
    StockSmiles { line: usize, source: SmilesError },
}

fn at(index: Option<usize>) -> String {
    index.map(|i| format!(" in record {i}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionJson {
    pub product: String,
    pub precursors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordJson {
    pub target: String,
    pub reactions: Vec<ReactionJson>,
    pub references: Vec<Vec<String>>,
    pub ref_depth: usize,
}

/// A route together with its accepted starting-material sets.
#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub route: Route,
    pub references: Vec<BTreeSet<CanonicalKey>>,
    pub ref_depth: usize,
    raw: RecordJson,
}

impl DatasetRecord {
    pub fn from_json(raw: RecordJson, index: usize) -> Result<Self, DatasetError> {
        let smiles_err = |field: String| move |source: RouteError| DatasetError::Smiles {
            index,
            field,
            source,
        };
        let target = single_molecule(&raw.target).map_err(smiles_err("target".into()))?;
        let mut reactions = Vec::with_capacity(raw.reactions.len());
        for (r, rx) in raw.reactions.iter().enumerate() {
            let product =
                single_molecule(&rx.product).map_err(smiles_err(format!("reactions[{r}].product")))?;
            let precursors = rx
                .precursors
                .iter()
                .enumerate()
                .map(|(p, s)| {
                    single_molecule(s)
                        .map_err(smiles_err(format!("reactions[{r}].precursors[{p}]")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let reaction = Reaction::new(product, precursors)
                .map_err(smiles_err(format!("reactions[{r}]")))?;
            reactions.push(reaction);
        }
        let references = raw
            .references
            .iter()
            .enumerate()
            .map(|(j, set)| {
                set.iter()
                    .map(|s| {
                        key_of_smiles(s).map_err(|e| DatasetError::Smiles {
                            index,
                            field: format!("references[{j}]"),
                            source: e.into(),
                        })
                    })
                    .collect::<Result<BTreeSet<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DatasetRecord {
            route: Route::new(target, reactions),
            references,
            ref_depth: raw.ref_depth,
            raw,
        })
    }

    pub fn raw(&self) -> &RecordJson {
        &self.raw
    }
}

/// Parses dataset JSON text. Records are converted in parallel; output
/// order always matches input order.
pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>, DatasetError> {
    parse_records(text)?.into_iter().collect()
}

/// Like [`parse_dataset`], but a malformed record only fails itself. The
/// outer error is for text that is not an array of records at all.
pub fn parse_records(text: &str) -> Result<Vec<Result<DatasetRecord, DatasetError>>, DatasetError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| DatasetError::Schema {
        index: None,
        message: e.to_string(),
    })?;
    let serde_json::Value::Array(items) = value else {
        return Err(DatasetError::Schema {
            index: None,
            message: "top level must be an array of records".into(),
        });
    };
    Ok(items
        .into_par_iter()
        .enumerate()
        .map(|(index, item)| {
            let raw: RecordJson =
                serde_json::from_value(item).map_err(|e| DatasetError::Schema {
                    index: Some(index),
                    message: e.to_string(),
                })?;
            DatasetRecord::from_json(raw, index)
        })
        .collect())
}

impl DatasetError {
    /// The SMILES error behind a record failure, if that is what it was.
    pub fn smiles_error(&self) -> Option<&SmilesError> {
        match self {
            DatasetError::Smiles {
                source: RouteError::Smiles(e),
                ..
            } => Some(e),
            DatasetError::StockSmiles { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub fn ingest_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text)
}

/// Serializes records from their original SMILES text, so that writing an
/// ingested dataset reproduces the written bytes.
pub fn dataset_to_string(records: &[DatasetRecord]) -> String {
    let raw: Vec<&RecordJson> = records.iter().map(|r| &r.raw).collect();
    let mut text = serde_json::to_string_pretty(&raw).expect("dataset records serialize");
    text.push('\n');
    text
}

pub fn write_dataset(records: &[DatasetRecord], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(records)).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Purchasable starting materials, held as canonical keys.
#[derive(Debug, Clone, Default)]
pub struct StockSet {
    keys: HashSet<CanonicalKey>,
    source_path: Option<PathBuf>,
}

impl StockSet {
    /// Reads one SMILES per line (first whitespace-separated field). Blank
    /// lines and lines starting with `#` are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut keys = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let Some(smiles) = line.split_whitespace().next() else {
                continue;
            };
            if smiles.starts_with('#') {
                continue;
            }
            let key = key_of_smiles(smiles)
                .map_err(|source| DatasetError::StockSmiles { line: n + 1, source })?;
            keys.insert(key);
        }
        if keys.is_empty() {
            return Err(DatasetError::EmptyStock(path.to_path_buf()));
        }
        Ok(StockSet {
            keys,
            source_path: Some(path.to_path_buf()),
        })
    }

    pub fn from_smiles<'a>(smiles: impl IntoIterator<Item = &'a str>) -> Result<Self, SmilesError> {
        let keys = smiles
            .into_iter()
            .map(key_of_smiles)
            .collect::<Result<HashSet<_>, _>>()?;
        Ok(StockSet {
            keys,
            source_path: None,
        })
    }

    pub fn from_keys(keys: impl IntoIterator<Item = CanonicalKey>) -> Self {
        StockSet {
            keys: keys.into_iter().collect(),
            source_path: None,
        }
    }

    pub fn contains(&self, key: &CanonicalKey) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn source_path(&self) -> Option<&Path> {
        self.source_path.as_deref()
    }
}
