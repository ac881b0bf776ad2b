use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retroalign::align::CorpusEntry;
use retroalign::route::{ingest_dataset, parse_records, DatasetRecord, StockSet};
use retroalign_cli::{
    cmd_align, cmd_eval, cmd_ingest, cmd_nld_corpus, cmd_nld_route, cmd_score, cmd_vote,
    read_jsonl, CliError, NldMode, PipelineConfig, EXIT_OK, EXIT_SCHEMA, EXIT_VALIDATION,
};

#[derive(Parser)]
#[command(name = "retroalign", version, about = "Route alignment, scoring and evaluation pipelines")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Route dataset (JSON array).
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every route against the stock set.
    Ingest {
        #[arg(long)]
        stock: Option<PathBuf>,
    },
    /// Render each route from several sampled roots.
    Align {
        #[arg(long)]
        fold: Option<usize>,
    },
    /// Score generated plans against the dataset references.
    Score {
        /// JSON lines of {route_id, plan_id, text}.
        #[arg(long)]
        plans: PathBuf,
        /// Pay the format reward only for properly delimited plans.
        #[arg(long)]
        strict_delimiters: bool,
    },
    /// Rank candidate slates by precursor-set consensus.
    Vote {
        #[arg(long)]
        slates: PathBuf,
        #[arg(long)]
        tta: Option<usize>,
    },
    /// Top-k exact-match accuracy of ranked or scored candidates.
    Eval {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, default_value_t = 5)]
        kmax: usize,
        /// Also write the depth buckets as CSV.
        #[arg(long)]
        buckets_csv: Option<PathBuf>,
        /// Print the aligned-column table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Edit-distance drift of the precursor side from the target.
    Nld {
        /// Profile one dataset route by depth.
        #[arg(long, conflicts_with = "corpus")]
        route_id: Option<usize>,
        /// Average an aligned corpus by step position.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = NldMode::Aligned)]
        mode: NldMode,
        /// Target atom to root the aligned rendering at.
        #[arg(long)]
        root: Option<usize>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dataset(cfg: &PipelineConfig) -> Result<Vec<DatasetRecord>, CliError> {
    Ok(ingest_dataset(cfg.dataset_path()?)?)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = match &cli.global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let g = &cli.global;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(w) = g.workers {
        cfg.workers = w;
    }
    if let Some(d) = &g.dataset {
        cfg.dataset = Some(d.clone());
    }
    match &cli.command {
        Command::Ingest { stock: Some(s) } => cfg.stock = Some(s.clone()),
        Command::Align { fold: Some(f) } => cfg.fold = *f,
        Command::Score {
            strict_delimiters: true,
            ..
        } => cfg.reward.strict_delimiters = true,
        Command::Vote { tta: Some(t), .. } => cfg.tta = *t,
        _ => {}
    }
    cfg.validate()?;
    let out = g.out.as_deref();
    let cfg = &cfg;

    cfg.install(|| match &cli.command {
        Command::Ingest { .. } => {
            let records = parse_records(&read(cfg.dataset_path()?)?)?;
            let stock_path = cfg
                .stock
                .as_deref()
                .ok_or_else(|| CliError::Config("no stock file given".into()))?;
            let stock = StockSet::load(stock_path)?;
            let summary = cmd_ingest(&records, &stock);
            if summary.passed() {
                println!("{summary}");
                Ok(EXIT_OK)
            } else {
                eprintln!("{summary}");
                Ok(EXIT_VALIDATION)
            }
        }
        Command::Align { .. } => {
            let records = dataset(cfg)?;
            emit(out, &cmd_align(&records, cfg.fold, cfg.seed)?)?;
            Ok(EXIT_OK)
        }
        Command::Score { plans, .. } => {
            let records = dataset(cfg)?;
            let plans = read_jsonl(&read(plans)?)?;
            let (text, summary) = cmd_score(&plans, &records, &cfg.reward, &cfg.delimiters)?;
            emit(out, &text)?;
            eprintln!(
                "{} plans, {} parsable, mean reward {}",
                summary.plans, summary.parsable, summary.mean_reward
            );
            Ok(EXIT_OK)
        }
        Command::Vote { slates, .. } => {
            let slates = read_jsonl(&read(slates)?)?;
            emit(out, &cmd_vote(&slates, cfg.tta)?)?;
            Ok(EXIT_OK)
        }
        Command::Eval {
            candidates,
            kmax,
            buckets_csv,
            table,
        } => {
            let records = dataset(cfg)?;
            let lines = read_jsonl(&read(candidates)?)?;
            let report = cmd_eval(&lines, &records, *kmax)?;
            let text = if *table {
                report.to_table()
            } else {
                serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
            };
            emit(out, &text)?;
            if let Some(p) = buckets_csv {
                emit(Some(p), &report.buckets_csv())?;
            }
            Ok(EXIT_OK)
        }
        Command::Nld {
            route_id,
            corpus,
            mode,
            root,
        } => {
            let csv = match (route_id, corpus) {
                (Some(id), None) => cmd_nld_route(&dataset(cfg)?, *id, *mode, *root)?,
                (None, Some(path)) => {
                    let entries: Vec<CorpusEntry> = read_jsonl(&read(path)?)?;
                    cmd_nld_corpus(&entries)?
                }
                _ => return Err(CliError::Config("give --route-id or --corpus".into())),
            };
            emit(out, &csv)?;
            Ok(EXIT_OK)
        }
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SCHEMA as u8)
        }
    }
}
