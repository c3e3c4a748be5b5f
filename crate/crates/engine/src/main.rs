use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use precedent_core::explainer::LimeConfig;
use precedent_core::synth::SynthConfig;
use precedent_engine::api::Api;
use precedent_engine::commands::{self, TrainOptions};
use precedent_engine::store::ProjectStore;
use precedent_engine::{server, EngineError};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "engine",
    version,
    about = "Explicit and potential binding-precedent citations"
)]
struct Cli {
    /// Project store directory.
    #[arg(long, global = true, env = "ENGINE_STORE", default_value = "store")]
    store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic corpus (documents.jsonl, precedents.jsonl).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        per_class: usize,
        #[arg(long, default_value_t = 600)]
        unlabeled: usize,
    },
    /// Validate, deduplicate and store a corpus.
    Ingest {
        /// Directory with documents.jsonl and precedents.jsonl, or the documents file.
        path: PathBuf,
        /// Precedents file, when `path` is a documents file.
        #[arg(long)]
        precedents: Option<PathBuf>,
        /// Exit with status 3 if any input line was rejected.
        #[arg(long)]
        strict: bool,
    },
    /// Fit the embedding and the calibrated classifier.
    Train {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = precedent_core::embedding::DEFAULT_K)]
        k: usize,
        /// Comma-separated reg_C values.
        #[arg(long, value_delimiter = ',', default_values_t = precedent_core::classifier::DEFAULT_GRID.to_vec())]
        grid: Vec<f64>,
        #[arg(long, default_value_t = commands::DEFAULT_CLASSES)]
        classes: usize,
        #[arg(long)]
        per_class: Option<usize>,
    },
    /// Build the citation index at confidence threshold `--tc`.
    Infer {
        #[arg(long, default_value_t = 0.95)]
        tc: f64,
    },
    /// Sentence-level explanation of one classification.
    Explain {
        doc_id: String,
        /// Precedent to explain; defaults to the predicted one.
        #[arg(long)]
        bp: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Re-evaluate the stored model on its validation and test sets.
    Eval,
    /// Serve the read-only JSON API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn print<T: Serialize>(value: &T) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: Cli) -> Result<ExitCode, EngineError> {
    let store = ProjectStore::new(&cli.store);
    match cli.command {
        Command::Synth {
            out,
            seed,
            per_class,
            unlabeled,
        } => {
            let n = commands::synth(
                &out,
                &SynthConfig {
                    seed,
                    docs_per_class: per_class,
                    unlabeled,
                    ..SynthConfig::default()
                },
            )?;
            eprintln!("wrote {n} documents to {}", out.display());
        }
        Command::Ingest {
            path,
            precedents,
            strict,
        } => {
            let report = commands::ingest(&store, &path, precedents.as_deref())?;
            print(&report);
            if strict && !report.load.rejected.is_empty() {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Train {
            seed,
            k,
            grid,
            classes,
            per_class,
        } => {
            let summary = commands::train(
                &store,
                &TrainOptions {
                    seed,
                    k,
                    grid,
                    classes,
                    per_class,
                },
            )?;
            print(&summary);
        }
        Command::Infer { tc } => print(&commands::infer(&store, tc)?),
        Command::Explain {
            doc_id,
            bp,
            seed,
            samples,
        } => {
            let cfg = LimeConfig {
                seed,
                n_samples: samples,
                ..LimeConfig::default()
            };
            print(&commands::explain_document(&store, &doc_id, bp, &cfg)?);
        }
        Command::Eval => print(&commands::eval(&store)?),
        Command::Serve { bind } => {
            let api = Api::open(&store)?;
            tokio::runtime::Runtime::new()
                .map_err(EngineError::Serve)?
                .block_on(server::serve(api, bind))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                EngineError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
