use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgGroup, Parser, Subcommand};
use rxguard::engine::{Engine, EngineError};
use rxguard::Config;
use rxguard_core::evaluation::{reviews_to_csv, ExperimentSpec};
use rxguard_core::report::answer_json;
use rxguard_core::store::Store;

#[derive(Debug, Parser)]
#[command(name = "rxguard", version, about = "Prescription suitability checks grounded in SmPC drug labels")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "RXGUARD_STORE", default_value = "rxguard-data")]
    store: PathBuf,
    /// Config file (default: <store>/config.json).
    #[arg(long, global = true, env = "RXGUARD_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create the store layout and a default config.
    Init,
    /// Parse and chunk an SmPC text file.
    IngestSmpc {
        file: PathBuf,
        #[arg(long)]
        medication: String,
    },
    /// Rebuild SmPC vectors.
    #[command(group(ArgGroup::new("scope").required(true).args(["all", "medication"])))]
    Index {
        #[arg(long)]
        all: bool,
        #[arg(long)]
        medication: Option<String>,
    },
    /// Import patient profiles from a JSON file or a directory of them.
    ImportProfiles { path: PathBuf },
    /// Import a ground-truth JSON list.
    ImportTruth { file: PathBuf },
    /// Import a JSON list of clinician reviews.
    ImportReviews { file: PathBuf },
    /// Assess one (patient, medication) pair and print the report.
    Assess {
        #[arg(long)]
        patient: String,
        #[arg(long)]
        medication: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        rag: bool,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Print the prompt an assessment would send, without calling a model.
    Prompt {
        #[arg(long)]
        patient: String,
        #[arg(long)]
        medication: String,
        #[arg(long)]
        rag: bool,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run an experiment spec and write the metrics CSV.
    Evaluate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment against live backends, recording every response.
    RecordFixtures {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Write stored reviews, or their per-cell means, as CSV.
    ExportReviews {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn read_spec(path: &Path) -> Result<ExperimentSpec, EngineError> {
    let text = std::fs::read_to_string(path).map_err(|e| EngineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| EngineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), EngineError> {
    std::fs::write(path, text).map_err(|e| EngineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn open(cli: &Cli) -> Result<Engine, EngineError> {
    let config = Engine::load_config(&cli.store, cli.config.as_deref())?;
    Engine::open(&cli.store, config)
}

async fn run(cli: Cli) -> Result<(), EngineError> {
    match &cli.command {
        Command::Init => {
            Store::init(&cli.store)?;
            let cfg_path = cli.store.join("config.json");
            if !cfg_path.exists() {
                let text = serde_json::to_string_pretty(&Config::default()).expect("config serializes");
                write_file(&cfg_path, &(text + "\n"))?;
            }
            println!("initialized {}", cli.store.display());
        }
        Command::IngestSmpc { file, medication } => {
            let s = open(&cli)?.ingest_smpc(file, medication)?;
            println!("{}: {} sections, {} chunks", s.medication_id, s.sections, s.chunks);
        }
        Command::Index { medication, .. } => {
            let s = open(&cli)?.index(medication.as_deref()).await?;
            println!("indexed {} chunks for {} medications (dim {})", s.chunks, s.medications, s.dim);
        }
        Command::ImportProfiles { path } => {
            let n = open(&cli)?.import_profiles(path)?;
            println!("imported {n} profiles");
        }
        Command::ImportTruth { file } => {
            let n = open(&cli)?.import_truth(file)?;
            println!("imported {n} ground-truth entries");
        }
        Command::ImportReviews { file } => {
            let n = open(&cli)?.import_reviews(file)?;
            println!("imported {n} reviews");
        }
        Command::Assess {
            patient,
            medication,
            model,
            rag,
            k,
        } => {
            let engine = open(&cli)?;
            let a = engine.assess(patient, medication, model, *rag, *k).await?;
            println!("{}", serde_json::to_string_pretty(&a.report).expect("report serializes"));
            if let Some(answer) = answer_json(&a.report) {
                tracing::debug!(%answer, "normalized answer");
            }
        }
        Command::Prompt {
            patient,
            medication,
            rag,
            k,
        } => {
            let engine = open(&cli)?;
            let k = k.unwrap_or(engine.config().retrieval_k);
            let (prompt, _) = engine.prompt_for(patient, medication, *rag, k).await?;
            print!("{}", prompt.rendered);
        }
        Command::Evaluate { spec, out } => {
            let engine = open(&cli)?;
            let outcome = engine.evaluate(&read_spec(spec)?).await?;
            write_file(out, &outcome.table.to_csv()?)?;
            print!("{}", outcome.table.render());
            for f in &outcome.failures {
                eprintln!(
                    "warning: {} rag={} {}/{}: {}",
                    f.model_id, f.rag, f.patient_id, f.medication_id, f.error
                );
            }
            let invalid = outcome.reports.iter().filter(|r| !r.is_valid()).count();
            println!(
                "{} reports ({} invalid), {} failed calls; metrics written to {}",
                outcome.reports.len(),
                invalid,
                outcome.failures.len(),
                out.display()
            );
        }
        Command::RecordFixtures { spec } => {
            let engine = open(&cli)?;
            let (outcome, paths) = engine.record_fixtures(&read_spec(spec)?).await?;
            for p in paths {
                println!("{}", p.display());
            }
            println!("{} responses recorded, {} failed calls", outcome.reports.len(), outcome.failures.len());
        }
        Command::ExportReviews { out, summary } => {
            let engine = open(&cli)?;
            let text = if *summary {
                engine.review_summary(None, None)?.to_csv()?
            } else {
                reviews_to_csv(&engine.reviews()?)?
            };
            write_file(out, &text)?;
            println!("wrote {}", out.display());
        }
        Command::Serve { port, host } => {
            let engine = Arc::new(open(&cli)?);
            rxguard::api::serve(engine, SocketAddr::new(*host, *port))
                .await
                .map_err(|e| EngineError::Io {
                    path: PathBuf::from(format!("{host}:{port}")),
                    message: e.to_string(),
                })?;
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("RXGUARD_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error: code={} {message}", e.code());
            ExitCode::from(1)
        }
    }
}
