use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use tabiic_core::clustering::DEFAULT_SEED;
use tabiic_core::LoadOptions;
use tabiic_server::cli::{self, Format, RunArgs};
use tabiic_server::{parse_delimiter, router, Store};

#[derive(Parser)]
#[command(name = "tabiic", version, about = "Build taxonomies from tabular data by clustering and definition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Ingest {
    /// Field delimiter: one character, or `tab`.
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    /// Comma-separated cell values treated as missing (case-insensitive).
    #[arg(long)]
    missing_markers: Option<String>,
}

impl Ingest {
    fn options(&self) -> LoadOptions {
        let options = LoadOptions { delimiter: self.delimiter, ..LoadOptions::default() };
        match &self.missing_markers {
            Some(list) => options.with_missing_markers(list),
            None => options,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory for session documents; sessions found there are restored.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Clustering seed for new sessions.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Static files (the browser UI) served for paths outside the API.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Replay an action script on a dataset and export the taxonomy.
    Run {
        dataset: PathBuf,
        script: PathBuf,
        /// Output file; the export goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "owl")]
        format: Format,
        /// Seed used when the script does not set one.
        #[arg(long)]
        seed: Option<u64>,
        /// Ontology IRI for OWL output.
        #[arg(long)]
        iri: Option<String>,
        #[command(flatten)]
        ingest: Ingest,
    },
    /// Print column kinds, row counts and per-column statistics.
    Stats {
        dataset: PathBuf,
        #[command(flatten)]
        ingest: Ingest,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Serve { port, host, data_dir, seed, ui_dir } => serve(SocketAddr::new(host, port), data_dir, seed, ui_dir),
        Command::Run { dataset, script, out, format, seed, iri, ingest } => {
            let args = RunArgs { dataset, script, format, seed, iri, options: ingest.options() };
            match cli::run(&args) {
                Ok(result) => match out {
                    Some(path) => match std::fs::write(&path, &result.export) {
                        Ok(()) => {
                            print!("{}", cli::outline(result.session.taxonomy()));
                            ExitCode::SUCCESS
                        }
                        Err(e) => fail(1, &format!("{}: {e}", path.display())),
                    },
                    None => {
                        print!("{}", result.export);
                        ExitCode::SUCCESS
                    }
                },
                Err(e) => fail(e.exit_code, &e.message),
            }
        }
        Command::Stats { dataset, ingest } => match cli::stats(&dataset, &ingest.options()) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e.exit_code, &e.message),
        },
    }
}

fn fail(code: i32, message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code as u8)
}

fn serve(addr: SocketAddr, data_dir: Option<PathBuf>, seed: u64, ui_dir: Option<PathBuf>) -> ExitCode {
    let store = match Store::new(data_dir, seed) {
        Ok(store) => Arc::new(store),
        Err(e) => return fail(1, &format!("data directory: {e}")),
    };
    let (restored, failed) = store.recover();
    if !restored.is_empty() {
        eprintln!("restored {} session(s)", restored.len());
    }
    for (dir, reason) in failed {
        eprintln!("warning: could not restore {}: {reason}", dir.display());
    }
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => return fail(1, &e.to_string()),
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(addr).await {
            Ok(l) => l,
            Err(e) => return fail(1, &format!("cannot listen on {addr}: {e}")),
        };
        eprintln!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match axum::serve(listener, router(store, ui_dir)).with_graceful_shutdown(shutdown).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(1, &e.to_string()),
        }
    })
}
