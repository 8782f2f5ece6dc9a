//! `bench`: run campaigns, rebuild reports and recompute metrics.
//!
//! Every command talks to the HTTP service. Without `--server` an embedded
//! instance is started on a loopback port for the duration of the command.
//!
//! Exit codes: 0 success, 1 other failure, 2 config error, 3 fault threshold
//! exceeded by at least one algorithm.

use std::io::{IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use flybench_client::{CampaignState, Client, ClientError, ErrorKind};
use flybench_core::campaign::Summary;

const CONFIG_ERROR: u8 = 2;
const FAULT_THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(name = "bench", version, about = "Obstacle-avoidance benchmark for vision-based drones")]
struct Cli {
    /// Use a running service instead of an embedded one.
    #[arg(long, global = true, env = "BENCH_SERVER")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) the campaign described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long, env = "BENCH_OUT")]
        out: Option<PathBuf>,
        /// No progress on stderr.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Write report tables and plots into <results-dir>/report.
    Report { results_dir: PathBuf },
    /// Recompute every metric from the stored trajectories.
    Metrics { results_dir: PathBuf },
    /// Print the agent wire protocol.
    ProtocolDocs,
    /// Run the service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Serve a built-in algorithm as an external agent on stdin/stdout.
    Agent { builtin: String },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        let code = if e.kind() == Some(ErrorKind::Config) { CONFIG_ERROR } else { 1 };
        Failure { code, message: e.to_string() }
    }
}

fn fail(message: impl ToString) -> Failure {
    Failure { code: 1, message: message.to_string() }
}

fn absolute(p: &Path) -> Result<PathBuf, Failure> {
    std::path::absolute(p).map_err(|e| fail(format!("{}: {e}", p.display())))
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("BENCH_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match dispatch(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bench: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

async fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Serve { addr } => {
            let (local, task) = flybench_server::spawn(addr).await.map_err(|e| fail(format!("bind {addr}: {e}")))?;
            eprintln!("listening on http://{local}");
            task.await.map_err(fail)?.map_err(fail)
        }
        Command::Agent { builtin } => tokio::task::spawn_blocking(move || {
            let mut alg = flybench_core::bridge::builtin(&builtin).map_err(fail)?;
            flybench_core::bridge::agent::serve(std::io::stdin().lock(), std::io::stdout().lock(), alg.as_mut()).map(|_| ()).map_err(fail)
        })
        .await
        .map_err(fail)?,
        command => {
            let client = connect(cli.server).await?;
            match command {
                Command::Run { config, out, quiet } => run(&client, &config, out, quiet).await,
                Command::Report { results_dir } => report(&client, &results_dir).await,
                Command::Metrics { results_dir } => metrics(&client, &results_dir).await,
                Command::ProtocolDocs => {
                    print!("{}", client.protocol_docs().await?);
                    Ok(())
                }
                Command::Serve { .. } | Command::Agent { .. } => unreachable!(),
            }
        }
    }
}

async fn connect(server: Option<String>) -> Result<Client, Failure> {
    let url = match server {
        Some(url) => url,
        None => {
            let (addr, _task) = flybench_server::spawn(([127, 0, 0, 1], 0).into()).await.map_err(|e| fail(format!("embedded service: {e}")))?;
            format!("http://{addr}")
        }
    };
    Ok(Client::new(&url)?)
}

async fn run(client: &Client, config: &Path, out: Option<PathBuf>, quiet: bool) -> Result<(), Failure> {
    let text = std::fs::read_to_string(config).map_err(|e| Failure { code: CONFIG_ERROR, message: format!("{}: {e}", config.display()) })?;
    let out = out.map(|p| absolute(&p)).transpose()?;
    let started = client.start_campaign(text, out).await?;
    let live = !quiet && std::io::stderr().is_terminal();
    let status = client
        .wait_campaign(started.id, Duration::from_millis(200), |s| {
            if live {
                eprint!("\r{} / {} trials ({} already done)", s.done, s.total, s.skipped);
                let _ = std::io::stderr().flush();
            }
        })
        .await?;
    if live {
        eprintln!();
    }
    match status.state {
        CampaignState::Succeeded => {}
        _ => {
            let error = status.error.expect("failed campaign carries an error");
            let code = if error.kind == ErrorKind::Config { CONFIG_ERROR } else { 1 };
            return Err(Failure { code, message: error.message });
        }
    }
    if let Some(summary) = &status.summary {
        print_summary(summary);
    }
    println!("results: {}", status.output_dir.display());
    if !status.over_fault_threshold.is_empty() {
        return Err(Failure { code: FAULT_THRESHOLD, message: format!("fault threshold exceeded by {}", status.over_fault_threshold.join(", ")) });
    }
    Ok(())
}

async fn report(client: &Client, dir: &Path) -> Result<(), Failure> {
    let reply = client.report(absolute(dir)?).await?;
    for f in &reply.files {
        println!("{}", f.display());
    }
    Ok(())
}

async fn metrics(client: &Client, dir: &Path) -> Result<(), Failure> {
    let reply = client.recompute_metrics(absolute(dir)?).await?;
    print_summary(&reply.summary);
    println!("checked {} trials, {} mismatches", reply.checked, reply.mismatches.len());
    for m in &reply.mismatches {
        println!("mismatch: {m}");
    }
    if reply.mismatches.is_empty() {
        Ok(())
    } else {
        Err(fail("recomputed metrics differ from the stored values"))
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

fn print_summary(s: &Summary) {
    println!("{}: {} maps x {} trials, seed {}", s.name, s.maps, s.trials_per_map, s.master_seed);
    println!("{:<16} {:>6} {:>6} {:>6} {:>8} {:>8} {:>9} {:>8} {:>7}", "algorithm", "trials", "SR", "faults", "PO %", "EO", "AGV m/s", "MP %", "rho");
    for a in &s.algorithms {
        println!(
            "{:<16} {:>6} {:>6} {:>6} {:>8} {:>8} {:>9} {:>8} {:>7}",
            a.name,
            a.trials,
            opt(a.sr, 3),
            a.fault,
            opt(a.po.mean, 1),
            opt(a.eo.mean, 2),
            opt(a.agv.mean, 3),
            opt(a.mp.mean, 1),
            opt(a.spearman_trav_sr, 3)
        );
    }
}
