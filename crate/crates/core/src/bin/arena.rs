use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::Value;

use arena_core::aal::{serve, AccessPolicy, Listen, TimeMode};
use arena_core::eval::{aggregate, summary_csv, RunOutcome, SloConfig, SUMMARY_COLUMNS};
use arena_core::incident::Bindings;
use arena_core::orchestrator::{
    describe, list_incidents, load_report, replay_and_check, resolve_incident, smoke_matrix,
    write_run, ArtifactError, LookupError, Prepared, SmokeStatus, SEED_ENV,
};

const EXIT_USAGE: u8 = 1;
const EXIT_ABORTED: u8 = 2;
const EXIT_INTEGRITY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "arena",
    version,
    about = "Network incident arena for troubleshooting agents"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List shipped incidents and templates.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Show a resolved incident; ground truth stays hidden without --reveal.
    Describe {
        name: String,
        #[arg(long)]
        reveal: bool,
    },
    /// Run one incident and serve the tool gateway to an agent.
    Run {
        /// Shipped name, template name or path to an incident file.
        #[arg(long)]
        incident: String,
        /// Access policy JSON; permissive when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        overwrite: bool,
        /// Virtual ms per idle wall ms, on top of per-tool costs.
        #[arg(long)]
        paced: Option<f64>,
        /// stdio, tcp:PORT or http:PORT.
        #[arg(long, default_value = "stdio")]
        listen: Listen,
        /// Play NDJSON requests from a file instead of listening.
        #[arg(long, conflicts_with = "listen")]
        transcript: Option<PathBuf>,
        /// Template slot values, in order.
        #[arg(long = "bind", num_args = 1..)]
        bind: Vec<String>,
        /// Fill template slots by seeded choice.
        #[arg(long, conflicts_with = "bind")]
        template_seed: Option<u64>,
        #[arg(long, default_value_t = 50.0)]
        max_p95_ms: f64,
        #[arg(long, default_value_t = 0.01)]
        max_loss: f64,
        /// Seconds to wait for the first request before aborting.
        #[arg(long, default_value_t = 300)]
        grace_s: u64,
    },
    /// Re-evaluate a run directory and check it against its report.
    Replay { dir: PathBuf },
    /// Inject every shipped incident, check liveness and perfect grading.
    Smoke {
        #[arg(long)]
        json: bool,
    },
    /// Summarize run directories.
    Aggregate {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Aborted,
    Integrity(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<ArtifactError> for Failure {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::Exists(_) => Failure::Usage(e.into()),
            _ => Failure::Integrity(e.into()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Aborted) => ExitCode::from(EXIT_ABORTED),
        Err(Failure::Integrity(e)) => {
            eprintln!("integrity failure: {e:#}");
            ExitCode::from(EXIT_INTEGRITY)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::List { json } => {
            let entries = list_incidents();
            if json {
                println!("{}", serde_json::to_string_pretty(&entries).expect("json"));
            } else {
                for e in entries {
                    let kind = serde_json::to_value(&e.kind).expect("json");
                    println!(
                        "{:<44} {:<9} {:<26} {}",
                        e.name,
                        kind.as_str().unwrap_or(""),
                        e.scenario,
                        e.root_causes.join(",")
                    );
                }
            }
            Ok(())
        }
        Cmd::Describe { name, reveal } => {
            let v = describe(&name, reveal).map_err(lookup)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            Ok(())
        }
        Cmd::Run {
            incident,
            policy,
            out,
            overwrite,
            paced,
            listen,
            transcript,
            bind,
            template_seed,
            max_p95_ms,
            max_loss,
            grace_s,
        } => {
            let bindings = match (bind.is_empty(), template_seed) {
                (false, _) => Some(Bindings::Explicit(bind)),
                (true, Some(s)) => Some(Bindings::Seed(s)),
                (true, None) => None,
            };
            let mut spec = resolve_incident(&incident, bindings.as_ref()).map_err(lookup)?;
            if let Ok(s) = std::env::var(SEED_ENV) {
                spec.seed = s
                    .parse()
                    .with_context(|| format!("{SEED_ENV}={s:?} is not an integer"))?;
            }
            let policy = match policy {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    AccessPolicy::from_json(&text)
                        .with_context(|| format!("parsing {}", p.display()))?
                }
                None => AccessPolicy::permissive(),
            };
            let time_mode = match paced {
                Some(r) if r > 0.0 && r.is_finite() => TimeMode::Paced(r),
                Some(r) => {
                    return Err(anyhow::anyhow!("--paced must be a positive ratio, got {r}").into())
                }
                None => TimeMode::Stepped,
            };
            let slo = SloConfig {
                max_p95_latency_ms: Some(max_p95_ms),
                max_loss_fraction: Some(max_loss),
            };
            if out.exists()
                && !overwrite
                && std::fs::read_dir(&out)
                    .map(|mut d| d.next().is_some())
                    .unwrap_or(false)
            {
                return Err(ArtifactError::Exists(out.display().to_string()).into());
            }
            log::info!(
                "incident {} seed {}: warming up {} ms",
                spec.name,
                spec.seed,
                spec.warmup_ms
            );
            let mut active = Prepared::new(spec).open(policy, time_mode);
            match transcript {
                Some(t) => {
                    let text = std::fs::read_to_string(&t)
                        .with_context(|| format!("reading {}", t.display()))?;
                    let reqs: Vec<Value> = text
                        .lines()
                        .filter(|l| !l.trim().is_empty())
                        .map(serde_json::from_str)
                        .collect::<Result<_, _>>()
                        .with_context(|| format!("parsing {}", t.display()))?;
                    for r in active.play(&reqs) {
                        println!("{r}");
                    }
                }
                None => {
                    let served = serve(
                        &mut active.session,
                        &listen,
                        Some(Duration::from_secs(grace_s)),
                        |addr| match addr {
                            Some(a) => log::info!("listening on {a}"),
                            None => log::info!("serving on stdin/stdout"),
                        },
                    )
                    .context("starting listener")?;
                    if !served {
                        log::warn!("no agent request received");
                    }
                }
            }
            let result = active.finish(slo);
            write_run(&out, &result, overwrite)?;
            let r = &result.report;
            let goals: Vec<String> = r
                .goals
                .iter()
                .map(|g| {
                    format!(
                        "{}={}",
                        g.goal.as_str(),
                        if g.exact_match { "exact" } else { "miss" }
                    )
                })
                .collect();
            log::info!(
                "{:?}: {} tool calls, {} SLO violations, {}; artifacts in {}",
                r.outcome,
                r.efficiency.tool_calls,
                r.slo_violations.len(),
                goals.join(" "),
                out.display()
            );
            match r.outcome {
                RunOutcome::Submitted => Ok(()),
                RunOutcome::Aborted => Err(Failure::Aborted),
            }
        }
        Cmd::Replay { dir } => {
            let r = replay_and_check(&dir)?;
            println!("{}", r.to_json().trim_end());
            Ok(())
        }
        Cmd::Smoke { json } => {
            let rows = smoke_matrix();
            if json {
                println!("{}", serde_json::to_string_pretty(&rows).expect("json"));
            } else {
                for r in &rows {
                    println!("{r}");
                }
            }
            let bad = rows
                .iter()
                .filter(|r| r.status != SmokeStatus::Pass)
                .count();
            println!("{} of {} rows pass", rows.len() - bad, rows.len());
            if bad > 0 {
                return Err(Failure::Integrity(anyhow::anyhow!(
                    "{bad} smoke rows failed"
                )));
            }
            Ok(())
        }
        Cmd::Aggregate { dirs, csv } => {
            let reports = dirs
                .iter()
                .map(|d| load_report(Path::new(d)))
                .collect::<Result<Vec<_>, _>>()?;
            let text = summary_csv(&aggregate(&reports));
            if csv {
                print!("{text}");
            } else {
                print_table(&text);
            }
            Ok(())
        }
    }
}

fn lookup(e: LookupError) -> Failure {
    Failure::Usage(e.into())
}

fn print_table(csv_text: &str) {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let mut rows: Vec<Vec<String>> = vec![SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect()];
    for rec in rd.records().flatten() {
        rows.push(rec.iter().map(String::from).collect());
    }
    let widths: Vec<usize> = (0..SUMMARY_COLUMNS.len())
        .map(|i| {
            rows.iter()
                .map(|r| r.get(i).map_or(0, String::len))
                .max()
                .unwrap_or(0)
        })
        .collect();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        println!("{}", line.join("  ").trim_end());
    }
}
