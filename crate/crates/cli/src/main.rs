use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use cocycle_lab::exec;
use cocycle_lab::scenario::{self, write_all, Metadata, Source};

/// Scenario runner for holonomy and transfer-map experiments.
#[derive(Debug, Parser)]
#[command(name = "cocycle-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        /// Path to a JSON scenario, or the name of a bundled one.
        config: String,
        /// Directory for report.json, metadata.json and the CSV series.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Dot-path override such as `pipeline.samples=20`; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Size of the worker pool.
        #[arg(long)]
        max_workers: Option<usize>,
        /// Print the report summary only.
        #[arg(long, short)]
        quiet: bool,
    },
    /// List bundled scenarios.
    ListScenarios,
}

const CONFIG_ERROR: u8 = 2;

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn list() -> ExitCode {
    for b in scenario::bundled() {
        let budget = b
            .budget_seconds()
            .map(|s| format!("{s:.0}s"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<34} {:<17} {:>5}  {}",
            b.name,
            b.pipeline(),
            budget,
            b.description()
        );
    }
    ExitCode::SUCCESS
}

fn run(
    config: &str,
    output_dir: Option<PathBuf>,
    overrides: &[String],
    max_workers: Option<usize>,
    quiet: bool,
) -> ExitCode {
    let (sc, source) = match scenario::load(config, overrides) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let prepared = match sc.prepare() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let workers = match max_workers {
        Some(0) => {
            eprintln!("config error: --max-workers must be at least 1");
            return ExitCode::from(CONFIG_ERROR);
        }
        Some(n) => n,
        None => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = output_dir
        .or_else(|| sc.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&sc.name));
    if !quiet {
        let from = match &source {
            Source::Bundled(n) => format!("bundled:{n}"),
            Source::File(p) => p.display().to_string(),
        };
        eprintln!(
            "running {} ({}) from {from} with {workers} worker(s)",
            sc.name,
            sc.pipeline.name.as_str()
        );
    }

    let started_unix = unix_now();
    let t0 = Instant::now();
    let outcome = pool.install(|| scenario::execute(&prepared));
    let meta = Metadata {
        scenario: sc.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        finished_unix: unix_now(),
        elapsed_seconds: t0.elapsed().as_secs_f64(),
        budget_seconds: sc.budget_seconds,
        workers,
        parallel: exec::is_parallel(),
        timings: outcome.timings.clone(),
    };
    let report = &outcome.report;
    if let Err(e) = write_all(&dir, report, &outcome.tables, &meta) {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::FAILURE;
    }
    if !quiet {
        for c in &report.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            println!(
                "{mark} {:<32} {:>12.4e} {} {:.4e}",
                c.name, c.measured, c.relation, c.threshold
            );
        }
        if let Some(e) = &report.error {
            println!("error: {e}");
        }
    }
    println!(
        "{}: {} in {:.1}s -> {}",
        sc.name,
        report.verdict.as_str(),
        meta.elapsed_seconds,
        dir.display()
    );
    ExitCode::from(report.verdict.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            output_dir,
            overrides,
            max_workers,
            quiet,
        } => run(&config, output_dir, &overrides, max_workers, quiet),
        Command::ListScenarios => list(),
    }
}
