use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use inolml::harness::{emit_metrics, run_experiment, ExperimentConfig, MetricsRecord, Strategy};
use inolml::oracle;

#[derive(Parser)]
#[command(name = "inolml", version, about = "Noisy-label meta-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics.jsonl and metrics.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one experiment per seed in parallel, each into `<out>/seed-<s>`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Half-open `a..b` or inclusive `a..=b`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Range<u64>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the finite-difference and brute-force reference batteries.
    OracleCheck,
}

fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let bad = || format!("expected `a..b` or `a..=b`, got `{s}`");
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let start: u64 = a.trim().parse().map_err(|_| bad())?;
    let end = match b.strip_prefix('=') {
        Some(b) => b.trim().parse::<u64>().map_err(|_| bad())?.checked_add(1).ok_or_else(bad)?,
        None => b.trim().parse().map_err(|_| bad())?,
    };
    if end <= start {
        return Err(format!("seed range `{s}` is empty"));
    }
    Ok(start..end)
}

fn load(config: &Path, seed: Option<u64>, strategy: Option<Strategy>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(strategy) = strategy {
        cfg.strategy = strategy;
    }
    Ok(cfg)
}

fn run_one(cfg: &ExperimentConfig, out: &Path) -> Result<MetricsRecord> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let output = run_experiment(cfg).with_context(|| format!("seed {}", cfg.seed))?;
    emit_metrics(&output.records, out.join("metrics.jsonl"))?;
    Ok(output.records.last().expect("a run emits at least one record").clone())
}

fn summary(seed: u64, last: &MetricsRecord) -> String {
    format!(
        "seed {seed}: iter {} test_acc {:.4} val_clean {:.3} dc_precision {:.3}",
        last.iter, last.test_acc, last.val_clean, last.dc_precision
    )
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            strategy,
            out,
        } => {
            let cfg = load(&config, seed, strategy)?;
            let last = run_one(&cfg, &out)?;
            println!("{} -> {}", summary(cfg.seed, &last), out.display());
        }
        Command::Sweep {
            config,
            seeds,
            strategy,
            out,
        } => {
            let base = load(&config, None, strategy)?;
            let results: Vec<(u64, Result<MetricsRecord>)> = seeds
                .into_par_iter()
                .map(|seed| {
                    let cfg = ExperimentConfig { seed, ..base.clone() };
                    (seed, run_one(&cfg, &out.join(format!("seed-{seed}"))))
                })
                .collect();
            let mut accs = Vec::new();
            for (seed, result) in results {
                let last = result?;
                println!("{}", summary(seed, &last));
                accs.push(last.test_acc);
            }
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            println!("mean test_acc {mean:.4} over {} seeds -> {}", accs.len(), out.display());
        }
        Command::OracleCheck => {
            let reports = oracle::run_all();
            let mut failed = Vec::new();
            for r in &reports {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                println!("{status} {} ({} cases, {} failures)", r.name, r.cases, r.failures.len());
                for note in &r.notes {
                    println!("     {note}");
                }
                for f in r.failures.iter().take(5) {
                    println!("     {f}");
                }
                if !r.passed() {
                    failed.push(r.name);
                }
            }
            if !failed.is_empty() {
                bail!("oracle batteries failed: {}", failed.join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors keep to one line; help and version print as usual
        Err(e) if e.use_stderr() => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
