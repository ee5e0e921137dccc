use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dsb_core::diagnostics::Outcome;

mod config;
mod output;
mod run;

use config::{Command, RunConfig};
use run::{RunError, RunOptions};

const EXIT_VERDICT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Probe,
    Mixture,
    DecayCheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Probe => Command::Probe,
            Cmd::Mixture => Command::Mixture,
            Cmd::DecayCheck => Command::DecayCheck,
        }
    }
}

/// Simulate dependent Dirichlet processes and run Monte Carlo property probes.
#[derive(Debug, Parser)]
#[command(name = "dsb-lab", version)]
struct Args {
    command: Cmd,
    /// Run description file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides [run] seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress summaries on stdout.
    #[arg(long)]
    quiet: bool,
    /// Worker threads; falls back to DSB_LAB_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    if let Some(n) = flag {
        return if n == 0 { Err("--threads must be at least 1".into()) } else { Ok(Some(n)) };
    }
    match std::env::var("DSB_LAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("DSB_LAB_THREADS must be a positive integer, got '{v}'")),
        },
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command: Command = args.command.into();

    match thread_count(args.threads) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("dsb-lab: thread pool: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("dsb-lab: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("dsb-lab: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let text = match args.seed {
        // a CLI seed satisfies the mandatory-seed rule and wins over the file
        Some(s) => override_seed(&text, s),
        None => text,
    };
    let cfg = match RunConfig::parse(&text, Some(command)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("dsb-lab: invalid config {}:\n{e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out_dir = args
        .out
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("dsb-lab-out"));
    let opts = RunOptions {
        out_dir,
        quiet: args.quiet,
    };
    match run::execute(&cfg, command, &opts) {
        Ok(res) => {
            if !args.quiet {
                println!(
                    "{} artifacts in {} (outcome: {})",
                    res.manifest.artifacts.len() + 1,
                    opts.out_dir.display(),
                    res.manifest.outcome
                );
            }
            match res.outcome {
                Some(Outcome::Fail) => ExitCode::from(EXIT_VERDICT_FAILED),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(RunError::Core(e @ dsb_core::DsbError::Config(_))) => {
            eprintln!("dsb-lab: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("dsb-lab: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

/// Replaces or inserts `seed` in the `[run]` section.
fn override_seed(text: &str, seed: u64) -> String {
    let mut out = Vec::new();
    let mut in_run = false;
    let mut done = false;
    for line in text.lines() {
        let bare = line.split('#').next().unwrap_or("").trim();
        if bare.starts_with('[') {
            in_run = bare.trim_start_matches('[').trim_end_matches(']').trim() == "run";
            out.push(line.to_string());
            if in_run && !done {
                out.push(format!("seed = {seed}"));
                done = true;
            }
            continue;
        }
        if in_run && bare.split_once('=').is_some_and(|(k, _)| k.trim() == "seed") {
            continue;
        }
        out.push(line.to_string());
    }
    if !done {
        out.insert(0, format!("[run]\nseed = {seed}"));
    }
    out.join("\n") + "\n"
}
