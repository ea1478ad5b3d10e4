use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use crt_array::cli::{Command, Outcome, Runner};
use crt_array::config::RunConfig;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Design,
    Analyze,
    Uspace,
    Simulate,
    Pattern,
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Design => Command::Design,
            Cmd::Analyze => Command::Analyze,
            Cmd::Uspace => Command::Uspace,
            Cmd::Simulate => Command::Simulate,
            Cmd::Pattern => Command::Pattern,
            Cmd::Verify => Command::Verify,
        }
    }
}

/// Coprime quadratic-integer sensor arrays: design, coarray checks,
/// smoothing, DOA simulation and MIMO patterns.
#[derive(Debug, Parser)]
#[command(name = "crt-array", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// key=value run configuration; repeated keys form lists.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Extra key=value settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

const EXIT_INVALID: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn load(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            RunConfig::parse(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim());
    }
    if let Some(s) = args.seed {
        cfg.set("seed", &s.to_string());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let runner = Runner {
        command: args.command.into(),
        config,
        out: args.out.clone(),
    };
    match runner.run() {
        Ok(Outcome::Success(s)) => {
            println!("{s}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::VerificationFailed(s)) => {
            println!("{s}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
