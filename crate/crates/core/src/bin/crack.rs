use clap::{Parser, ValueEnum};
use crack_core::app::{run_command, summary_table};
use crack_core::config::{parse_overrides, RunConfig};
use crack_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Solve,
    Verify,
    Bounds,
    Norms,
    Special,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Bounds => "bounds",
            Command::Norms => "norms",
            Command::Special => "special",
        }
    }
}

/// Mellin-transform solver for the cracked plane and its verification suite.
///
/// Any config key can be overridden as `--key value` after the fixed
/// options.  CRACK_THREADS caps the worker threads.
#[derive(Debug, Parser)]
#[command(name = "crack", version)]
struct Cli {
    command: Command,
    /// Flat key = value file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the `out` key).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

// exit codes: 0 all checks pass, 1 a check failed, 2 bad config, 3 runtime error
fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = set_threads() {
        eprintln!("crack: {e}");
        return ExitCode::from(2);
    }
    let cfg = match parse_overrides(&cli.overrides).and_then(|o| RunConfig::load(cli.config.as_deref(), &o)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("crack: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.out.clone());
    match run_command(cli.command.name(), &cfg, &out) {
        Ok(o) => {
            print!("{}", summary_table(&o.checks));
            println!("{} files in {}", o.manifest.files.len() + 1, out.display());
            if o.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("crack: {} check(s) failed", o.checks.iter().filter(|c| !c.passed).count());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("crack: {e}");
            ExitCode::from(if matches!(e.root(), Error::Config(_)) { 2 } else { 3 })
        }
    }
}

fn set_threads() -> crack_core::Result<()> {
    let Ok(v) = std::env::var("CRACK_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("CRACK_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}
