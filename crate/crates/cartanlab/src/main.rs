use std::path::PathBuf;
use std::process::ExitCode;

use cartanlab::config::GridSpec;
use cartanlab::jobs::{run, Command, Setup};
use cartanlab::{InputError, JobConfig};
use clap::Parser;

/// Numerical checks of pseudohermitian and tractor identities on
/// hypersurfaces in C^2.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on an
/// input error.
#[derive(Parser, Debug)]
#[command(name = "cartanlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature grid `NxM` (N eta nodes, M nodes per angle).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// Multiplies every residual tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    GridSpec::parse(s).map_err(|e| e.to_string())
}

fn execute(cli: &Cli) -> Result<bool, InputError> {
    let mut cfg = JobConfig::load(&cli.config)?;
    if let Some(g) = cli.grid {
        cfg.grid = g;
    }
    let mut setup = Setup::new(cfg, cli.tol_scale)?;
    let out = run(cli.command, &mut setup)?;
    match &cli.out {
        Some(p) => std::fs::write(p, &out.text).map_err(|e| InputError::Io(p.display().to_string(), e))?,
        None => print!("{}", out.text),
    }
    Ok(out.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("cartanlab: some checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("cartanlab: {e}");
            ExitCode::from(2)
        }
    }
}
