mod commands;
mod config;
mod export;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Figure;
use crate::config::{CommonArgs, RunConfig};

/// Broadband quantum memory on a tripod atomic ensemble: kernels, Schmidt
/// modes and squeezing/entanglement spectra.
#[derive(Parser, Debug)]
#[command(name = "qmem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum of the selected protocol as CSV plus a JSON headline
    Spectrum,
    /// Data behind one of the standard figures
    Figure {
        #[arg(value_enum)]
        name: Figure,
    },
    /// Schmidt decomposition of the memory cycle
    Schmidt,
    /// Write and cycle kernels as CSV matrices
    Kernel,
    /// Run the numerical property checks and print a pass/fail report
    Validate {
        /// Cycle-kernel CSV to re-import and check for symmetry
        #[arg(long)]
        import: Option<PathBuf>,
    },
}

/// Bad flags, config values or output locations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

struct ValidationFailed(usize);

fn init_threads() -> Result<(), UsageError> {
    let Ok(raw) = std::env::var("QMEM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| UsageError(format!("QMEM_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> anyhow::Result<Option<ValidationFailed>> {
    init_threads()?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&RunConfig::resolve(&cli.common, false)?)?,
        Command::Figure { name } => {
            commands::figure(name, &RunConfig::resolve(&cli.common, false)?, &cli.common)?
        }
        Command::Schmidt => commands::schmidt(&RunConfig::resolve(&cli.common, false)?)?,
        Command::Kernel => commands::kernel(&RunConfig::resolve(&cli.common, false)?)?,
        Command::Validate { import } => {
            let cfg = RunConfig::resolve(&cli.common, true)?;
            let checks = validate::run(&cfg, import.as_deref());
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", c.name, c.detail);
            }
            println!("{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return Ok(Some(ValidationFailed(failed)));
            }
        }
    }
    Ok(None)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<qmem_core::Error>() {
            return match e {
                qmem_core::Error::Domain(_) => 2,
                qmem_core::Error::NumericalQuality(_) => 3,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(ValidationFailed(n))) => {
            eprintln!("validation failed: {n} check(s)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
