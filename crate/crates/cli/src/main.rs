use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

mod commands;
mod config;
mod output;

use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "qfeedback",
    version,
    about = "Emitter-microcavity simulator with half-cavity feedback"
)]
struct Cli {
    /// TOML file of `key = value` settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "QFEEDBACK_OUT_DIR", default_value = ".")]
    out: PathBuf,

    /// Worker threads for sweep-type subcommands (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Dark-state profile over the bath modes.
    Stationary,
    /// Time evolution of the mode populations.
    Evolve,
    /// Jacobian spectrum with microcavity weights.
    Jacobian,
    /// Roots of the characteristic equation at one ratio.
    Roots,
    /// Critical ratios for n = 1..n_max.
    CriticalR,
    /// Characteristic roots along a log₂R grid.
    Sweep,
    /// Invariant self-check suite.
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Stationary => "stationary",
            Command::Evolve => "evolve",
            Command::Jacobian => "jacobian",
            Command::Roots => "roots",
            Command::CriticalR => "critical-r",
            Command::Sweep => "sweep",
            Command::Check => "check",
        }
    }

    fn parallel(self) -> bool {
        matches!(self, Command::CriticalR | Command::Sweep | Command::Check)
    }
}

#[derive(Debug)]
pub struct CliError {
    category: &'static str,
    module: &'static str,
    field: Option<&'static str>,
    message: String,
    code: u8,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self {
            category: "config",
            module: "cli",
            field: None,
            message,
            code: 3,
        }
    }

    pub fn io(message: String) -> Self {
        Self {
            category: "io",
            module: "cli",
            field: None,
            message,
            code: 1,
        }
    }

    pub fn check_failed(message: String) -> Self {
        Self {
            category: "check-failed",
            module: "cli",
            field: None,
            message,
            code: 5,
        }
    }

    fn emit(&self) {
        let v = json!({
            "error": {
                "category": self.category,
                "module": self.module,
                "field": self.field,
                "message": self.message,
            }
        });
        eprintln!("{v}");
    }
}

impl From<qfeedback::Error> for CliError {
    fn from(e: qfeedback::Error) -> Self {
        use qfeedback::Error as E;
        let code = match e {
            E::IntegrationDiagnostic { .. }
            | E::Analysis(_)
            | E::Eigensolver(_)
            | E::CriticalNotFound { .. }
            | E::ProductLaw { .. } => 5,
            _ => 4,
        };
        let field = match e {
            E::ParameterDomain { field, .. } => Some(field),
            E::GridResolution { .. } => Some("num_pairs"),
            E::GridBandwidth { .. } => Some("half_bandwidth"),
            E::StepSize { .. } => Some("dt"),
            E::ScanResolution { .. } => Some("scan_points"),
            E::PerturbationDomain(_) => Some("perturbation"),
            _ => None,
        };
        Self {
            category: e.category(),
            module: e.module(),
            field,
            message: e.to_string(),
            code,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&cli.overrides);
    cfg.validate()?;

    let threads = if cli.command.parallel() {
        cli.threads
    } else {
        1
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::io(format!("thread pool: {e}")))?;

    let start = Instant::now();
    let result = match cli.command {
        Command::Stationary => commands::stationary(&mut cfg),
        Command::Evolve => commands::evolve(&mut cfg),
        Command::Jacobian => commands::jacobian(&mut cfg),
        Command::Roots => commands::roots(&mut cfg),
        Command::CriticalR => commands::critical_r(&mut cfg),
        Command::Sweep => commands::sweep(&mut cfg),
        Command::Check => commands::check(&mut cfg),
    }?;
    let name = cli.command.name();
    output::write_outputs(&cli.out, name, &cfg, &result, start.elapsed().as_secs_f64())?;
    if let Some(msg) = result.failure {
        return Err(CliError::check_failed(msg));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if !usage {
                return ExitCode::SUCCESS;
            }
            eprintln!(
                "{}",
                json!({"error": {"category": "usage", "module": "cli", "field": null, "message": e.kind().to_string()}})
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.emit();
            ExitCode::from(e.code)
        }
    }
}
