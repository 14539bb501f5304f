mod commands;
mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qbm_pair::model::Branch;

use config::ParamFlags;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] qbm_pair::Error),
    #[error("checks failed")]
    ChecksFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(e) if !e.is_domain() => 2,
            CliError::Model(_) | CliError::ChecksFailed => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Plus,
    Minus,
}

#[derive(Debug, Parser)]
#[command(name = "qbm-pair", version, about = "Entanglement of two separated oscillators in a shared field bath")]
struct Cli {
    /// TOML file with parameter defaults (`omega = 5`, `lambda_cut = 1e4`, ...); flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: ParamFlags,
    /// Output file, written atomically; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (default: text for reports, csv for tables)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Late-time symplectic eigenvalues, negativity and regime
    Negativity,
    /// Grid sweep; without an ell axis, the critical-separation surface
    Sweep {
        /// Axes such as `gamma=0.01:0.1:10,sigma=0.05:0.5:10`, `ell=0.1:100:50:log` or `beta=1,2,inf`
        #[arg(long)]
        grid: String,
    },
    /// Critical separations: numeric roots and analytic estimates
    CriticalSep {
        /// Scan bracket `lo,hi` (default: just above the stability floor up to 1000/omega)
        #[arg(long, value_delimiter = ',', num_args = 2)]
        bracket: Option<Vec<f64>>,
    },
    /// Dominant poles of both normal modes
    Poles {
        /// Also list the large-n pole ladder for n in `lo:hi`
        #[arg(long)]
        ladder: Option<String>,
    },
    /// Delay-equation trajectory of one normal mode (CSV t, chi, chi_dot)
    Transient {
        #[arg(long, value_enum, default_value = "plus")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        chi0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        v0: f64,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        /// Step size (default: min(ell/50, 2 pi/(50 omega_pm)))
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Built-in invariant checks on a fixed grid
    Check,
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn parse_ladder(text: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Usage(format!("--ladder expects lo:hi, got '{text}'"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (params, backend) = config::resolve(cli.config.as_deref(), &cli.params)?;
    let text_or = |default: Format| cli.format.unwrap_or(default);
    let output = match &cli.command {
        Command::Negativity => commands::negativity(&params, backend, text_or(Format::Text))?,
        Command::Sweep { grid } => commands::sweep_cmd(&params, backend, grid, text_or(Format::Csv))?,
        Command::CriticalSep { bracket } => {
            let bracket = bracket.as_ref().map(|b| (b[0], b[1]));
            commands::critical_sep(&params, backend, bracket, text_or(Format::Text))?
        }
        Command::Poles { ladder } => {
            let ladder = ladder.as_deref().map(parse_ladder).transpose()?;
            commands::poles(&params, ladder, text_or(Format::Text))?
        }
        Command::Transient { mode, chi0, v0, t_max, dt } => {
            let branch = match mode {
                ModeArg::Plus => Branch::Plus,
                ModeArg::Minus => Branch::Minus,
            };
            let args = commands::TransientArgs { branch, chi0: *chi0, v0: *v0, t_max: *t_max, dt: *dt };
            commands::transient(&params, &args, text_or(Format::Csv))?
        }
        Command::Check => {
            let (report, ok) = commands::check();
            print!("{report}");
            return if ok { Ok(()) } else { Err(CliError::ChecksFailed) };
        }
    };
    match &cli.out {
        Some(path) => write_atomic(path, &output),
        None => {
            print!("{output}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qbm-pair: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
