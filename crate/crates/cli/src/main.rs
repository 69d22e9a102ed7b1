//! `srmag`: scenario validation, magnetic and lifted flows, step tables,
//! abnormal certificates and curvature reports.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "srmag", version, about = "Horizontal magnetic fields on 3D contact sub-Riemannian manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify a scenario: frame, contact data, potential, closedness, lift.
    Validate {
        /// Scenario file, or the name of a bundled scenario.
        scenario: String,
        #[arg(long)]
        json: bool,
    },
    /// Integrate the magnetic flow, or the lifted flow with --lifted.
    Flow {
        scenario: String,
        /// x,y,z,h1,h2,h0 (or x,y,z,w,z1,z2,z0,zw with --lifted).
        #[arg(long, allow_hyphen_values = true)]
        init: String,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        lifted: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Step table of the lifted distribution over base points.
    Step {
        scenario: String,
        /// File with one `x,y,z` point per line.
        #[arg(long, conflicts_with = "grid")]
        points: Option<PathBuf>,
        /// `x0:x1:n,y0:y1:n,z0:z1:n`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Largest step searched; defaults to the scenario's, else 8.
        #[arg(long)]
        budget: Option<u32>,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Certify a characteristic curve or the scenario's control concatenation.
    Abnormal {
        scenario: String,
        /// Start point x,y,z of a characteristic curve.
        #[arg(long, allow_hyphen_values = true, requires_all = ["t_final", "dt"])]
        init: Option<String>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Follow the unit characteristic field.
        #[arg(long)]
        normalize: bool,
        /// Frame direction u1,u2 used inside the zero locus.
        #[arg(long, allow_hyphen_values = true)]
        continuation: Option<String>,
        /// Report the lifted step at every sample.
        #[arg(long)]
        steps: bool,
        #[arg(long, default_value_t = 8)]
        budget: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Geodesic curvature of an exported trajectory at time t.
    Ksr {
        scenario: String,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        /// Also fit the curvature from the distance expansion.
        #[arg(long)]
        expansion: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// List bundled scenarios.
    List,
}

#[derive(clap::Args, Debug, Clone)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON run manifest here.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Derivatives,
    Brackets,
    Both,
}

/// Failure classes mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Certification(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Certification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SRMAG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Input(format!("SRMAG_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Validate { scenario, json } => commands::validate(&scenario, json),
        Command::Flow { scenario, init, t_final, dt, lifted, out } => {
            commands::flow(&scenario, &init, t_final, dt, lifted, &out)
        }
        Command::Step { scenario, points, grid, budget, method, out } => {
            commands::step(&scenario, points.as_deref(), grid.as_deref(), budget, method, &out)
        }
        Command::Abnormal { scenario, init, t_final, dt, normalize, continuation, steps, budget, out } => {
            let characteristic = match init {
                Some(p) => Some(commands::CharacteristicArgs {
                    start: input::parse_floats::<3>("--init", &p)?,
                    t_final: t_final.unwrap_or_default(),
                    dt: dt.unwrap_or_default(),
                    normalize,
                    continuation: continuation.map(|c| input::parse_floats::<2>("--continuation", &c)).transpose()?,
                }),
                None => None,
            };
            commands::abnormal(&scenario, characteristic, steps, budget, &out)
        }
        Command::Ksr { scenario, traj, t, expansion, out } => commands::ksr(&scenario, &traj, t, expansion, &out),
        Command::List => commands::list(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
