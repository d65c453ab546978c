mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{HitRuleArg, ModelKind, StopMethod, SweepArg};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "occflow", version, about = "Monte Carlo experiments on occupied processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment file (TOML); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed. Overrides the file value.
    #[arg(long, global = true, env = "OCCFLOW_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output CSV (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add wall-clock runtime to the CSV.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Args, Default)]
pub struct NumericArgs {
    /// Horizon T in years.
    #[arg(long = "t")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Pair path j with the negated draws of path j + J/2.
    #[arg(long)]
    pub antithetic: bool,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Local volatility table, CSV `t,x,vol`.
    #[arg(long)]
    pub sigma_loc: Option<PathBuf>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub dividend: Option<f64>,
    /// Exponential clock rate.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Occupation grid `center,half_span,bins`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(f64, f64, usize)>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate paths; writes `path,step,time,level,vol`.
    Simulate {
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo price of an occupation payoff.
    Price {
        /// Payoff file (TOML with a `kind` key); overrides `[payoff]`.
        #[arg(long)]
        payoff: Option<PathBuf>,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Expected variance occupation of a corridor from vanilla quotes.
    Replicate {
        /// Quotes CSV `strike,maturity,type,bid,ask`.
        #[arg(long)]
        quotes: Option<PathBuf>,
        #[arg(long, value_parser = parse_pair)]
        corridor: Option<(f64, f64)>,
        #[arg(long)]
        maturity: Option<f64>,
        #[arg(long)]
        spot: Option<f64>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        dividend: Option<f64>,
    },
    /// Local occupied volatility by the particle method; writes `path,step,time,level,vol`.
    LovSim {
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Value a stopping rule for the spot local time reward.
    Stop {
        #[arg(long, value_enum)]
        method: Option<StopMethod>,
        /// Exercise dates of the two-date rule.
        #[arg(long = "t", value_delimiter = ',')]
        t: Option<Vec<f64>>,
        /// Inspection dates.
        #[arg(long, value_delimiter = ',')]
        iota: Option<Vec<f64>>,
        /// Truncation radii of the regression rule.
        #[arg(long, value_delimiter = ',')]
        mbar: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        hit_rule: Option<HitRuleArg>,
        /// Use the undamped Laguerre basis in the regression rule.
        #[arg(long)]
        plain_basis: bool,
        #[arg(long)]
        offline_paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
        /// Corridor half width of the local time estimate.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Value against the corridor half width, same draws for every width.
    ConvergeEps {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        strategy: Option<SweepArg>,
        #[arg(long)]
        iota: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Rerun a published table and compare it with the reference values.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Table1,
    Table2,
    Table3,
    EpsCurve,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Price { .. } => "price",
            Command::Replicate { .. } => "replicate",
            Command::LovSim { .. } => "lov-sim",
            Command::Stop { .. } => "stop",
            Command::ConvergeEps { .. } => "converge-eps",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected center,half_span,bins, got '{s}'"));
    }
    let f = |p: &str| p.parse::<f64>().map_err(|e| format!("'{p}': {e}"));
    let bins = parts[2].parse::<usize>().map_err(|e| format!("'{}': {e}", parts[2]))?;
    Ok((f(parts[0])?, f(parts[1])?, bins))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x1,x2, got '{s}'"))?;
    let f = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
    Ok((f(a)?, f(b)?))
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
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Mismatch(table) => eprint!("{table}"),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
