use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use feducbvi_core::harness::ExperimentConfig;

use crate::check::run_checks;
use crate::commands::{oracle_report, run_to_csv};
use crate::error::{AppError, AppResult};
use crate::formats::{load_config, load_fleet, read_json, save_fleet, AlgorithmName};
use crate::output::summary_line;
use crate::sweep::{group_stats, run_sweep, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "feducbvi", version, about = "Federated UCBVI simulator")]
pub struct Cli {
    /// Overrides the config seed (for `sweep`, replaces the seed list).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config algorithm.
    #[arg(long, global = true, value_enum)]
    pub algorithm: Option<AlgorithmName>,
    /// Sweep worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment, write its CSV and print a JSON summary line.
    Run { config: PathBuf },
    /// Run every (eps_p, M, seed) cell of a sweep spec.
    Sweep { spec: PathBuf },
    /// Print the optimal values and policy of the common MDP.
    Oracle {
        config: PathBuf,
        /// Also write the generated fleet as JSON.
        #[arg(long)]
        fleet_out: Option<PathBuf>,
    },
    /// Run the invariant battery.
    Check {
        config: PathBuf,
        /// Check this fleet file instead of generating one from the config.
        #[arg(long)]
        fleet: Option<PathBuf>,
    },
}

impl Cli {
    fn apply_overrides(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(a) = self.algorithm {
            cfg.algorithm = a.into();
        }
    }

    fn config(&self, path: &Path) -> AppResult<ExperimentConfig> {
        let mut cfg = load_config(path)?;
        self.apply_overrides(&mut cfg);
        Ok(cfg)
    }
}

/// Executes a parsed command, writing results to `out`. Returns the exit
/// code for commands that finish without an error.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> AppResult<i32> {
    let stdout_err = |e| AppError::io("<stdout>", e);
    match &cli.command {
        Command::Run { config } => {
            let cfg = cli.config(config)?;
            let metrics = run_to_csv(&cfg)?;
            writeln!(out, "{}", summary_line(&cfg, &metrics)).map_err(stdout_err)?;
            Ok(0)
        }
        Command::Sweep { spec } => {
            let mut spec: SweepSpec = read_json(spec)?;
            if let Some(seed) = cli.seed {
                spec.seeds = vec![seed];
            }
            if let Some(a) = cli.algorithm {
                spec.base.algorithm = a;
            }
            let results = run_sweep(&spec, cli.jobs)?;
            for g in group_stats(&results) {
                writeln!(out, "{}", serde_json::to_string(&g).expect("stats serialize")).map_err(stdout_err)?;
            }
            Ok(0)
        }
        Command::Oracle { config, fleet_out } => {
            let cfg = cli.config(config)?;
            if let Some(path) = fleet_out {
                save_fleet(path, &cfg.build_fleet()?)?;
            }
            let report = oracle_report(&cfg)?;
            writeln!(out, "{}", serde_json::to_string(&report).expect("report serializes")).map_err(stdout_err)?;
            Ok(0)
        }
        Command::Check { config, fleet } => {
            let cfg = cli.config(config)?;
            let fleet = match fleet {
                Some(path) => load_fleet(path)?,
                None => cfg.build_fleet()?,
            };
            let report = run_checks(&cfg, &fleet);
            for o in &report.outcomes {
                writeln!(out, "{o}").map_err(stdout_err)?;
            }
            Ok(if report.all_passed() { 0 } else { 3 })
        }
    }
}

/// Parses `args` and runs the command. Diagnostics go to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
