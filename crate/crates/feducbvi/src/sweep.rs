//! Grid sweeps over `(eps_p, M, seed)`, one independent run per cell.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use feducbvi_core::harness::ExperimentConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::run_to_csv;
use crate::error::{AppError, AppResult};
use crate::formats::ConfigFile;
use crate::output::format_significant;

pub const SUMMARY_HEADER: &str = "eps_p,M,seed,final_regret,comm_rounds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ConfigFile,
    pub eps_p_values: Vec<f64>,
    #[serde(rename = "M_values")]
    pub m_values: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "sweep".to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub eps_p: f64,
    pub m: usize,
    pub seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub eps_p: f64,
    pub m: usize,
    pub seed: u64,
    pub csv_path: PathBuf,
    pub final_regret: f64,
    pub comm_rounds: u64,
}

pub fn cell_file_name(env: &str, eps_p: f64, m: usize, seed: u64) -> String {
    format!("{env}_ep{eps_p}_M{m}_s{seed}.csv")
}

impl SweepSpec {
    /// Expands the grid, `eps_p` outermost and seeds innermost, validating
    /// every cell before anything runs.
    pub fn cells(&self) -> AppResult<Vec<Cell>> {
        for (name, empty) in [
            ("eps_p_values", self.eps_p_values.is_empty()),
            ("M_values", self.m_values.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(AppError::Config(format!("`{name}` must not be empty")));
            }
        }
        let base = ExperimentConfig::from(&self.base);
        let dir = Path::new(&self.output_dir);
        let mut cells = Vec::new();
        for &eps_p in &self.eps_p_values {
            for &m in &self.m_values {
                for &seed in &self.seeds {
                    let config = ExperimentConfig {
                        eps_p,
                        n_agents: m,
                        seed,
                        output_path: dir
                            .join(cell_file_name(base.env.name(), eps_p, m, seed))
                            .to_string_lossy()
                            .into_owned(),
                        ..base.clone()
                    };
                    config.validate().map_err(|e| AppError::Cell {
                        eps_p,
                        m,
                        seed,
                        source: Box::new(e.into()),
                    })?;
                    cells.push(Cell { eps_p, m, seed, config });
                }
            }
        }
        Ok(cells)
    }
}

fn run_cell(cell: &Cell) -> AppResult<CellResult> {
    let metrics = run_to_csv(&cell.config).map_err(|e| AppError::Cell {
        eps_p: cell.eps_p,
        m: cell.m,
        seed: cell.seed,
        source: Box::new(e),
    })?;
    Ok(CellResult {
        eps_p: cell.eps_p,
        m: cell.m,
        seed: cell.seed,
        csv_path: PathBuf::from(&cell.config.output_path),
        final_regret: metrics.final_regret(),
        comm_rounds: metrics.comm_rounds,
    })
}

/// Runs every cell on a pool of `jobs` threads (all logical cores when
/// `None`) and writes `summary.csv` next to the per-cell files. Results come
/// back in grid order regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> AppResult<Vec<CellResult>> {
    let cells = spec.cells()?;
    let dir = Path::new(&spec.output_dir);
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| AppError::Config(format!("cannot start {jobs:?} workers: {e}")))?;
    let results = pool.install(|| cells.par_iter().map(run_cell).collect::<AppResult<Vec<_>>>())?;
    write_summary(&dir.join("summary.csv"), &results)?;
    Ok(results)
}

pub fn render_summary(results: &[CellResult]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.eps_p,
            r.m,
            r.seed,
            format_significant(r.final_regret, 10),
            r.comm_rounds
        );
    }
    out
}

fn write_summary(path: &Path, results: &[CellResult]) -> AppResult<()> {
    fs::write(path, render_summary(results)).map_err(|e| AppError::io(path, e))
}

/// Mean and sample standard deviation of the final regret per `(eps_p, M)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub eps_p: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub runs: usize,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub mean_comm_rounds: f64,
}

pub fn group_stats(results: &[CellResult]) -> Vec<GroupStats> {
    let mut groups: Vec<GroupStats> = Vec::new();
    let mut members: Vec<Vec<&CellResult>> = Vec::new();
    for r in results {
        match groups.iter().position(|g| g.eps_p == r.eps_p && g.m == r.m) {
            Some(k) => members[k].push(r),
            None => {
                groups.push(GroupStats {
                    eps_p: r.eps_p,
                    m: r.m,
                    runs: 0,
                    mean_final_regret: 0.0,
                    std_final_regret: 0.0,
                    mean_comm_rounds: 0.0,
                });
                members.push(vec![r]);
            }
        }
    }
    for (g, rs) in groups.iter_mut().zip(&members) {
        let n = rs.len() as f64;
        let mean = rs.iter().map(|r| r.final_regret).sum::<f64>() / n;
        let var = if rs.len() > 1 {
            rs.iter().map(|r| (r.final_regret - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        g.runs = rs.len();
        g.mean_final_regret = mean;
        g.std_final_regret = var.sqrt();
        g.mean_comm_rounds = rs.iter().map(|r| r.comm_rounds as f64).sum::<f64>() / n;
    }
    groups
}
