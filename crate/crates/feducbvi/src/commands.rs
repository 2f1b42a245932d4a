//! Library form of every CLI command. The binary only parses arguments and
//! maps errors to exit codes.

use std::path::Path;
use std::time::Instant;

use feducbvi_core::harness::{run_experiment, ExperimentConfig, RunMetrics};
use feducbvi_core::mdp::optimal_values;
use serde::Serialize;

use crate::error::AppResult;
use crate::output::write_csv;

/// Runs `cfg`, stamps the wall time and writes the CSV to `output_path`.
pub fn run_to_csv(cfg: &ExperimentConfig) -> AppResult<RunMetrics> {
    let started = Instant::now();
    let mut metrics = run_experiment(cfg)?;
    metrics.wall_time_secs = Some(started.elapsed().as_secs_f64());
    write_csv(&metrics, Path::new(&cfg.output_path))?;
    Ok(metrics)
}

/// Optimal values and policy of the common MDP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub env: &'static str,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "A")]
    pub a: usize,
    pub start_state: usize,
    /// `V*_1(s_1)`.
    pub optimal_value: f64,
    /// `values[h][s]` for `h = 0..=H`; the last row is zero.
    pub values: Vec<Vec<f64>>,
    /// `policy[h][s]`.
    pub policy: Vec<Vec<usize>>,
}

pub fn oracle_report(cfg: &ExperimentConfig) -> AppResult<OracleReport> {
    let fleet = cfg.build_fleet()?;
    let common = fleet.common();
    let (h, s, a) = (common.horizon(), common.n_states(), common.n_actions());
    let (v, pi) = optimal_values(common)?;
    Ok(OracleReport {
        env: cfg.env.name(),
        h,
        s,
        a,
        start_state: common.start_state(),
        optimal_value: v.v(0, common.start_state()),
        values: (0..=h).map(|step| v.v_row(step).to_vec()).collect(),
        policy: (0..h)
            .map(|step| (0..s).map(|st| pi.action(step, st)).collect())
            .collect(),
    })
}
