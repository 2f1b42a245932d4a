//! Per-episode CSV and the one-line run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use feducbvi_core::harness::{ExperimentConfig, RunMetrics};
use serde::Serialize;

use crate::error::{AppError, AppResult};

pub const CSV_HEADER: &str = "episode,cum_common_regret,round,comm_rounds,messages,bytes";

/// Plain decimal rounded to `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (_, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let rounded: f64 = sci.parse().expect("round trip");
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

pub fn render_csv(metrics: &RunMetrics) -> String {
    let mut out = String::with_capacity(32 * (metrics.episodes.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for e in &metrics.episodes {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.episode,
            format_significant(e.cum_common_regret, 10),
            e.round,
            e.comm_rounds,
            e.messages,
            e.bytes
        );
    }
    out
}

pub fn write_csv(metrics: &RunMetrics, path: &Path) -> AppResult<()> {
    fs::write(path, render_csv(metrics)).map_err(|e| AppError::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub env: &'static str,
    pub algorithm: &'static str,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub seed: u64,
    pub eps_p: f64,
    pub eps_r: f64,
    pub final_regret: f64,
    pub total_rounds: u64,
    pub comm_rounds: u64,
    pub nu: f64,
    pub r_max_bound: f64,
    pub optimal_value: f64,
    pub messages: u64,
    pub bytes: u64,
    pub regret_clamps: u64,
    pub variance_clamps: u64,
    pub wall_time_secs: Option<f64>,
    pub output_path: &'a str,
}

pub fn summary_line(cfg: &ExperimentConfig, metrics: &RunMetrics) -> String {
    let s = Summary {
        env: cfg.env.name(),
        algorithm: cfg.algorithm.name(),
        m: cfg.n_agents,
        t: cfg.episodes,
        seed: cfg.seed,
        eps_p: cfg.eps_p,
        eps_r: cfg.eps_r,
        final_regret: metrics.final_regret(),
        total_rounds: metrics.total_rounds,
        comm_rounds: metrics.comm_rounds,
        nu: metrics.nu,
        r_max_bound: metrics.r_max_bound,
        optimal_value: metrics.optimal_value,
        messages: metrics.messages,
        bytes: metrics.bytes,
        regret_clamps: metrics.regret_clamps,
        variance_clamps: metrics.variance_clamps,
        wall_time_secs: metrics.wall_time_secs,
        output_path: &cfg.output_path,
    };
    serde_json::to_string(&s).expect("summary always serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_significant(0.0, 10), "0");
        assert_eq!(format_significant(1.0, 10), "1.000000000");
        assert_eq!(format_significant(1234.56789012345, 10), "1234.567890");
        assert_eq!(format_significant(0.000123456789012, 10), "0.0001234567890");
        assert_eq!(format_significant(9.99999999999, 10), "10.00000000");
        assert_eq!(format_significant(123456789012.0, 10), "123456789000");
    }
}
