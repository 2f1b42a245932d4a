//! End-to-end runs: build the fleet, drive the protocol to the episode
//! budget and charge common regret against the exact optimum of the common
//! MDP.
//!
//! The policy is frozen inside a round, so its common value is computed once
//! per round and charged to every episode of that round.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::env::{make_gridworld, make_lower_bound_fleet, make_synthetic, Fleet, GridSpec};
use crate::error::{Error, Result};
use crate::mdp::{evaluate_policy_trusted, optimal_values, Policy, TabularMdp};
use crate::protocol::{Federation, ProtocolSettings, RoundOutcome, SyncMode};
use crate::rng::env_stream;

/// Negative regret increments down to this size are float noise and are
/// clamped to zero.
pub const REGRET_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    GridWorld,
    Synthetic,
    LowerBound,
}

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::GridWorld => "gridworld",
            EnvKind::Synthetic => "synthetic",
            EnvKind::LowerBound => "lower_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    FedUcbvi,
    /// Synchronizes after every episode.
    ConcurrentUcbvi,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::FedUcbvi => "fed_ucbvi",
            Algorithm::ConcurrentUcbvi => "concurrent_ucbvi",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    /// Ignored by `gridworld` and `lower_bound`, whose sizes are fixed.
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub n_agents: usize,
    pub episodes: u64,
    /// Kernel heterogeneity; the leak probability for `lower_bound`.
    pub eps_p: f64,
    pub eps_r: f64,
    pub delta: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub sync_strict: bool,
    pub output_path: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvKind::Synthetic,
            n_states: 5,
            n_actions: 5,
            horizon: 5,
            n_agents: 10,
            episodes: 1000,
            eps_p: 0.0,
            eps_r: 0.0,
            delta: 0.1,
            algorithm: Algorithm::FedUcbvi,
            seed: 0,
            sync_strict: true,
            output_path: String::from("run.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::input("T", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input("delta", "must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.eps_p) {
            return Err(Error::input("eps_p", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.eps_r) {
            return Err(Error::input("eps_r", "must lie in [0, 1)"));
        }
        if self.n_agents == 0 {
            return Err(Error::input("M", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::input("H", "must be at least 1"));
        }
        match self.env {
            EnvKind::Synthetic => {
                if self.n_states == 0 {
                    return Err(Error::input("S", "must be at least 1"));
                }
                if self.n_actions == 0 {
                    return Err(Error::input("A", "must be at least 1"));
                }
            }
            EnvKind::LowerBound => {
                if !(self.eps_p > 0.0 && self.eps_p < 2.0 / self.horizon as f64) {
                    return Err(Error::input("eps_p", "lower_bound needs 0 < eps_p < 2/H"));
                }
            }
            EnvKind::GridWorld => {}
        }
        Ok(())
    }

    /// Generates the fleet from the environment stream of `seed`.
    pub fn build_fleet(&self) -> Result<Fleet> {
        self.validate()?;
        let mut rng = env_stream(self.seed);
        match self.env {
            EnvKind::Synthetic => make_synthetic(
                self.n_states,
                self.n_actions,
                self.horizon,
                self.n_agents,
                self.eps_p,
                self.eps_r,
                &mut rng,
            ),
            EnvKind::GridWorld => {
                let spec = GridSpec {
                    horizon: self.horizon,
                    ..GridSpec::default()
                };
                make_gridworld(&spec, self.n_agents, self.eps_p, self.eps_r, &mut rng)
            }
            EnvKind::LowerBound => make_lower_bound_fleet(self.horizon, self.eps_p, self.n_agents),
        }
    }

    pub fn protocol_settings(&self) -> ProtocolSettings {
        ProtocolSettings {
            mode: match self.algorithm {
                Algorithm::FedUcbvi => SyncMode::Federated,
                Algorithm::ConcurrentUcbvi => SyncMode::Concurrent,
            },
            sync_strict: self.sync_strict,
            freeze_policy: false,
        }
    }
}

/// Debug switches for a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Policy for the first round; action 0 everywhere when absent.
    pub initial_policy: Option<Policy>,
    /// Never replace the initial policy.
    pub freeze_policy: bool,
    /// Also accumulate the federated-regret lower-bound estimate.
    pub track_federated_regret: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub episode: u64,
    pub cum_common_regret: f64,
    pub round: u64,
    pub comm_rounds: u64,
    pub messages: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub episodes: Vec<EpisodeRecord>,
    /// Rounds that ran at least one episode.
    pub total_rounds: u64,
    /// Rounds that ended in a synchronization.
    pub comm_rounds: u64,
    pub nu: f64,
    pub r_max_bound: f64,
    /// `V*_1(s_1)` of the common MDP.
    pub optimal_value: f64,
    pub messages: u64,
    pub bytes: u64,
    pub regret_clamps: u64,
    pub variance_clamps: u64,
    /// Cumulative regret against the best of the common and per-agent
    /// optimal policies; a lower bound on the federated regret.
    pub federated_regret_estimate: Option<f64>,
    /// Filled in by callers that have a clock.
    pub wall_time_secs: Option<f64>,
}

impl RunMetrics {
    pub fn final_regret(&self) -> f64 {
        self.episodes.last().map_or(0.0, |e| e.cum_common_regret)
    }

    pub fn within_r_max(&self) -> bool {
        self.total_rounds as f64 <= self.r_max_bound
    }
}

/// Upper bound on the number of rounds:
/// `M S A H log2(nu) + S A H log(T M / nu) / log(8/7)`, second term floored
/// at zero.
pub fn r_max_bound(
    n_agents: usize,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    episodes: u64,
    nu: f64,
) -> Result<f64> {
    if !(nu > 1.0) {
        return Err(Error::input("nu", "must exceed 1"));
    }
    let sah = (n_states * n_actions * horizon) as f64;
    let local = n_agents as f64 * sah * libm::log2(nu);
    let ratio = episodes as f64 * n_agents as f64 / nu;
    let global = if ratio > 1.0 {
        sah * libm::log(ratio) / libm::log(8.0 / 7.0)
    } else {
        0.0
    };
    Ok(local + global)
}

fn start_value(mdp: &TabularMdp, policy: &Policy) -> f64 {
    evaluate_policy_trusted(mdp, policy).v(0, mdp.start_state())
}

/// Averaged per-agent values, used by the federated-regret estimate.
struct FederatedOracle {
    agent_mdps: Vec<TabularMdp>,
    best: f64,
}

impl FederatedOracle {
    fn new(fleet: &Fleet, common_opt: &Policy) -> Result<Self> {
        let agent_mdps = (0..fleet.n_agents())
            .map(|i| fleet.agent_mdp(i))
            .collect::<Result<Vec<_>>>()?;
        let mut candidates = Vec::with_capacity(agent_mdps.len() + 1);
        candidates.push(common_opt.clone());
        for m in &agent_mdps {
            candidates.push(optimal_values(m)?.1);
        }
        let mut oracle = FederatedOracle {
            agent_mdps,
            best: f64::NEG_INFINITY,
        };
        oracle.best = candidates
            .iter()
            .map(|p| oracle.mean_value(p))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(oracle)
    }

    fn mean_value(&self, policy: &Policy) -> f64 {
        let total: f64 = self.agent_mdps.iter().map(|m| start_value(m, policy)).sum();
        total / self.agent_mdps.len() as f64
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunMetrics> {
    run_experiment_with(cfg, &RunOptions::default(), |_, _| Ok(()))
}

/// Runs `cfg` to its episode budget. `observer` sees the federation after
/// every round and may abort the run with an error.
pub fn run_experiment_with<F>(cfg: &ExperimentConfig, opts: &RunOptions, observer: F) -> Result<RunMetrics>
where
    F: FnMut(&Federation, &RoundOutcome) -> Result<()>,
{
    let fleet = cfg.build_fleet()?;
    run_on_fleet(cfg, &fleet, opts, observer)
}

/// Like [`run_experiment_with`] but on a prebuilt fleet. The environment
/// fields of `cfg` are ignored; its budget, confidence, algorithm and seed
/// still apply.
pub fn run_on_fleet<F>(cfg: &ExperimentConfig, fleet: &Fleet, opts: &RunOptions, mut observer: F) -> Result<RunMetrics>
where
    F: FnMut(&Federation, &RoundOutcome) -> Result<()>,
{
    cfg.validate()?;
    fleet.validate()?;
    let common = fleet.common();
    let (v_star, pi_star) = optimal_values(common)?;
    let optimal_value = v_star.v(0, common.start_state());

    let mut settings = cfg.protocol_settings();
    settings.freeze_policy = opts.freeze_policy;
    let mut fed = Federation::new(
        fleet,
        cfg.delta,
        cfg.episodes,
        cfg.seed,
        settings,
        opts.initial_policy.clone(),
    )?;
    let fed_oracle = if opts.track_federated_regret {
        Some(FederatedOracle::new(fleet, &pi_star)?)
    } else {
        None
    };

    let mut metrics = RunMetrics {
        episodes: Vec::with_capacity(cfg.episodes as usize),
        total_rounds: 0,
        comm_rounds: 0,
        nu: fed.server.nu,
        r_max_bound: r_max_bound(
            fleet.n_agents(),
            common.n_states(),
            common.n_actions(),
            common.horizon(),
            cfg.episodes,
            fed.server.nu,
        )?,
        optimal_value,
        messages: 0,
        bytes: 0,
        regret_clamps: 0,
        variance_clamps: 0,
        federated_regret_estimate: fed_oracle.as_ref().map(|_| 0.0),
        wall_time_secs: None,
    };

    let mut cum = 0.0;
    let mut cached: Option<(Policy, f64, f64)> = None;
    while !fed.finished() {
        let policy = fed.server.policy.clone();
        let outcome = fed.run_round()?;
        if outcome.episodes_run == 0 {
            break;
        }

        let (gap, fed_gap) = match &cached {
            Some((p, g, fg)) if *p == policy => (*g, *fg),
            _ => {
                let mut gap = optimal_value - start_value(common, &policy);
                if gap < 0.0 {
                    if gap < -REGRET_CLAMP_TOL {
                        return Err(Error::Invariant(format!(
                            "negative common regret increment {gap} in round {}",
                            outcome.round
                        )));
                    }
                    metrics.regret_clamps += 1;
                    gap = 0.0;
                }
                let fg = fed_oracle.as_ref().map_or(0.0, |o| o.best - o.mean_value(&policy));
                cached = Some((policy, gap, fg));
                (gap, fg)
            }
        };

        metrics.total_rounds += 1;
        if outcome.synchronized() {
            metrics.comm_rounds += 1;
        }
        metrics.messages += outcome.messages;
        metrics.bytes += outcome.bytes;
        if let Some(f) = metrics.federated_regret_estimate.as_mut() {
            *f += fed_gap * outcome.episodes_run as f64;
        }

        let first = metrics.episodes.len() as u64;
        for k in 0..outcome.episodes_run {
            cum += gap;
            let last = k + 1 == outcome.episodes_run;
            let prev = metrics.episodes.last();
            metrics.episodes.push(EpisodeRecord {
                episode: first + k + 1,
                cum_common_regret: cum,
                round: outcome.round,
                comm_rounds: if last {
                    metrics.comm_rounds
                } else {
                    prev.map_or(0, |p| p.comm_rounds)
                },
                messages: if last {
                    metrics.messages
                } else {
                    prev.map_or(0, |p| p.messages)
                },
                bytes: if last { metrics.bytes } else { prev.map_or(0, |p| p.bytes) },
            });
        }
        observer(&fed, &outcome)?;
    }
    metrics.variance_clamps = fed.server.variance_clamps;
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(env: EnvKind) -> ExperimentConfig {
        ExperimentConfig {
            env,
            n_states: 3,
            n_actions: 2,
            horizon: 3,
            n_agents: 3,
            episodes: 40,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = ExperimentConfig {
            delta: 1.5,
            ..ExperimentConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidInput { field: "delta", .. })));
        let bad = ExperimentConfig {
            episodes: 0,
            ..ExperimentConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidInput { field: "T", .. })));
        let bad = ExperimentConfig {
            env: EnvKind::LowerBound,
            horizon: 4,
            eps_p: 0.6,
            ..ExperimentConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidInput { field: "eps_p", .. })));
    }

    #[test]
    fn r_max_second_term_vanishes_when_nu_is_large() {
        let b = r_max_bound(2, 3, 4, 5, 10, 1000.0).unwrap();
        assert!((b - 2.0 * 60.0 * 1000f64.log2()).abs() < 1e-9);
        let b2 = r_max_bound(2, 6, 4, 5, 10, 1000.0).unwrap();
        assert!((b2 - 2.0 * b).abs() < 1e-9);
        assert!(r_max_bound(2, 3, 4, 5, 10, 1.0).is_err());
        let with_global = r_max_bound(1, 1, 1, 1, 1000, 10.0).unwrap();
        assert!((with_global - (10f64.log2() + 100f64.ln() / (8.0f64 / 7.0).ln())).abs() < 1e-9);
    }

    #[test]
    fn records_cover_every_episode() {
        let m = run_experiment(&small(EnvKind::Synthetic)).unwrap();
        assert_eq!(m.episodes.len(), 40);
        for (k, w) in m.episodes.windows(2).enumerate() {
            assert_eq!(w[0].episode, k as u64 + 1);
            assert!(w[1].cum_common_regret >= w[0].cum_common_regret);
            assert!(w[1].comm_rounds >= w[0].comm_rounds);
            assert!(w[1].messages >= w[0].messages);
        }
        assert_eq!(m.episodes.last().unwrap().messages, m.messages);
    }

    #[test]
    fn injected_optimal_policy_has_zero_regret() {
        for env in [EnvKind::Synthetic, EnvKind::GridWorld] {
            let cfg = ExperimentConfig {
                horizon: if env == EnvKind::GridWorld { 6 } else { 3 },
                eps_p: 0.2,
                ..small(env)
            };
            let fleet = cfg.build_fleet().unwrap();
            let pi = optimal_values(fleet.common()).unwrap().1;
            let opts = RunOptions {
                initial_policy: Some(pi),
                freeze_policy: true,
                track_federated_regret: false,
            };
            let m = run_experiment_with(&cfg, &opts, |_, _| Ok(())).unwrap();
            assert!(m.episodes.iter().all(|e| e.cum_common_regret == 0.0));
        }
    }

    #[test]
    fn concurrent_mode_communicates_every_episode() {
        let cfg = ExperimentConfig {
            algorithm: Algorithm::ConcurrentUcbvi,
            ..small(EnvKind::Synthetic)
        };
        let m = run_experiment(&cfg).unwrap();
        assert_eq!(m.comm_rounds, 40);
        assert_eq!(m.total_rounds, 40);
    }

    #[test]
    fn lower_bound_env_runs() {
        let cfg = ExperimentConfig {
            env: EnvKind::LowerBound,
            horizon: 2,
            eps_p: 0.5,
            ..small(EnvKind::LowerBound)
        };
        let m = run_experiment(&cfg).unwrap();
        assert_eq!(m.optimal_value, 1.5);
        // a single action: every policy is optimal
        assert_eq!(m.final_regret(), 0.0);
    }

    #[test]
    fn federated_estimate_is_reported_on_request() {
        let cfg = ExperimentConfig {
            eps_p: 0.3,
            ..small(EnvKind::Synthetic)
        };
        let opts = RunOptions {
            track_federated_regret: true,
            ..RunOptions::default()
        };
        let m = run_experiment_with(&cfg, &opts, |_, _| Ok(())).unwrap();
        assert!(m.federated_regret_estimate.is_some());
        assert!(run_experiment(&cfg).unwrap().federated_regret_estimate.is_none());
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = small(EnvKind::GridWorld);
        let cfg = ExperimentConfig { eps_p: 0.1, ..cfg };
        assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
    }
}
