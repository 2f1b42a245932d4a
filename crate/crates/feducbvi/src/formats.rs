//! JSON documents: experiment configs, single MDPs and whole fleets.
//!
//! Tables are nested `[h][s][a][s']` for kernels and `[h][s][a]` for rewards.

use std::fs;
use std::path::Path;

use feducbvi_core::env::{Fleet, FleetParts};
use feducbvi_core::harness::{Algorithm, EnvKind, ExperimentConfig};
use feducbvi_core::mdp::TabularMdp;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    Gridworld,
    Synthetic,
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AlgorithmName {
    FedUcbvi,
    ConcurrentUcbvi,
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::FedUcbvi => Algorithm::FedUcbvi,
            AlgorithmName::ConcurrentUcbvi => Algorithm::ConcurrentUcbvi,
        }
    }
}

/// On-disk experiment config. Missing fields take the library defaults;
/// unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub env: EnvName,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub eps_p: f64,
    pub eps_r: f64,
    pub delta: f64,
    pub algorithm: AlgorithmName,
    pub seed: u64,
    pub sync_strict: bool,
    pub output_path: String,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile::from(&ExperimentConfig::default())
    }
}

impl From<&ExperimentConfig> for ConfigFile {
    fn from(c: &ExperimentConfig) -> Self {
        ConfigFile {
            env: match c.env {
                EnvKind::GridWorld => EnvName::Gridworld,
                EnvKind::Synthetic => EnvName::Synthetic,
                EnvKind::LowerBound => EnvName::LowerBound,
            },
            s: c.n_states,
            a: c.n_actions,
            h: c.horizon,
            m: c.n_agents,
            t: c.episodes,
            eps_p: c.eps_p,
            eps_r: c.eps_r,
            delta: c.delta,
            algorithm: match c.algorithm {
                Algorithm::FedUcbvi => AlgorithmName::FedUcbvi,
                Algorithm::ConcurrentUcbvi => AlgorithmName::ConcurrentUcbvi,
            },
            seed: c.seed,
            sync_strict: c.sync_strict,
            output_path: c.output_path.clone(),
        }
    }
}

impl From<&ConfigFile> for ExperimentConfig {
    fn from(f: &ConfigFile) -> Self {
        ExperimentConfig {
            env: match f.env {
                EnvName::Gridworld => EnvKind::GridWorld,
                EnvName::Synthetic => EnvKind::Synthetic,
                EnvName::LowerBound => EnvKind::LowerBound,
            },
            n_states: f.s,
            n_actions: f.a,
            horizon: f.h,
            n_agents: f.m,
            episodes: f.t,
            eps_p: f.eps_p,
            eps_r: f.eps_r,
            delta: f.delta,
            algorithm: f.algorithm.into(),
            seed: f.seed,
            sync_strict: f.sync_strict,
            output_path: f.output_path.clone(),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data always serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Reads and validates an experiment config.
pub fn load_config(path: &Path) -> AppResult<ExperimentConfig> {
    let file: ConfigFile = read_json(path)?;
    let cfg = ExperimentConfig::from(&file);
    cfg.validate()?;
    Ok(cfg)
}

type Kernel = Vec<Vec<Vec<Vec<f64>>>>;
type Rewards = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "A")]
    pub a: usize,
    pub start_state: usize,
    pub kernel: Kernel,
    pub reward: Rewards,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetFile {
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub start_state: usize,
    pub eps_p: f64,
    pub eps_r: f64,
    pub common_kernel: Kernel,
    /// The individual components `P^ind`, not the agents' mixture kernels.
    pub individual_kernels: Vec<Kernel>,
    /// Per-agent rewards; the common reward is their mean.
    pub agent_rewards: Vec<Rewards>,
}

fn shape_error(what: &str, expected: usize, found: usize) -> AppError {
    AppError::Config(format!("{what}: expected {expected} entries, found {found}"))
}

fn check_len<T>(v: &[T], expected: usize, what: &str) -> AppResult<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(shape_error(what, expected, v.len()))
    }
}

fn flatten_rewards(r: &Rewards, h: usize, s: usize, a: usize) -> AppResult<Vec<f64>> {
    check_len(r, h, "reward steps")?;
    let mut out = Vec::with_capacity(h * s * a);
    for step in r {
        check_len(step, s, "reward states")?;
        for row in step {
            check_len(row, a, "reward actions")?;
            out.extend_from_slice(row);
        }
    }
    Ok(out)
}

fn flatten_kernel(k: &Kernel, h: usize, s: usize, a: usize) -> AppResult<Vec<f64>> {
    check_len(k, h, "kernel steps")?;
    let mut out = Vec::with_capacity(h * s * a * s);
    for step in k {
        check_len(step, s, "kernel states")?;
        for per_state in step {
            check_len(per_state, a, "kernel actions")?;
            for row in per_state {
                check_len(row, s, "kernel row")?;
                out.extend_from_slice(row);
            }
        }
    }
    Ok(out)
}

fn nest_rewards(flat: &[f64], h: usize, s: usize, a: usize) -> Rewards {
    (0..h)
        .map(|i| (0..s).map(|j| flat[(i * s + j) * a..(i * s + j + 1) * a].to_vec()).collect())
        .collect()
}

fn nest_kernel(flat: &[f64], h: usize, s: usize, a: usize) -> Kernel {
    (0..h)
        .map(|i| {
            (0..s)
                .map(|j| {
                    (0..a)
                        .map(|k| {
                            let base = ((i * s + j) * a + k) * s;
                            flat[base..base + s].to_vec()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

impl MdpFile {
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let (h, s, a) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
        MdpFile {
            h,
            s,
            a,
            start_state: mdp.start_state(),
            kernel: nest_kernel(mdp.kernel(), h, s, a),
            reward: nest_rewards(mdp.rewards(), h, s, a),
        }
    }

    /// Checks shapes only; stochasticity is left to the caller so corrupt
    /// tables can still be loaded and inspected.
    pub fn to_mdp_unchecked(&self) -> AppResult<TabularMdp> {
        let kernel = flatten_kernel(&self.kernel, self.h, self.s, self.a)?;
        let reward = flatten_rewards(&self.reward, self.h, self.s, self.a)?;
        Ok(TabularMdp::new_unchecked(self.h, self.s, self.a, kernel, reward, self.start_state))
    }
}

impl FleetFile {
    pub fn from_fleet(fleet: &Fleet) -> Self {
        let c = fleet.common();
        let (h, s, a) = (c.horizon(), c.n_states(), c.n_actions());
        let m = fleet.n_agents();
        FleetFile {
            h,
            s,
            a,
            m,
            start_state: c.start_state(),
            eps_p: fleet.eps_p(),
            eps_r: fleet.eps_r(),
            common_kernel: nest_kernel(c.kernel(), h, s, a),
            individual_kernels: (0..m).map(|i| nest_kernel(fleet.individual_kernel(i), h, s, a)).collect(),
            agent_rewards: (0..m).map(|i| nest_rewards(fleet.agent_reward(i), h, s, a)).collect(),
        }
    }

    /// Checks shapes only, like [`MdpFile::to_mdp_unchecked`].
    pub fn to_fleet_unchecked(&self) -> AppResult<Fleet> {
        let (h, s, a) = (self.h, self.s, self.a);
        check_len(&self.individual_kernels, self.m, "individual_kernels")?;
        check_len(&self.agent_rewards, self.m, "agent_rewards")?;
        let individual_kernels = self
            .individual_kernels
            .iter()
            .map(|k| flatten_kernel(k, h, s, a))
            .collect::<AppResult<_>>()?;
        let agent_rewards = self
            .agent_rewards
            .iter()
            .map(|r| flatten_rewards(r, h, s, a))
            .collect::<AppResult<_>>()?;
        Ok(Fleet::new_unchecked(FleetParts {
            horizon: h,
            n_states: s,
            n_actions: a,
            start_state: self.start_state,
            common_kernel: flatten_kernel(&self.common_kernel, h, s, a)?,
            individual_kernels,
            agent_rewards,
            eps_p: self.eps_p,
            eps_r: self.eps_r,
        })?)
    }
}

pub fn load_fleet(path: &Path) -> AppResult<Fleet> {
    read_json::<FleetFile>(path)?.to_fleet_unchecked()
}

pub fn save_fleet(path: &Path, fleet: &Fleet) -> AppResult<()> {
    write_json(path, &FleetFile::from_fleet(fleet))
}

pub fn load_mdp(path: &Path) -> AppResult<TabularMdp> {
    read_json::<MdpFile>(path)?.to_mdp_unchecked()
}

pub fn save_mdp(path: &Path, mdp: &TabularMdp) -> AppResult<()> {
    write_json(path, &MdpFile::from_mdp(mdp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use feducbvi_core::env::make_synthetic;
    use feducbvi_core::rng::env_stream;

    #[test]
    fn config_round_trips_with_exact_field_names() {
        let text = r#"{"env":"gridworld","S":8,"A":4,"H":10,"M":3,"T":50,"eps_p":0.1,
            "eps_r":0.0,"delta":0.1,"algorithm":"concurrent_ucbvi","seed":7,
            "sync_strict":false,"output_path":"x.csv"}"#;
        let f: ConfigFile = serde_json::from_str(text).unwrap();
        let cfg = ExperimentConfig::from(&f);
        assert_eq!(cfg.env, EnvKind::GridWorld);
        assert_eq!(cfg.algorithm, Algorithm::ConcurrentUcbvi);
        assert_eq!((cfg.n_agents, cfg.episodes, cfg.seed), (3, 50, 7));
        assert_eq!(ConfigFile::from(&cfg), f);
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"detla": 0.1}"#).is_err());
        let partial: ConfigFile = serde_json::from_str(r#"{"T": 5}"#).unwrap();
        assert_eq!(partial.t, 5);
        assert_eq!(partial.delta, 0.1);
    }

    #[test]
    fn fleet_round_trips() {
        let fleet = make_synthetic(3, 2, 2, 2, 0.2, 0.1, &mut env_stream(1)).unwrap();
        let file = FleetFile::from_fleet(&fleet);
        let text = serde_json::to_string(&file).unwrap();
        let back: FleetFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_fleet_unchecked().unwrap(), fleet);
    }

    #[test]
    fn mdp_round_trips_and_ragged_tables_fail() {
        let fleet = make_synthetic(3, 2, 2, 1, 0.0, 0.0, &mut env_stream(2)).unwrap();
        let mut file = MdpFile::from_mdp(fleet.common());
        assert_eq!(&file.to_mdp_unchecked().unwrap(), fleet.common());
        file.kernel[1][0][1].pop();
        assert!(matches!(file.to_mdp_unchecked(), Err(AppError::Config(_))));
    }
}
