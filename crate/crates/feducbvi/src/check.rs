//! Invariant battery: stochasticity, heterogeneity bounds, oracle
//! equivalence, counter conservation, optimism and the round cap.

use std::fmt;

use feducbvi_core::env::{Fleet, HETEROGENEITY_TOL};
use feducbvi_core::harness::{run_on_fleet, ExperimentConfig, RunOptions};
use feducbvi_core::mdp::{evaluate_policy, optimal_values, TabularMdp};
use feducbvi_core::protocol::check_counter_conservation;
use rayon::prelude::*;

/// Learning runs used by the statistical checks.
pub const CHECK_RUNS: u64 = 10;
/// Tolerance of the exact oracle comparisons.
pub const ORACLE_TOL: f64 = 1e-12;
/// Brute-force policy enumeration is attempted up to this many policies.
pub const MAX_ENUMERATED_POLICIES: u128 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    /// True when nothing failed or was skipped.
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status == Status::Pass)
    }
}

fn outcome(name: &'static str, ok: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn stochasticity(fleet: &Fleet) -> CheckOutcome {
    let c = fleet.common();
    let mut problems = Vec::new();
    if let Err(v) = c.validate() {
        problems.push(format!("common: {v}"));
    }
    for i in 0..fleet.n_agents() {
        let individual = TabularMdp::new_unchecked(
            c.horizon(),
            c.n_states(),
            c.n_actions(),
            fleet.individual_kernel(i).to_vec(),
            fleet.agent_reward(i).to_vec(),
            c.start_state(),
        );
        if let Err(v) = individual.validate() {
            problems.push(format!("agent {i}: {v}"));
        }
    }
    let ok = problems.is_empty();
    let detail = if ok {
        format!("{} agents, every row sums to 1", fleet.n_agents())
    } else {
        problems.join("; ")
    };
    outcome("stochasticity", ok, detail)
}

fn tv_bound(fleet: &Fleet) -> CheckOutcome {
    let dev = fleet.max_kernel_deviation();
    outcome(
        "kernel_tv_bound",
        dev <= fleet.eps_p() + HETEROGENEITY_TOL,
        format!("max L1 deviation {dev:.3e} vs eps_p {}", fleet.eps_p()),
    )
}

fn reward_spread(fleet: &Fleet) -> CheckOutcome {
    let spread = fleet.max_reward_spread();
    outcome(
        "reward_spread_bound",
        spread <= fleet.eps_r() + HETEROGENEITY_TOL,
        format!("max reward spread {spread:.3e} vs eps_r {}", fleet.eps_r()),
    )
}

/// Best start-state value over all deterministic Markov policies, by
/// forward propagation of the state distribution.
fn enumerate_best(mdp: &TabularMdp) -> f64 {
    let (hz, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let cells = hz * ns;
    let total = (na as u128).pow(cells as u32);
    let mut actions = vec![0usize; cells];
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let mut c = code;
        for slot in actions.iter_mut() {
            *slot = (c % na as u128) as usize;
            c /= na as u128;
        }
        let mut dist = vec![0.0; ns];
        dist[mdp.start_state()] = 1.0;
        let mut value = 0.0;
        for h in 0..hz {
            let mut next = vec![0.0; ns];
            for s in 0..ns {
                let a = actions[h * ns + s];
                value += dist[s] * mdp.reward(h, s, a);
                for (n, p) in next.iter_mut().zip(mdp.kernel_row(h, s, a)) {
                    *n += dist[s] * p;
                }
            }
            dist = next;
        }
        best = best.max(value);
    }
    best
}

fn oracle_equivalence(fleet: &Fleet) -> CheckOutcome {
    let c = fleet.common();
    let (v, pi) = match optimal_values(c) {
        Ok(x) => x,
        Err(e) => return outcome("oracle_equivalence", false, e.to_string()),
    };
    let eval = match evaluate_policy(c, &pi) {
        Ok(x) => x,
        Err(e) => return outcome("oracle_equivalence", false, e.to_string()),
    };
    let (hz, ns, na) = (c.horizon(), c.n_states(), c.n_actions());
    let mut worst_eval = 0.0f64;
    let mut worst_bellman = 0.0f64;
    for h in 0..hz {
        for s in 0..ns {
            worst_eval = worst_eval.max((eval.v(h, s) - v.v(h, s)).abs());
            let backup = (0..na)
                .map(|a| {
                    c.reward(h, s, a)
                        + c.kernel_row(h, s, a)
                            .iter()
                            .zip(v.v_row(h + 1))
                            .map(|(p, x)| p * x)
                            .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            worst_bellman = worst_bellman.max((backup - v.v(h, s)).abs());
        }
    }
    let mut ok = worst_eval <= ORACLE_TOL && worst_bellman <= ORACLE_TOL;
    let mut detail = format!("policy evaluation gap {worst_eval:.1e}, Bellman residual {worst_bellman:.1e}");
    let policies = (na as u128).checked_pow((hz * ns) as u32);
    if policies.is_some_and(|p| p <= MAX_ENUMERATED_POLICIES) {
        let bf = enumerate_best(c);
        let gap = (bf - v.v(0, c.start_state())).abs();
        ok &= gap <= ORACLE_TOL;
        detail.push_str(&format!(", enumeration gap {gap:.1e}"));
    }
    outcome("oracle_equivalence", ok, detail)
}

#[derive(Debug, Default)]
struct RunStats {
    error: Option<String>,
    rounds: u64,
    r_max: f64,
    optimistic: bool,
}

fn learning_run(cfg: &ExperimentConfig, fleet: &Fleet, seed: u64, v_star: f64, slack: f64) -> RunStats {
    let cfg = ExperimentConfig {
        seed,
        ..cfg.clone()
    };
    let s1 = fleet.common().start_state();
    let mut optimistic = true;
    let res = run_on_fleet(&cfg, fleet, &RunOptions::default(), |fed, _| {
        check_counter_conservation(&fed.server, &fed.clients)?;
        for c in &fed.clients {
            c.check_consistency()?;
        }
        optimistic &= fed.server.v(0, s1) >= v_star - slack;
        Ok(())
    });
    match res {
        Ok(m) => RunStats {
            error: None,
            rounds: m.total_rounds,
            r_max: m.r_max_bound,
            optimistic,
        },
        Err(e) => RunStats {
            error: Some(format!("seed {seed}: {e}")),
            ..RunStats::default()
        },
    }
}

fn learning_checks(cfg: &ExperimentConfig, fleet: &Fleet) -> Vec<CheckOutcome> {
    let c = fleet.common();
    let v_star = match optimal_values(c) {
        Ok((v, _)) => v.v(0, c.start_state()),
        Err(e) => return vec![outcome("counter_conservation", false, e.to_string())],
    };
    let h = c.horizon() as f64;
    let slack = (2.0 * fleet.eps_r() + 3.0 * fleet.eps_p() * h) * h;
    let runs: Vec<RunStats> = (0..CHECK_RUNS)
        .into_par_iter()
        .map(|k| learning_run(cfg, fleet, cfg.seed.wrapping_add(k), v_star, slack))
        .collect();

    let errors: Vec<&str> = runs.iter().filter_map(|r| r.error.as_deref()).collect();
    let conservation = outcome(
        "counter_conservation",
        errors.is_empty(),
        if errors.is_empty() {
            format!("{CHECK_RUNS} runs, N_hat and counters consistent after every round")
        } else {
            errors.join("; ")
        },
    );
    if !errors.is_empty() {
        return vec![
            conservation,
            CheckOutcome {
                name: "optimism",
                status: Status::Skip,
                detail: "learning runs failed".into(),
            },
            CheckOutcome {
                name: "round_bound",
                status: Status::Skip,
                detail: "learning runs failed".into(),
            },
        ];
    }

    let good = runs.iter().filter(|r| r.optimistic).count();
    let frac = good as f64 / runs.len() as f64;
    let optimism = outcome(
        "optimism",
        frac >= 1.0 - cfg.delta,
        format!("{good}/{CHECK_RUNS} runs kept V_hat_1(s1) >= V* - {slack:.3} at every round (need {:.2})", 1.0 - cfg.delta),
    );
    let worst = runs
        .iter()
        .map(|r| r.rounds as f64 / r.r_max)
        .fold(0.0, f64::max);
    let max_rounds = runs.iter().map(|r| r.rounds).max().unwrap_or(0);
    let round_bound = outcome(
        "round_bound",
        worst <= 1.0,
        format!("max rounds {max_rounds}, R_max {:.1}", runs[0].r_max),
    );
    vec![conservation, optimism, round_bound]
}

/// Runs the whole battery against `fleet` with the learning parameters of
/// `cfg`. Learning checks are skipped when the fleet itself is invalid.
pub fn run_checks(cfg: &ExperimentConfig, fleet: &Fleet) -> CheckReport {
    let mut outcomes = vec![stochasticity(fleet), tv_bound(fleet), reward_spread(fleet)];
    let fleet_ok = outcomes.iter().all(|o| o.status == Status::Pass);
    if fleet_ok {
        outcomes.push(oracle_equivalence(fleet));
        outcomes.extend(learning_checks(cfg, fleet));
    } else {
        for name in ["oracle_equivalence", "counter_conservation", "optimism", "round_bound"] {
            outcomes.push(CheckOutcome {
                name,
                status: Status::Skip,
                detail: "fleet is invalid".into(),
            });
        }
    }
    CheckReport { outcomes }
}
