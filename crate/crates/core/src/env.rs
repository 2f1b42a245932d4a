//! Heterogeneous agent fleets and the built-in environments.
//!
//! Agent `i` transitions with the mixture kernel
//! `P^i = (1 - eps_p) P^c + eps_p P^ind_i` and receives its own rewards
//! `r^i`, all within `eps_r` of each other in sup norm. The common MDP pairs
//! `P^c` with the averaged reward.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::mdp::{draw_from_row, TabularMdp};

/// Float slack allowed when scanning the heterogeneity bounds.
pub const HETEROGENEITY_TOL: f64 = 1e-12;

/// Raw tables for a fleet. `individual_kernels[i]` and `agent_rewards[i]`
/// use the same flattened layouts as [`TabularMdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct FleetParts {
    pub horizon: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub start_state: usize,
    pub common_kernel: Vec<f64>,
    pub individual_kernels: Vec<Vec<f64>>,
    pub agent_rewards: Vec<Vec<f64>>,
    pub eps_p: f64,
    pub eps_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    common: TabularMdp,
    individual_kernels: Vec<Vec<f64>>,
    agent_rewards: Vec<Vec<f64>>,
    eps_p: f64,
    eps_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixtureDraw {
    pub next_state: usize,
    /// Whether the individual component of the mixture was selected.
    pub used_individual: bool,
}

/// Elementwise mean that is exact when all inputs are equal.
fn mean_rewards(rewards: &[Vec<f64>]) -> Vec<f64> {
    let m = rewards.len() as f64;
    let first = &rewards[0];
    (0..first.len())
        .map(|j| {
            let spread: f64 = rewards.iter().map(|r| r[j] - first[j]).sum();
            first[j] + spread / m
        })
        .collect()
}

impl Fleet {
    /// Builds a fleet, deriving the common reward as the agents' mean, and
    /// checks every fleet invariant.
    pub fn new(parts: FleetParts) -> Result<Self> {
        let fleet = Self::new_unchecked(parts)?;
        fleet.validate()?;
        Ok(fleet)
    }

    /// Assembles a fleet while checking only table shapes. Heterogeneity and
    /// stochasticity are left to [`Fleet::validate`].
    pub fn new_unchecked(parts: FleetParts) -> Result<Self> {
        let FleetParts {
            horizon,
            n_states,
            n_actions,
            start_state,
            common_kernel,
            individual_kernels,
            agent_rewards,
            eps_p,
            eps_r,
        } = parts;
        if individual_kernels.is_empty() {
            return Err(Error::input("M", "a fleet needs at least one agent"));
        }
        if individual_kernels.len() != agent_rewards.len() {
            return Err(Error::ShapeMismatch {
                what: "agent_rewards",
                expected: individual_kernels.len(),
                found: agent_rewards.len(),
            });
        }
        let cells = horizon * n_states * n_actions;
        for k in &individual_kernels {
            if k.len() != cells * n_states {
                return Err(Error::ShapeMismatch {
                    what: "individual kernel",
                    expected: cells * n_states,
                    found: k.len(),
                });
            }
        }
        for r in &agent_rewards {
            if r.len() != cells {
                return Err(Error::ShapeMismatch {
                    what: "agent reward",
                    expected: cells,
                    found: r.len(),
                });
            }
        }
        let common_reward = mean_rewards(&agent_rewards);
        let common = TabularMdp::new_unchecked(
            horizon,
            n_states,
            n_actions,
            common_kernel,
            common_reward,
            start_state,
        );
        Ok(Fleet {
            common,
            individual_kernels,
            agent_rewards,
            eps_p,
            eps_r,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eps_p) {
            return Err(Error::input("eps_p", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.eps_r) {
            return Err(Error::input("eps_r", "must lie in [0, 1)"));
        }
        self.common.validate().map_err(Error::InvalidMdp)?;
        for i in 0..self.n_agents() {
            self.individual_mdp(i).validate().map_err(Error::InvalidMdp)?;
            self.agent_mdp(i)?.validate().map_err(Error::InvalidMdp)?;
        }
        let dev = self.max_kernel_deviation();
        if dev > self.eps_p + HETEROGENEITY_TOL {
            return Err(Error::Invariant(format!(
                "kernel L1 deviation {dev} exceeds eps_p = {}",
                self.eps_p
            )));
        }
        let spread = self.max_reward_spread();
        if spread > self.eps_r + HETEROGENEITY_TOL {
            return Err(Error::Invariant(format!(
                "reward spread {spread} exceeds eps_r = {}",
                self.eps_r
            )));
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.individual_kernels.len()
    }

    /// Common MDP: shared kernel with the agents' averaged reward.
    pub fn common(&self) -> &TabularMdp {
        &self.common
    }

    pub fn eps_p(&self) -> f64 {
        self.eps_p
    }

    pub fn eps_r(&self) -> f64 {
        self.eps_r
    }

    pub fn individual_kernel(&self, i: usize) -> &[f64] {
        &self.individual_kernels[i]
    }

    pub fn agent_reward(&self, i: usize) -> &[f64] {
        &self.agent_rewards[i]
    }

    fn check_agent(&self, i: usize) -> Result<()> {
        if i >= self.n_agents() {
            return Err(Error::IndexOutOfRange {
                what: "agent",
                index: i,
                len: self.n_agents(),
            });
        }
        Ok(())
    }

    fn individual_mdp(&self, i: usize) -> TabularMdp {
        let c = &self.common;
        TabularMdp::new_unchecked(
            c.horizon(),
            c.n_states(),
            c.n_actions(),
            self.individual_kernels[i].clone(),
            self.agent_rewards[i].clone(),
            c.start_state(),
        )
    }

    /// Materializes agent `i`'s MDP with the mixture kernel.
    pub fn agent_mdp(&self, i: usize) -> Result<TabularMdp> {
        self.check_agent(i)?;
        let c = &self.common;
        let w = self.eps_p;
        let kernel = c
            .kernel()
            .iter()
            .zip(&self.individual_kernels[i])
            .map(|(pc, pi)| (1.0 - w) * pc + w * pi)
            .collect();
        Ok(TabularMdp::new_unchecked(
            c.horizon(),
            c.n_states(),
            c.n_actions(),
            kernel,
            self.agent_rewards[i].clone(),
            c.start_state(),
        ))
    }

    /// Draws a next state for agent `i` by first choosing the mixture
    /// component, then sampling from it. Uses two uniform draws.
    pub fn sample_mixture_transition<R: RngCore + ?Sized>(
        &self,
        i: usize,
        h: usize,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> Result<MixtureDraw> {
        self.check_agent(i)?;
        let c = &self.common;
        if h >= c.horizon() || s >= c.n_states() || a >= c.n_actions() {
            return Err(Error::IndexOutOfRange {
                what: "(h, s, a)",
                index: c.sa_index(h, s, a),
                len: c.horizon() * c.n_states() * c.n_actions(),
            });
        }
        let used_individual = rng.gen::<f64>() < self.eps_p;
        let u: f64 = rng.gen();
        let next_state = if used_individual {
            let base = c.sa_index(h, s, a) * c.n_states();
            draw_from_row(&self.individual_kernels[i][base..base + c.n_states()], u)
        } else {
            draw_from_row(c.kernel_row(h, s, a), u)
        };
        Ok(MixtureDraw {
            next_state,
            used_individual,
        })
    }

    /// `max_{i,h,s,a} || P^c(.|s,a) - P^i(.|s,a) ||_1` by exhaustive scan.
    pub fn max_kernel_deviation(&self) -> f64 {
        let c = &self.common;
        let ns = c.n_states();
        let w = self.eps_p;
        let mut worst = 0.0f64;
        for ind in &self.individual_kernels {
            for (pc_row, pi_row) in c.kernel().chunks(ns).zip(ind.chunks(ns)) {
                let l1: f64 = pc_row
                    .iter()
                    .zip(pi_row)
                    .map(|(pc, pi)| (pc - ((1.0 - w) * pc + w * pi)).abs())
                    .sum();
                worst = worst.max(l1);
            }
        }
        worst
    }

    /// `max_{i,j,h,s,a} |r^i - r^j|` by exhaustive scan.
    pub fn max_reward_spread(&self) -> f64 {
        let cells = self.agent_rewards[0].len();
        (0..cells)
            .map(|j| {
                let (lo, hi) = self
                    .agent_rewards
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                        (lo.min(r[j]), hi.max(r[j]))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// Uniform draw from the probability simplex of dimension `k`
/// (Dirichlet(1, ..., 1)) via normalized standard exponentials.
pub fn uniform_simplex<R: RngCore + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..k).map(|_| -libm::log(1.0 - rng.gen::<f64>())).collect();
        let total: f64 = e.iter().sum();
        if total > 0.0 {
            return e.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Individual row: midpoint of the common row and a random distribution over
/// `support`. The midpoint keeps `||P^c - P^i||_1 <= eps_p` for every draw.
fn individual_row<R: RngCore + ?Sized>(
    rng: &mut R,
    common_row: &[f64],
    support: &[usize],
) -> Vec<f64> {
    let draw = uniform_simplex(rng, support.len());
    let mut row: Vec<f64> = common_row.iter().map(|p| 0.5 * p).collect();
    for (&j, d) in support.iter().zip(draw) {
        row[j] += 0.5 * d;
    }
    row
}

// ---------------------------------------------------------------- GridWorld

/// Geometry of a GridWorld. Cells are `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub walls: Vec<(usize, usize)>,
    pub start: (usize, usize),
    pub target: (usize, usize),
    pub horizon: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            rows: 3,
            cols: 3,
            walls: vec![(1, 1)],
            start: (0, 0),
            target: (2, 2),
            horizon: 10,
        }
    }
}

/// Action encoding: up, down, left, right.
pub const GRID_ACTIONS: usize = 4;

/// Probability of landing on the intended square under the common kernel.
pub const GRID_INTENDED_PROB: f64 = 0.8;

struct Grid {
    cols: usize,
    rows: usize,
    /// cell -> state index, `None` for walls.
    state_of: Vec<Option<usize>>,
    cell_of: Vec<(usize, usize)>,
}

impl Grid {
    fn new(spec: &GridSpec) -> Result<Self> {
        let in_bounds = |(r, c): (usize, usize)| r < spec.rows && c < spec.cols;
        if spec.rows == 0 || spec.cols == 0 {
            return Err(Error::input("gridworld", "grid must be non-empty"));
        }
        if spec.horizon == 0 {
            return Err(Error::input("H", "must be positive"));
        }
        if let Some(w) = spec.walls.iter().find(|w| !in_bounds(**w)) {
            return Err(Error::input("gridworld", format!("wall {w:?} outside the grid")));
        }
        for (name, cell) in [("start", spec.start), ("target", spec.target)] {
            if !in_bounds(cell) || spec.walls.contains(&cell) {
                return Err(Error::input(
                    "gridworld",
                    format!("{name} {cell:?} must be an open in-bounds cell"),
                ));
            }
        }
        let mut state_of = vec![None; spec.rows * spec.cols];
        let mut cell_of = Vec::new();
        for r in 0..spec.rows {
            for c in 0..spec.cols {
                if !spec.walls.contains(&(r, c)) {
                    state_of[r * spec.cols + c] = Some(cell_of.len());
                    cell_of.push((r, c));
                }
            }
        }
        if cell_of.len() < 2 {
            return Err(Error::input("gridworld", "need at least two open cells"));
        }
        Ok(Grid {
            cols: spec.cols,
            rows: spec.rows,
            state_of,
            cell_of,
        })
    }

    fn state(&self, cell: (usize, usize)) -> usize {
        self.state_of[cell.0 * self.cols + cell.1].expect("open cell")
    }

    /// Open neighbor reached by action `a`, if any.
    fn neighbor(&self, s: usize, a: usize) -> Option<usize> {
        let (r, c) = self.cell_of[s];
        let (nr, nc) = match a {
            0 => (r.checked_sub(1)?, c),
            1 => (r + 1, c),
            2 => (r, c.checked_sub(1)?),
            _ => (r, c + 1),
        };
        if nr >= self.rows || nc >= self.cols {
            return None;
        }
        self.state_of[nr * self.cols + nc]
    }

    fn open_neighbors(&self, s: usize) -> Vec<usize> {
        (0..GRID_ACTIONS).filter_map(|a| self.neighbor(s, a)).collect()
    }

    /// Common row: 0.8 on the intended square (self when blocked), the rest
    /// spread uniformly over the other open neighbors (self when none).
    fn common_row(&self, s: usize, a: usize) -> Vec<f64> {
        let n = self.cell_of.len();
        let mut row = vec![0.0; n];
        let intended = self.neighbor(s, a).unwrap_or(s);
        row[intended] += GRID_INTENDED_PROB;
        let others: Vec<usize> = self
            .open_neighbors(s)
            .into_iter()
            .filter(|&j| j != intended)
            .collect();
        let rest = 1.0 - GRID_INTENDED_PROB;
        if others.is_empty() {
            row[s] += rest;
        } else {
            for &j in &others {
                row[j] += rest / others.len() as f64;
            }
        }
        row
    }
}

/// GridWorld fleet. Rewards are `1` while occupying the target and identical
/// across agents; kernels are stationary in `h`.
pub fn make_gridworld<R: RngCore + ?Sized>(
    spec: &GridSpec,
    n_agents: usize,
    eps_p: f64,
    eps_r: f64,
    rng: &mut R,
) -> Result<Fleet> {
    if n_agents == 0 {
        return Err(Error::input("M", "must be positive"));
    }
    let grid = Grid::new(spec)?;
    let (hz, ns, na) = (spec.horizon, grid.cell_of.len(), GRID_ACTIONS);
    let target = grid.state(spec.target);

    let mut common_kernel = Vec::with_capacity(hz * ns * na * ns);
    let mut reward = Vec::with_capacity(hz * ns * na);
    for _h in 0..hz {
        for s in 0..ns {
            for a in 0..na {
                common_kernel.extend(grid.common_row(s, a));
                reward.push(if s == target { 1.0 } else { 0.0 });
            }
        }
    }

    let mut individual_kernels = Vec::with_capacity(n_agents);
    for _ in 0..n_agents {
        let mut stationary = Vec::with_capacity(ns * na * ns);
        for s in 0..ns {
            let mut support = grid.open_neighbors(s);
            if support.is_empty() {
                support.push(s);
            }
            for a in 0..na {
                stationary.extend(individual_row(rng, &grid.common_row(s, a), &support));
            }
        }
        individual_kernels.push(stationary.repeat(hz));
    }

    Fleet::new(FleetParts {
        horizon: hz,
        n_states: ns,
        n_actions: na,
        start_state: grid.state(spec.start),
        common_kernel,
        individual_kernels,
        agent_rewards: vec![reward; n_agents],
        eps_p,
        eps_r,
    })
}

/// Random fleet with simplex-uniform kernels and uniform rewards.
///
/// Draw order: common kernel, base rewards, then per agent its individual
/// kernel followed by its reward offsets. The common MDP therefore does not
/// depend on the number of agents when `eps_r = 0`.
pub fn make_synthetic<R: RngCore + ?Sized>(
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    n_agents: usize,
    eps_p: f64,
    eps_r: f64,
    rng: &mut R,
) -> Result<Fleet> {
    for (field, v) in [("S", n_states), ("A", n_actions), ("H", horizon), ("M", n_agents)] {
        if v == 0 {
            return Err(Error::input(field, "must be positive"));
        }
    }
    if !(0.0..1.0).contains(&eps_r) {
        return Err(Error::input("eps_r", "must lie in [0, 1)"));
    }
    let cells = horizon * n_states * n_actions;
    let all_states: Vec<usize> = (0..n_states).collect();

    let mut common_kernel = Vec::with_capacity(cells * n_states);
    for _ in 0..cells {
        common_kernel.extend(uniform_simplex(rng, n_states));
    }
    // base in [eps_r/2, 1 - eps_r/2), offsets in [-eps_r/2, eps_r/2): no clipping needed.
    let base: Vec<f64> = (0..cells)
        .map(|_| 0.5 * eps_r + (1.0 - eps_r) * rng.gen::<f64>())
        .collect();

    let mut individual_kernels = Vec::with_capacity(n_agents);
    let mut agent_rewards = Vec::with_capacity(n_agents);
    for _ in 0..n_agents {
        let mut k = Vec::with_capacity(cells * n_states);
        for row in common_kernel.chunks(n_states) {
            k.extend(individual_row(rng, row, &all_states));
        }
        individual_kernels.push(k);
        let r: Vec<f64> = base
            .iter()
            .map(|b| b + eps_r * (rng.gen::<f64>() - 0.5))
            .collect();
        agent_rewards.push(r);
    }

    Fleet::new(FleetParts {
        horizon,
        n_states,
        n_actions,
        start_state: 0,
        common_kernel,
        individual_kernels,
        agent_rewards,
        eps_p,
        eps_r,
    })
}

fn two_state_sink(horizon: usize, p: f64) -> TabularMdp {
    let mut kernel = Vec::with_capacity(horizon * 4);
    let mut reward = Vec::with_capacity(horizon * 2);
    for _ in 0..horizon {
        kernel.extend([1.0 - p, p, 0.0, 1.0]);
        reward.extend([1.0, 0.0]);
    }
    TabularMdp::new_unchecked(horizon, 2, 1, kernel, reward, 0)
}

/// Two-state, one-action MDP pair with a zero-reward sink: leak probability
/// `0` and `eps` respectively. Their values differ by `Omega(eps H^2)`.
pub fn make_lower_bound_mdp(horizon: usize, eps: f64) -> Result<(TabularMdp, TabularMdp)> {
    if horizon == 0 {
        return Err(Error::input("H", "must be positive"));
    }
    if !(eps > 0.0 && eps < 2.0 / horizon as f64 && eps <= 1.0) {
        return Err(Error::input("eps", "must satisfy 0 < eps < 2/H and eps <= 1"));
    }
    let pair = (two_state_sink(horizon, 0.0), two_state_sink(horizon, eps));
    pair.0.validate().map_err(Error::InvalidMdp)?;
    pair.1.validate().map_err(Error::InvalidMdp)?;
    Ok(pair)
}

/// Homogeneous fleet whose agents all run the leaky variant of
/// [`make_lower_bound_mdp`].
pub fn make_lower_bound_fleet(horizon: usize, eps: f64, n_agents: usize) -> Result<Fleet> {
    if n_agents == 0 {
        return Err(Error::input("M", "must be positive"));
    }
    let (_, leaky) = make_lower_bound_mdp(horizon, eps)?;
    Fleet::new(FleetParts {
        horizon,
        n_states: 2,
        n_actions: 1,
        start_state: 0,
        common_kernel: leaky.kernel().to_vec(),
        individual_kernels: vec![leaky.kernel().to_vec(); n_agents],
        agent_rewards: vec![leaky.rewards().to_vec(); n_agents],
        eps_p: 0.0,
        eps_r: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{evaluate_policy, optimal_values, Policy, ROW_SUM_TOL};
    use crate::rng::split;

    fn point_mass_fleet(eps_p: f64) -> Fleet {
        // one cell: common row e_0, individual row e_1
        Fleet::new_unchecked(FleetParts {
            horizon: 1,
            n_states: 3,
            n_actions: 1,
            start_state: 0,
            common_kernel: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            individual_kernels: vec![vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]],
            agent_rewards: vec![vec![0.0; 3]],
            eps_p,
            eps_r: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn mixture_row_is_convex_combination() {
        let m = point_mass_fleet(0.3).agent_mdp(0).unwrap();
        let row = m.kernel_row(0, 0, 0);
        assert!((row[0] - 0.7).abs() < 1e-15 && (row[1] - 0.3).abs() < 1e-15 && row[2] == 0.0);
    }

    #[test]
    fn zero_eps_p_reproduces_common_kernel_exactly() {
        let fleet = make_synthetic(4, 3, 3, 3, 0.0, 0.0, &mut split(5, u64::MAX)).unwrap();
        for i in 0..3 {
            assert_eq!(fleet.agent_mdp(i).unwrap().kernel(), fleet.common().kernel());
        }
        assert_eq!(fleet.max_kernel_deviation(), 0.0);
    }

    #[test]
    fn eps_p_of_one_is_rejected() {
        assert!(matches!(
            make_synthetic(2, 2, 2, 2, 1.0, 0.0, &mut split(1, 0)),
            Err(Error::InvalidInput { field: "eps_p", .. })
        ));
    }

    #[test]
    fn agent_index_is_checked() {
        let fleet = point_mass_fleet(0.3);
        assert!(fleet.agent_mdp(1).is_err());
        assert!(fleet.sample_mixture_transition(1, 0, 0, 0, &mut split(0, 0)).is_err());
        assert!(fleet.sample_mixture_transition(0, 1, 0, 0, &mut split(0, 0)).is_err());
    }

    #[test]
    fn zero_eps_p_never_uses_individual_component() {
        let fleet = point_mass_fleet(0.0);
        let mut rng = split(2, 0);
        for _ in 0..1000 {
            let d = fleet.sample_mixture_transition(0, 0, 0, 0, &mut rng).unwrap();
            assert!(!d.used_individual);
            assert_eq!(d.next_state, 0);
        }
    }

    #[test]
    fn default_gridworld_shape() {
        let fleet = make_gridworld(&GridSpec::default(), 3, 0.2, 0.0, &mut split(1, 0)).unwrap();
        let c = fleet.common();
        assert_eq!((c.n_states(), c.n_actions(), c.horizon()), (8, 4, 10));
        assert_eq!(c.start_state(), 0);
        // target (2,2) is the last open cell
        assert_eq!(c.reward(0, 7, 2), 1.0);
        assert_eq!(c.reward(0, 6, 2), 0.0);
        assert!(fleet.max_kernel_deviation() <= 0.2 + HETEROGENEITY_TOL);
    }

    #[test]
    fn gridworld_blocked_move_stays_put() {
        let fleet = make_gridworld(&GridSpec::default(), 1, 0.0, 0.0, &mut split(1, 0)).unwrap();
        let c = fleet.common();
        // state 0 = (0,0); up is outside: 0.8 self, 0.1 each to (0,1)=1 and (1,0)=3
        let row = c.kernel_row(0, 0, 0);
        assert!((row[0] - 0.8).abs() < 1e-15);
        assert!((row[1] - 0.1).abs() < 1e-15 && (row[3] - 0.1).abs() < 1e-15);
        // right from (0,0): 0.8 to (0,1), 0.2 to (1,0)
        let row = c.kernel_row(0, 0, 3);
        assert!((row[1] - 0.8).abs() < 1e-15 && (row[3] - 0.2).abs() < 1e-15);
        // down from (0,1) hits the wall at (1,1)
        let row = c.kernel_row(0, 1, 1);
        assert!((row[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn gridworld_rejects_walled_target() {
        let spec = GridSpec {
            walls: vec![(2, 2)],
            ..GridSpec::default()
        };
        assert!(make_gridworld(&spec, 1, 0.0, 0.0, &mut split(1, 0)).is_err());
    }

    #[test]
    fn synthetic_rewards_identical_without_eps_r() {
        let fleet = make_synthetic(5, 5, 5, 4, 0.1, 0.0, &mut split(3, u64::MAX)).unwrap();
        for i in 1..4 {
            assert_eq!(fleet.agent_reward(i), fleet.agent_reward(0));
        }
        assert_eq!(fleet.common().rewards(), fleet.agent_reward(0));
    }

    #[test]
    fn common_mdp_is_independent_of_fleet_size() {
        let a = make_synthetic(3, 2, 3, 1, 0.0, 0.0, &mut split(8, u64::MAX)).unwrap();
        let b = make_synthetic(3, 2, 3, 7, 0.0, 0.0, &mut split(8, u64::MAX)).unwrap();
        assert_eq!(a.common(), b.common());
    }

    #[test]
    fn lower_bound_values_match_closed_form() {
        let (flat, leaky) = make_lower_bound_mdp(2, 0.5).unwrap();
        let pi = Policy::constant(2, 2, 0);
        assert_eq!(evaluate_policy(&flat, &pi).unwrap().v(0, 0), 2.0);
        let v = evaluate_policy(&leaky, &pi).unwrap().v(0, 0);
        assert_eq!(v, 1.5);
        assert_eq!(optimal_values(&leaky).unwrap().0.v(0, 0), 1.5);
        assert!(make_lower_bound_mdp(4, 0.5).is_err());
        assert!(make_lower_bound_mdp(4, 0.0).is_err());
    }

    #[test]
    fn simplex_draws_are_distributions() {
        let mut rng = split(4, 4);
        for k in 1..8 {
            let p = uniform_simplex(&mut rng, k);
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOL);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}
