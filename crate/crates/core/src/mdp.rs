//! Finite-horizon tabular MDPs and their exact planning oracles.
//!
//! Steps are 0-based internally: step `h` in `0..horizon` is the `h+1`-th
//! decision of an episode and value row `horizon` is the terminal zero row.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Tolerance on kernel row sums. Rows are never renormalized.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    /// Flattened `[h][s][a][s']`.
    kernel: Vec<f64>,
    /// Flattened `[h][s][a]`.
    reward: Vec<f64>,
    start_state: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    EmptyDimension,
    KernelShape { expected: usize, found: usize },
    RewardShape { expected: usize, found: usize },
    StartState(usize),
    NegativeProbability(f64),
    RowSum(f64),
    RewardOutOfRange(f64),
}

/// First offending cell found by [`TabularMdp::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub h: usize,
    pub s: usize,
    pub a: usize,
    pub kind: ViolationKind,
}

impl Violation {
    fn global(kind: ViolationKind) -> Self {
        Violation {
            h: 0,
            s: 0,
            a: 0,
            kind,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::EmptyDimension => write!(f, "horizon, states and actions must be positive"),
            ViolationKind::KernelShape { expected, found } => {
                write!(f, "kernel has {found} entries, expected {expected}")
            }
            ViolationKind::RewardShape { expected, found } => {
                write!(f, "reward has {found} entries, expected {expected}")
            }
            ViolationKind::StartState(s) => write!(f, "start state {s} out of range"),
            ViolationKind::NegativeProbability(p) => write!(
                f,
                "negative probability {p} at (h={}, s={}, a={})",
                self.h, self.s, self.a
            ),
            ViolationKind::RowSum(sum) => write!(
                f,
                "kernel row sums to {sum} at (h={}, s={}, a={})",
                self.h, self.s, self.a
            ),
            ViolationKind::RewardOutOfRange(r) => write!(
                f,
                "reward {r} outside [0, 1] at (h={}, s={}, a={})",
                self.h, self.s, self.a
            ),
        }
    }
}

impl TabularMdp {
    /// Builds and validates an MDP from flattened tables.
    pub fn new(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        kernel: Vec<f64>,
        reward: Vec<f64>,
        start_state: usize,
    ) -> Result<Self> {
        let mdp = Self::new_unchecked(horizon, n_states, n_actions, kernel, reward, start_state);
        mdp.validate().map_err(Error::InvalidMdp)?;
        Ok(mdp)
    }

    /// Builds an MDP without validating it. Used for fixtures that are
    /// deliberately corrupt; every planning entry point re-validates.
    pub fn new_unchecked(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        kernel: Vec<f64>,
        reward: Vec<f64>,
        start_state: usize,
    ) -> Self {
        TabularMdp {
            horizon,
            n_states,
            n_actions,
            kernel,
            reward,
            start_state,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    #[inline]
    pub fn sa_index(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.n_states + s) * self.n_actions + a
    }

    #[inline]
    pub fn kernel_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let base = self.sa_index(h, s, a) * self.n_states;
        &self.kernel[base..base + self.n_states]
    }

    #[inline]
    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.reward[self.sa_index(h, s, a)]
    }

    /// Checks every table invariant and reports the first offending cell.
    pub fn validate(&self) -> core::result::Result<(), Violation> {
        let (hz, ns, na) = (self.horizon, self.n_states, self.n_actions);
        if hz == 0 || ns == 0 || na == 0 {
            return Err(Violation::global(ViolationKind::EmptyDimension));
        }
        let cells = hz * ns * na;
        if self.kernel.len() != cells * ns {
            return Err(Violation::global(ViolationKind::KernelShape {
                expected: cells * ns,
                found: self.kernel.len(),
            }));
        }
        if self.reward.len() != cells {
            return Err(Violation::global(ViolationKind::RewardShape {
                expected: cells,
                found: self.reward.len(),
            }));
        }
        if self.start_state >= ns {
            return Err(Violation::global(ViolationKind::StartState(self.start_state)));
        }
        for h in 0..hz {
            for s in 0..ns {
                for a in 0..na {
                    let at = |kind| Violation { h, s, a, kind };
                    let row = self.kernel_row(h, s, a);
                    if let Some(&p) = row.iter().find(|p| !(**p >= 0.0)) {
                        return Err(at(ViolationKind::NegativeProbability(p)));
                    }
                    let sum: f64 = row.iter().sum();
                    if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
                        return Err(at(ViolationKind::RowSum(sum)));
                    }
                    let r = self.reward(h, s, a);
                    if !(0.0..=1.0).contains(&r) {
                        return Err(at(ViolationKind::RewardOutOfRange(r)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Deterministic Markov policy, one action per `(h, s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    horizon: usize,
    n_states: usize,
    actions: Vec<usize>,
}

impl Policy {
    /// The policy that plays `action` everywhere.
    pub fn constant(horizon: usize, n_states: usize, action: usize) -> Self {
        Policy {
            horizon,
            n_states,
            actions: vec![action; horizon * n_states],
        }
    }

    pub fn from_actions(horizon: usize, n_states: usize, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != horizon * n_states {
            return Err(Error::ShapeMismatch {
                what: "policy",
                expected: horizon * n_states,
                found: actions.len(),
            });
        }
        Ok(Policy {
            horizon,
            n_states,
            actions,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h * self.n_states + s]
    }

    #[inline]
    pub fn set(&mut self, h: usize, s: usize, a: usize) {
        self.actions[h * self.n_states + s] = a;
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        if self.horizon != mdp.horizon || self.n_states != mdp.n_states {
            return Err(Error::ShapeMismatch {
                what: "policy",
                expected: mdp.horizon * mdp.n_states,
                found: self.actions.len(),
            });
        }
        if let Some(&a) = self.actions.iter().find(|&&a| a >= mdp.n_actions) {
            return Err(Error::IndexOutOfRange {
                what: "policy action",
                index: a,
                len: mdp.n_actions,
            });
        }
        Ok(())
    }
}

/// `V[h][s]` for `h in 0..=H` (row `H` is zero) and `Q[h][s][a]` for `h in 0..H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl ValueTables {
    fn zeros(horizon: usize, n_states: usize, n_actions: usize) -> Self {
        ValueTables {
            horizon,
            n_states,
            n_actions,
            v: vec![0.0; (horizon + 1) * n_states],
            q: vec![0.0; horizon * n_states * n_actions],
        }
    }

    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.n_states + s]
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.n_states + s) * self.n_actions + a]
    }

    pub fn v_row(&self, h: usize) -> &[f64] {
        &self.v[h * self.n_states..(h + 1) * self.n_states]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn v_table(&self) -> &[f64] {
        &self.v
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub h: usize,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

#[inline]
fn expectation(row: &[f64], v: &[f64]) -> f64 {
    row.iter().zip(v).map(|(p, x)| p * x).sum()
}

/// Backward induction on the optimal Bellman equations. Ties go to the
/// lowest action index.
pub fn optimal_values(mdp: &TabularMdp) -> Result<(ValueTables, Policy)> {
    mdp.validate().map_err(Error::InvalidMdp)?;
    let (hz, ns, na) = (mdp.horizon, mdp.n_states, mdp.n_actions);
    let mut vt = ValueTables::zeros(hz, ns, na);
    let mut policy = Policy::constant(hz, ns, 0);
    for h in (0..hz).rev() {
        let (head, tail) = vt.v.split_at_mut((h + 1) * ns);
        let v_next = &tail[..ns];
        let v_here = &mut head[h * ns..];
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..na {
                let q = mdp.reward(h, s, a) + expectation(mdp.kernel_row(h, s, a), v_next);
                vt.q[(h * ns + s) * na + a] = q;
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            v_here[s] = best;
            policy.set(h, s, best_a);
        }
    }
    Ok((vt, policy))
}

/// Solves the Bellman equations of a fixed deterministic policy.
pub fn evaluate_policy(mdp: &TabularMdp, policy: &Policy) -> Result<ValueTables> {
    mdp.validate().map_err(Error::InvalidMdp)?;
    policy.check_against(mdp)?;
    Ok(evaluate_policy_trusted(mdp, policy))
}

/// [`evaluate_policy`] without re-validating inputs already known to be
/// well formed.
pub(crate) fn evaluate_policy_trusted(mdp: &TabularMdp, policy: &Policy) -> ValueTables {
    let (hz, ns, na) = (mdp.horizon, mdp.n_states, mdp.n_actions);
    let mut vt = ValueTables::zeros(hz, ns, na);
    for h in (0..hz).rev() {
        let (head, tail) = vt.v.split_at_mut((h + 1) * ns);
        let v_next = &tail[..ns];
        let v_here = &mut head[h * ns..];
        for s in 0..ns {
            for a in 0..na {
                vt.q[(h * ns + s) * na + a] =
                    mdp.reward(h, s, a) + expectation(mdp.kernel_row(h, s, a), v_next);
            }
            v_here[s] = vt.q[(h * ns + s) * na + policy.action(h, s)];
        }
    }
    vt
}

/// Inverse-CDF draw from a probability row using one uniform variate.
#[inline]
pub(crate) fn draw_from_row(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = j;
            if u < acc {
                return j;
            }
        }
    }
    // u landed in the rounding slack above the accumulated mass.
    last_positive
}

/// Rolls out one episode from the start state. Consumes exactly `H`
/// uniform draws from `rng`.
pub fn sample_episode<R: RngCore + ?Sized>(mdp: &TabularMdp, policy: &Policy, rng: &mut R) -> Trajectory {
    let mut steps = Vec::with_capacity(mdp.horizon);
    let mut s = mdp.start_state;
    for h in 0..mdp.horizon {
        let a = policy.action(h, s);
        let u: f64 = rng.gen();
        let s_next = draw_from_row(mdp.kernel_row(h, s, a), u);
        steps.push(Step {
            h,
            s,
            a,
            r: mdp.reward(h, s, a),
            s_next,
        });
        s = s_next;
    }
    Trajectory { steps }
}
