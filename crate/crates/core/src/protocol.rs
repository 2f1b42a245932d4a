//! Client/server state machines and lockstep round orchestration.
//!
//! A round runs in three phases:
//!
//! 1. Data collection. Every agent plays one episode with the frozen round
//!    policy, then all agents' freshly visited triplets are scanned for the
//!    doubling triggers (agents in index order, steps ascending). This
//!    repeats until a trigger fires or the episode budget runs out.
//! 2. Synchronization. The triggering agent signals the server.
//! 3. Policy update. For `h = H-1 ..= 0` the server broadcasts `V_{h+1}`,
//!    each client answers with its local statistics, and the server
//!    aggregates `Q_h`, extracts `V_h` and the greedy policy. The new policy
//!    and global counters are then sent to every client.
//!
//! All messages go through a [`Transport`] so communication cost is
//! measured the same way regardless of where the endpoints live.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::env::Fleet;
use crate::error::{Error, Result};
use crate::learner::{aggregate_cell, client_local_q, greedy, ConfidenceParams, LocalQReport};
use crate::mdp::{sample_episode, Policy, Step, TabularMdp};
use crate::rng::{agent_stream, SimRng};

/// Fixed per-message header size in bytes.
pub const HEADER_BYTES: u64 = 16;
/// Size of one table cell on the wire.
pub const CELL_BYTES: u64 = 8;

/// Synchronization threshold `14 eps_p T H M + 182 M beta_c(delta, T)`.
pub fn compute_nu(cp: &ConfidenceParams, eps_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_p) {
        return Err(Error::input("eps_p", "must lie in [0, 1]"));
    }
    let (t, h, m) = (cp.episodes as f64, cp.horizon as f64, cp.n_agents as f64);
    Ok(14.0 * eps_p * t * h * m + 182.0 * m * cp.beta_c(cp.episodes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMode {
    /// Event-triggered synchronization with the two doubling rules.
    Federated,
    /// Synchronize after every episode.
    Concurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolSettings {
    pub mode: SyncMode,
    /// Strict `>` doubling tests; `false` selects the `>=` variant.
    pub sync_strict: bool,
    /// Keep the initial policy forever (debug runs).
    pub freeze_policy: bool,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        ProtocolSettings {
            mode: SyncMode::Federated,
            sync_strict: true,
            freeze_policy: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClientPhase {
    Collecting,
    Synchronizing,
}

/// One agent's counters and estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    agent_id: usize,
    n_agents: usize,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    round: u64,
    phase: ClientPhase,
    visits: Vec<u64>,
    round_start: Vec<u64>,
    transitions: Vec<u64>,
    reward_hat: Vec<f64>,
    n_hat: Vec<u64>,
    server_counts: Vec<u64>,
    policy: Policy,
    last_episode: Vec<(usize, usize, usize)>,
}

impl ClientState {
    pub fn new(
        agent_id: usize,
        n_agents: usize,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        policy: Policy,
    ) -> Self {
        let cells = horizon * n_states * n_actions;
        ClientState {
            agent_id,
            n_agents,
            horizon,
            n_states,
            n_actions,
            round: 1,
            phase: ClientPhase::Collecting,
            visits: vec![0; cells],
            round_start: vec![0; cells],
            transitions: vec![0; cells * n_states],
            reward_hat: vec![0.0; cells],
            n_hat: vec![0; cells],
            server_counts: vec![0; cells],
            policy,
            last_episode: Vec::with_capacity(horizon),
        }
    }

    #[inline]
    fn idx(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.n_states + s) * self.n_actions + a
    }

    pub fn agent_id(&self) -> usize {
        self.agent_id
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn phase(&self) -> ClientPhase {
        self.phase
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

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn visits(&self, h: usize, s: usize, a: usize) -> u64 {
        self.visits[self.idx(h, s, a)]
    }

    pub fn visit_table(&self) -> &[u64] {
        &self.visits
    }

    pub fn round_start_visits(&self, h: usize, s: usize, a: usize) -> u64 {
        self.round_start[self.idx(h, s, a)]
    }

    pub fn transitions(&self, h: usize, s: usize, a: usize) -> &[u64] {
        let base = self.idx(h, s, a) * self.n_states;
        &self.transitions[base..base + self.n_states]
    }

    pub fn reward_estimate(&self, h: usize, s: usize, a: usize) -> f64 {
        self.reward_hat[self.idx(h, s, a)]
    }

    /// Extrapolated global count `N_hat`.
    pub fn global_estimate(&self, h: usize, s: usize, a: usize) -> u64 {
        self.n_hat[self.idx(h, s, a)]
    }

    /// Global count received at the start of the round.
    pub fn server_count(&self, h: usize, s: usize, a: usize) -> u64 {
        self.server_counts[self.idx(h, s, a)]
    }

    /// Triplets visited during the most recent episode, in step order.
    pub fn last_episode(&self) -> &[(usize, usize, usize)] {
        &self.last_episode
    }

    /// Folds one observed transition into the counters.
    pub fn record_step(&mut self, step: &Step) -> Result<()> {
        if self.phase != ClientPhase::Collecting {
            return Err(Error::Invariant(format!(
                "agent {} recorded a step outside data collection",
                self.agent_id
            )));
        }
        let Step { h, s, a, r, s_next } = *step;
        if h >= self.horizon || s >= self.n_states || a >= self.n_actions || s_next >= self.n_states {
            return Err(Error::IndexOutOfRange {
                what: "step (h, s, a, s')",
                index: self.idx(h, s, a),
                len: self.visits.len(),
            });
        }
        let k = self.idx(h, s, a);
        self.visits[k] += 1;
        self.transitions[k * self.n_states + s_next] += 1;
        self.n_hat[k] += self.n_agents as u64;
        self.reward_hat[k] = r;
        Ok(())
    }

    fn record_episode(&mut self, steps: &[Step]) -> Result<()> {
        self.last_episode.clear();
        for st in steps {
            self.record_step(st)?;
            self.last_episode.push((st.h, st.s, st.a));
        }
        Ok(())
    }

    /// Local doubling below the threshold, extrapolated global doubling
    /// above it.
    pub fn should_sync(&self, h: usize, s: usize, a: usize, nu: f64, strict: bool) -> bool {
        let k = self.idx(h, s, a);
        let global = self.server_counts[k];
        let g = global as f64;
        let local_regime = if strict { g <= nu } else { g < nu };
        let (lhs, rhs) = if local_regime {
            (self.visits[k], 2 * self.round_start[k])
        } else {
            (self.n_hat[k], 2 * global)
        };
        if strict {
            lhs > rhs
        } else {
            lhs >= rhs
        }
    }

    /// Applies a policy broadcast: new policy, new global counters, and the
    /// round-start snapshot of the local counters.
    pub fn begin_round(&mut self, policy: &Policy, global_counts: &[u64], round: u64) -> Result<()> {
        if global_counts.len() != self.server_counts.len() {
            return Err(Error::ShapeMismatch {
                what: "global counters",
                expected: self.server_counts.len(),
                found: global_counts.len(),
            });
        }
        self.policy.clone_from(policy);
        self.server_counts.copy_from_slice(global_counts);
        self.n_hat.copy_from_slice(global_counts);
        self.round_start.copy_from_slice(&self.visits);
        self.round = round;
        self.phase = ClientPhase::Collecting;
        Ok(())
    }

    /// Checks `N_hat - N_server = M (n - n_round_start)` and the
    /// transition/visit count agreement.
    pub fn check_consistency(&self) -> Result<()> {
        let m = self.n_agents as u64;
        for k in 0..self.visits.len() {
            let n = self.visits[k];
            let n0 = self.round_start[k];
            if n < n0 || self.n_hat[k] != self.server_counts[k] + m * (n - n0) {
                return Err(Error::Invariant(format!(
                    "agent {}: N_hat extrapolation broken at cell {k}",
                    self.agent_id
                )));
            }
            let row = &self.transitions[k * self.n_states..(k + 1) * self.n_states];
            if row.iter().sum::<u64>() != n {
                return Err(Error::Invariant(format!(
                    "agent {}: transition counts disagree with visits at cell {k}",
                    self.agent_id
                )));
            }
        }
        Ok(())
    }
}

/// Free-function form of [`ClientState::record_step`].
pub fn client_record_step(cs: &mut ClientState, step: &Step) -> Result<()> {
    cs.record_step(step)
}

/// Free-function form of [`ClientState::should_sync`].
pub fn should_sync(cs: &ClientState, h: usize, s: usize, a: usize, nu: f64, strict: bool) -> bool {
    cs.should_sync(h, s, a, nu, strict)
}

/// Central server: global counters, aggregated estimates and the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub round: u64,
    /// Episodes completed per agent.
    pub episodes: u64,
    counts: Vec<u64>,
    q_hat: Vec<f64>,
    v_hat: Vec<f64>,
    pub policy: Policy,
    pub cp: ConfidenceParams,
    pub nu: f64,
    /// Pooled variances that came out negative and were clamped to zero.
    pub variance_clamps: u64,
}

impl ServerState {
    pub fn new(cp: ConfidenceParams, eps_p: f64, policy: Policy) -> Result<Self> {
        let (hz, ns, na) = (cp.horizon, cp.n_states, cp.n_actions);
        if policy.horizon() != hz || policy.n_states() != ns || policy.actions().iter().any(|&a| a >= na) {
            return Err(Error::input("policy", "does not match the run dimensions"));
        }
        let h = hz as f64;
        let mut v_hat = vec![h; (hz + 1) * ns];
        v_hat[hz * ns..].iter_mut().for_each(|v| *v = 0.0);
        Ok(ServerState {
            round: 1,
            episodes: 0,
            counts: vec![0; hz * ns * na],
            q_hat: vec![h; hz * ns * na],
            v_hat,
            policy,
            nu: compute_nu(&cp, eps_p)?,
            cp,
            variance_clamps: 0,
        })
    }

    #[inline]
    fn idx(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.cp.n_states + s) * self.cp.n_actions + a
    }

    pub fn global_count(&self, h: usize, s: usize, a: usize) -> u64 {
        self.counts[self.idx(h, s, a)]
    }

    pub fn count_table(&self) -> &[u64] {
        &self.counts
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q_hat[self.idx(h, s, a)]
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q_hat
    }

    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v_hat[h * self.cp.n_states + s]
    }

    pub fn v_table(&self) -> &[f64] {
        &self.v_hat
    }

    pub fn budget_exhausted(&self) -> bool {
        self.episodes >= self.cp.episodes
    }
}

/// Sums the clients' visit tables into the server counters and advances the
/// round index.
pub fn end_round_counters(server: &mut ServerState, clients: &[ClientState]) -> Result<()> {
    let mut total = vec![0u64; server.counts.len()];
    for c in clients {
        if c.visits.len() != total.len() {
            return Err(Error::ShapeMismatch {
                what: "client visit table",
                expected: total.len(),
                found: c.visits.len(),
            });
        }
        for (t, n) in total.iter_mut().zip(&c.visits) {
            *t += n;
        }
    }
    server.counts = total;
    server.round += 1;
    Ok(())
}

/// Server counters must equal the sum of the clients' visit tables.
pub fn check_counter_conservation(server: &ServerState, clients: &[ClientState]) -> Result<()> {
    for (k, &n) in server.counts.iter().enumerate() {
        let sum: u64 = clients.iter().map(|c| c.visits[k]).sum();
        if sum != n {
            return Err(Error::Invariant(format!(
                "counter conservation broken at cell {k}: server {n}, clients {sum}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    PolicyBroadcast {
        policy: Policy,
        global_counts: Vec<u64>,
        round: u64,
        episode: u64,
    },
    SyncSignal {
        agent_id: usize,
        episode: u64,
    },
    ValueBroadcast {
        step: usize,
        values: Vec<f64>,
    },
    LocalStats {
        step: usize,
        agent_id: usize,
        report: LocalQReport,
    },
    EndTraining,
}

impl Message {
    /// Bytes charged for this message: a 16-byte header plus 8 bytes per
    /// table cell; scalar fields of the policy broadcast and sync signal
    /// take another 16.
    pub fn wire_size(&self) -> u64 {
        let cells = |n: usize| CELL_BYTES * n as u64;
        match self {
            Message::PolicyBroadcast {
                policy,
                global_counts,
                ..
            } => HEADER_BYTES + cells(policy.actions().len() + global_counts.len()) + 16,
            Message::SyncSignal { .. } => HEADER_BYTES + 16,
            Message::ValueBroadcast { values, .. } => HEADER_BYTES + cells(values.len()),
            Message::LocalStats { report, .. } => HEADER_BYTES + cells(4 * report.len()),
            Message::EndTraining => HEADER_BYTES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Server,
    Client(usize),
    /// Broadcast bus: delivered to every client, charged once.
    AllClients,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransportStats {
    pub messages: u64,
    pub bytes: u64,
}

pub trait Transport {
    fn send(&mut self, to: Endpoint, msg: Message);
    fn recv(&mut self, at: Endpoint) -> Option<Message>;
    fn stats(&self) -> TransportStats;
}

/// FIFO queues per endpoint inside one process.
#[derive(Debug, Clone, Default)]
pub struct InProcessTransport {
    server: VecDeque<Message>,
    clients: Vec<VecDeque<Message>>,
    stats: TransportStats,
}

impl InProcessTransport {
    pub fn new(n_clients: usize) -> Self {
        InProcessTransport {
            server: VecDeque::new(),
            clients: vec![VecDeque::new(); n_clients],
            stats: TransportStats::default(),
        }
    }
}

impl Transport for InProcessTransport {
    fn send(&mut self, to: Endpoint, msg: Message) {
        self.stats.messages += 1;
        self.stats.bytes += msg.wire_size();
        match to {
            Endpoint::Server => self.server.push_back(msg),
            Endpoint::Client(i) => self.clients[i].push_back(msg),
            Endpoint::AllClients => {
                for q in &mut self.clients {
                    q.push_back(msg.clone());
                }
            }
        }
    }

    fn recv(&mut self, at: Endpoint) -> Option<Message> {
        match at {
            Endpoint::Server => self.server.pop_front(),
            Endpoint::Client(i) => self.clients.get_mut(i)?.pop_front(),
            Endpoint::AllClients => None,
        }
    }

    fn stats(&self) -> TransportStats {
        self.stats
    }
}

/// Agent and triplet that fired a synchronization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trigger {
    pub agent: usize,
    pub h: usize,
    pub s: usize,
    pub a: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundEnd {
    Triggered,
    /// Concurrent mode synchronizes without a trigger.
    Forced,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundOutcome {
    /// Index of the round that just ran.
    pub round: u64,
    pub episodes_run: u64,
    pub trigger: Option<Trigger>,
    pub end: RoundEnd,
    pub messages: u64,
    pub bytes: u64,
}

impl RoundOutcome {
    /// Whether the round ended with a synchronization.
    pub fn synchronized(&self) -> bool {
        matches!(self.end, RoundEnd::Triggered | RoundEnd::Forced)
    }
}

fn scan_triggers(clients: &[ClientState], nu: f64, strict: bool) -> Option<Trigger> {
    clients.iter().find_map(|c| {
        c.last_episode
            .iter()
            .find(|&&(h, s, a)| c.should_sync(h, s, a, nu, strict))
            .map(|&(h, s, a)| Trigger {
                agent: c.agent_id,
                h,
                s,
                a,
            })
    })
}

fn protocol_error(what: &str) -> Error {
    Error::Invariant(format!("protocol: {what}"))
}

/// Backward aggregation pass, then the policy broadcast.
fn policy_update<T: Transport + ?Sized>(
    server: &mut ServerState,
    clients: &mut [ClientState],
    transport: &mut T,
    settings: &ProtocolSettings,
) -> Result<()> {
    let (hz, ns, na) = (server.cp.horizon, server.cp.n_states, server.cp.n_actions);
    let m = clients.len();
    let mut counts = vec![0u64; hz * ns * na];
    let mut v_next = vec![0.0; ns];
    let mut reports: Vec<Option<LocalQReport>> = vec![None; m];

    for h in (0..hz).rev() {
        transport.send(
            Endpoint::AllClients,
            Message::ValueBroadcast {
                step: h,
                values: v_next.clone(),
            },
        );
        for (i, c) in clients.iter().enumerate() {
            match transport.recv(Endpoint::Client(i)) {
                Some(Message::ValueBroadcast { step, values }) => {
                    let report = client_local_q(c, step, &values);
                    transport.send(
                        Endpoint::Server,
                        Message::LocalStats {
                            step,
                            agent_id: i,
                            report,
                        },
                    );
                }
                _ => return Err(protocol_error("client expected a value broadcast")),
            }
        }
        while let Some(msg) = transport.recv(Endpoint::Server) {
            match msg {
                Message::LocalStats {
                    step,
                    agent_id,
                    report,
                } if step == h && agent_id < m && report.len() == ns * na => {
                    reports[agent_id] = Some(report);
                }
                _ => return Err(protocol_error("server expected local statistics")),
            }
        }
        let step_reports: Vec<LocalQReport> = reports
            .iter_mut()
            .map(|r| r.take().ok_or_else(|| protocol_error("missing local statistics")))
            .collect::<Result<_>>()?;

        for cell in 0..ns * na {
            let agg = aggregate_cell(&step_reports, &server.cp, cell)?;
            let k = h * ns * na + cell;
            server.q_hat[k] = agg.q;
            counts[k] = agg.n;
            server.variance_clamps += agg.variance_clamped as u64;
        }
        for s in 0..ns {
            let base = (h * ns + s) * na;
            let (v, a) = greedy(&server.q_hat[base..base + na]);
            server.v_hat[h * ns + s] = v;
            if !settings.freeze_policy {
                server.policy.set(h, s, a);
            }
        }
        v_next.copy_from_slice(&server.v_hat[h * ns..(h + 1) * ns]);
    }

    server.counts = counts;
    server.round += 1;
    for i in 0..m {
        transport.send(
            Endpoint::Client(i),
            Message::PolicyBroadcast {
                policy: server.policy.clone(),
                global_counts: server.counts.clone(),
                round: server.round,
                episode: server.episodes,
            },
        );
    }
    for (i, c) in clients.iter_mut().enumerate() {
        match transport.recv(Endpoint::Client(i)) {
            Some(Message::PolicyBroadcast {
                policy,
                global_counts,
                round,
                ..
            }) => c.begin_round(&policy, &global_counts, round)?,
            _ => return Err(protocol_error("client expected a policy broadcast")),
        }
    }
    Ok(())
}

/// Runs one full round: lockstep data collection until a trigger fires (or
/// the episode budget runs out), then synchronization and policy update.
///
/// `agent_mdps[i]` is the MDP agent `i` acts in and `rngs[i]` its private
/// stream. Counter conservation and the `N_hat` extrapolation rule are
/// checked on every call.
pub fn run_round<T: Transport + ?Sized>(
    server: &mut ServerState,
    clients: &mut [ClientState],
    agent_mdps: &[TabularMdp],
    rngs: &mut [SimRng],
    transport: &mut T,
    settings: &ProtocolSettings,
) -> Result<RoundOutcome> {
    let m = clients.len();
    if m != server.cp.n_agents || agent_mdps.len() != m || rngs.len() != m {
        return Err(Error::ShapeMismatch {
            what: "agents",
            expected: server.cp.n_agents,
            found: m.min(agent_mdps.len()).min(rngs.len()),
        });
    }
    let before = transport.stats();
    let round = server.round;
    let mut episodes_run = 0;
    let mut trigger = None;

    while !server.budget_exhausted() {
        for ((c, mdp), rng) in clients.iter_mut().zip(agent_mdps).zip(rngs.iter_mut()) {
            let traj = sample_episode(mdp, &c.policy, rng);
            c.record_episode(&traj.steps)?;
        }
        server.episodes += 1;
        episodes_run += 1;
        for c in clients.iter() {
            c.check_consistency()?;
        }
        trigger = scan_triggers(clients, server.nu, settings.sync_strict);
        if trigger.is_some() || settings.mode == SyncMode::Concurrent {
            break;
        }
    }

    let end = if trigger.is_some() {
        RoundEnd::Triggered
    } else if settings.mode == SyncMode::Concurrent && episodes_run > 0 {
        RoundEnd::Forced
    } else {
        RoundEnd::BudgetExhausted
    };

    if episodes_run > 0 {
        for c in clients.iter_mut() {
            c.phase = ClientPhase::Synchronizing;
        }
        if let Some(tr) = trigger {
            transport.send(
                Endpoint::Server,
                Message::SyncSignal {
                    agent_id: tr.agent,
                    episode: server.episodes,
                },
            );
            match transport.recv(Endpoint::Server) {
                Some(Message::SyncSignal { .. }) => {}
                _ => return Err(protocol_error("server expected a sync signal")),
            }
        }
        policy_update(server, clients, transport, settings)?;
        check_counter_conservation(server, clients)?;
        if server.budget_exhausted() {
            transport.send(Endpoint::AllClients, Message::EndTraining);
            for i in 0..m {
                transport.recv(Endpoint::Client(i));
            }
        }
    }

    let after = transport.stats();
    Ok(RoundOutcome {
        round,
        episodes_run,
        trigger,
        end,
        messages: after.messages - before.messages,
        bytes: after.bytes - before.bytes,
    })
}

/// Server, clients, environments and streams of one run, stepped round by
/// round.
#[derive(Debug, Clone)]
pub struct Federation<T: Transport = InProcessTransport> {
    pub server: ServerState,
    pub clients: Vec<ClientState>,
    agent_mdps: Vec<TabularMdp>,
    rngs: Vec<SimRng>,
    transport: T,
    settings: ProtocolSettings,
}

impl Federation<InProcessTransport> {
    /// Sets up a run over `fleet` with agent `i` drawing from stream
    /// `(seed, i)`. `initial_policy` defaults to action 0 everywhere.
    pub fn new(
        fleet: &Fleet,
        delta: f64,
        episodes: u64,
        seed: u64,
        settings: ProtocolSettings,
        initial_policy: Option<Policy>,
    ) -> Result<Self> {
        let m = fleet.n_agents();
        Self::with_transport(fleet, delta, episodes, seed, settings, initial_policy, InProcessTransport::new(m))
    }
}

impl<T: Transport> Federation<T> {
    pub fn with_transport(
        fleet: &Fleet,
        delta: f64,
        episodes: u64,
        seed: u64,
        settings: ProtocolSettings,
        initial_policy: Option<Policy>,
        transport: T,
    ) -> Result<Self> {
        let c = fleet.common();
        let (hz, ns, na, m) = (c.horizon(), c.n_states(), c.n_actions(), fleet.n_agents());
        let cp = ConfidenceParams::new(delta, ns, na, hz, m, episodes)?;
        let policy = initial_policy.unwrap_or_else(|| Policy::constant(hz, ns, 0));
        let server = ServerState::new(cp, fleet.eps_p(), policy.clone())?;
        let clients = (0..m)
            .map(|i| ClientState::new(i, m, hz, ns, na, policy.clone()))
            .collect();
        let agent_mdps = (0..m).map(|i| fleet.agent_mdp(i)).collect::<Result<_>>()?;
        let rngs = (0..m).map(|i| agent_stream(seed, i)).collect();
        Ok(Federation {
            server,
            clients,
            agent_mdps,
            rngs,
            transport,
            settings,
        })
    }

    pub fn run_round(&mut self) -> Result<RoundOutcome> {
        run_round(
            &mut self.server,
            &mut self.clients,
            &self.agent_mdps,
            &mut self.rngs,
            &mut self.transport,
            &self.settings,
        )
    }

    pub fn finished(&self) -> bool {
        self.server.budget_exhausted()
    }

    pub fn transport_stats(&self) -> TransportStats {
        self.transport.stats()
    }

    pub fn settings(&self) -> &ProtocolSettings {
        &self.settings
    }

    pub fn agent_mdps(&self) -> &[TabularMdp] {
        &self.agent_mdps
    }
}
