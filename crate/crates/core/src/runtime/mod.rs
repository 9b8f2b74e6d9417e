//! Asynchronous CCM execution: one agent cycle per event, epochs, traces.

mod sched;
mod trace;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{memory_bits, Agent, AgentId, AgentState, TreeLabel};
use crate::dispersion::invariants::Monitor;
use crate::graph::{NodeId, Port, PortLabeledGraph};

pub use sched::{SchedulerPolicy, DEFAULT_LAG};
pub use trace::{epochs_between, IntervalError, Marker, ProbeOutcome, SimulationTrace, TraceEvent, TraceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Stay,
    Move(Port),
}

/// Per-agent state machine.
pub trait Algorithm {
    fn cycle(&self, local: &mut Local<'_>) -> Action;
}

/// What one activated agent can see and touch: its own memory, the memories
/// of agents on the same node, and the node degree.
pub struct Local<'a> {
    me: usize,
    node: NodeId,
    degree: usize,
    agents: &'a mut [Agent],
    positions: &'a [NodeId],
    here: &'a [usize],
    written: &'a mut Vec<usize>,
    stamp: &'a mut [u64],
    seq: u64,
    markers: &'a mut Vec<Marker>,
}

impl<'a> Local<'a> {
    pub fn index(&self) -> usize {
        self.me
    }

    pub fn me(&self) -> &Agent {
        &self.agents[self.me]
    }

    pub fn me_mut(&mut self) -> &mut Agent {
        self.get_mut(self.me)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Indices of all agents on this node, including the caller.
    pub fn here(&self) -> &'a [usize] {
        self.here
    }

    pub fn get(&self, i: usize) -> &Agent {
        assert_eq!(self.positions[i], self.node, "agent {i} is not co-located");
        &self.agents[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Agent {
        assert_eq!(self.positions[i], self.node, "agent {i} is not co-located");
        if self.stamp[i] != self.seq {
            self.stamp[i] = self.seq;
            self.written.push(i);
        }
        &mut self.agents[i]
    }

    pub fn mark(&mut self, m: Marker) {
        self.markers.push(m);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub graph: Arc<PortLabeledGraph>,
    pub agents: Vec<Agent>,
    pub positions: Vec<NodeId>,
}

impl Configuration {
    pub fn new(graph: Arc<PortLabeledGraph>, agents: Vec<Agent>, positions: Vec<NodeId>) -> Result<Self, RunError> {
        let n = graph.node_count();
        if agents.is_empty() {
            return Err(RunError::InvalidConfig("no agents".into()));
        }
        if agents.len() != positions.len() {
            return Err(RunError::InvalidConfig(format!("{} agents but {} positions", agents.len(), positions.len())));
        }
        if agents.len() > n {
            return Err(RunError::InvalidConfig(format!("k = {} exceeds n = {n}", agents.len())));
        }
        if let Some(&p) = positions.iter().find(|&&p| p >= n) {
            return Err(RunError::InvalidConfig(format!("position {p} out of range")));
        }
        let mut ids: Vec<AgentId> = agents.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) || ids[0] == 0 {
            return Err(RunError::InvalidConfig("agent IDs must be positive and distinct".into()));
        }
        Ok(Configuration { graph, agents, positions })
    }

    pub fn k(&self) -> usize {
        self.agents.len()
    }

    pub fn n(&self) -> usize {
        self.graph.node_count()
    }

    /// The agent settled on `node`, if any.
    pub fn settled_at(&self, node: NodeId) -> Option<&Agent> {
        self.agents
            .iter()
            .zip(&self.positions)
            .find(|(a, &p)| p == node && a.state == AgentState::Settled)
            .map(|(a, _)| a)
    }

    pub fn agent(&self, id: AgentId) -> Option<(&Agent, NodeId)> {
        self.agents.iter().zip(&self.positions).find(|(a, _)| a.id == id).map(|(a, &p)| (a, p))
    }
}

/// Initial distribution of agents over nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    Rooted(NodeId),
    /// Node of each agent, in agent order.
    Explicit(Vec<NodeId>),
    /// `count` distinct random nodes, each holding at least two agents when k allows.
    Roots {
        count: usize,
        seed: u64,
    },
}

impl Placement {
    pub fn positions(&self, n: usize, k: usize) -> Result<Vec<NodeId>, RunError> {
        match self {
            Placement::Rooted(v) => {
                if *v >= n {
                    return Err(RunError::InvalidConfig(format!("root {v} out of range")));
                }
                Ok(vec![*v; k])
            }
            Placement::Explicit(p) => {
                if p.len() != k {
                    return Err(RunError::InvalidConfig(format!("placement lists {} agents, k = {k}", p.len())));
                }
                Ok(p.clone())
            }
            Placement::Roots { count, seed } => {
                let l = *count;
                if l == 0 || l > k || l > n {
                    return Err(RunError::InvalidConfig(format!("cannot place {k} agents on {l} roots")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut nodes: Vec<NodeId> = (0..n).collect();
                nodes.shuffle(&mut rng);
                nodes.truncate(l);
                let base = if k >= 2 * l { 2 } else { 1 };
                let mut mult = vec![base; l];
                for _ in 0..k - base * l {
                    mult[rng.gen_range(0..l)] += 1;
                }
                Ok(nodes.iter().zip(&mult).flat_map(|(&v, &m)| std::iter::repeat_n(v, m)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub policy: SchedulerPolicy,
    pub epoch_cap: u64,
    pub check_invariants: bool,
    pub trace_mode: TraceMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: SchedulerPolicy::RoundRobin,
            epoch_cap: 10_000,
            check_invariants: true,
            trace_mode: TraceMode::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    pub k: usize,
    pub n: usize,
    pub max_degree: usize,
    pub epochs: u64,
    pub events: u64,
    pub null_events: u64,
    /// Moves per agent, in agent order.
    pub moves: Vec<u64>,
    pub max_memory_bits: u32,
    pub probes: u64,
    /// Probe tuples matched against ground truth; zero without invariant checks.
    pub tuples_checked: u64,
    /// Tuples whose agent a larger traversal took before the head read them.
    pub tuples_stale: u64,
    /// Probe duration in epochs -> number of probes.
    pub probe_histogram: BTreeMap<u64, u64>,
    /// (epoch, settledScout count) whenever the count changes.
    pub vacated_timeline: Vec<(u64, u32)>,
    pub max_label: Option<TreeLabel>,
    pub dispersed: bool,
}

impl Metrics {
    pub fn total_moves(&self) -> u64 {
        self.moves.iter().sum()
    }

    pub fn max_probe_epochs(&self) -> u64 {
        self.probe_histogram.keys().next_back().copied().unwrap_or(0)
    }

    /// Flat key/value pairs in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let hist = self.probe_histogram.iter().map(|(d, c)| format!("{d}:{c}")).collect::<Vec<_>>().join(",");
        let timeline = self.vacated_timeline.iter().map(|(e, c)| format!("{e}:{c}")).collect::<Vec<_>>().join(",");
        vec![
            ("k", self.k.to_string()),
            ("n", self.n.to_string()),
            ("max_degree", self.max_degree.to_string()),
            ("epochs", self.epochs.to_string()),
            ("events", self.events.to_string()),
            ("null_events", self.null_events.to_string()),
            ("total_moves", self.total_moves().to_string()),
            ("max_agent_moves", self.moves.iter().max().copied().unwrap_or(0).to_string()),
            ("max_memory_bits", self.max_memory_bits.to_string()),
            ("probes", self.probes.to_string()),
            ("tuples_checked", self.tuples_checked.to_string()),
            ("tuples_stale", self.tuples_stale.to_string()),
            ("max_probe_epochs", self.max_probe_epochs().to_string()),
            ("probe_histogram", if hist.is_empty() { "-".into() } else { hist }),
            ("vacated_timeline", if timeline.is_empty() { "-".into() } else { timeline }),
            ("max_label", self.max_label.map_or("-".into(), |l| l.to_string())),
            ("dispersed", self.dispersed.to_string()),
        ]
    }

    /// Aligned `key  value` block.
    pub fn to_text(&self) -> String {
        let pairs = self.pairs();
        let w = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        pairs.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub config: Configuration,
    pub trace: SimulationTrace,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("epoch cap {cap} exceeded")]
    CapExceeded { cap: u64, outcome: Box<RunOutcome> },
    #[error("invariant violated at event {seq}: {message}")]
    Invariant { seq: u64, message: String, outcome: Box<RunOutcome> },
}

impl RunError {
    pub fn outcome(&self) -> Option<&RunOutcome> {
        match self {
            RunError::InvalidConfig(_) => None,
            RunError::CapExceeded { outcome, .. } | RunError::Invariant { outcome, .. } => Some(outcome),
        }
    }
}

/// Ground truth the runtime maintains for termination and checks.
pub struct Simulation {
    cfg: Configuration,
    occupants: Vec<Vec<usize>>,
    slot: Vec<usize>,
    sched: sched::Scheduler,
    opts: RunOptions,
    seq: u64,
    epoch: u64,
    cycled_stamp: Vec<u64>,
    cycled: u32,
    stamp: Vec<u64>,
    prev_state: Vec<AgentState>,
    settled: usize,
    scouts: u32,
    crowded: usize,
    trace: SimulationTrace,
    metrics: Metrics,
    open_probes: HashMap<(AgentId, u32), TraceEvent>,
    monitor: Option<Monitor>,
    done: bool,
}

impl Simulation {
    pub fn new(cfg: Configuration, opts: RunOptions) -> Result<Self, RunError> {
        if opts.epoch_cap == 0 {
            return Err(RunError::InvalidConfig("epoch cap must be positive".into()));
        }
        let n = cfg.n();
        let k = cfg.k();
        let mut occupants = vec![Vec::new(); n];
        let mut slot = vec![0; k];
        for (i, &p) in cfg.positions.iter().enumerate() {
            slot[i] = occupants[p].len();
            occupants[p].push(i);
        }
        let prev_state: Vec<AgentState> = cfg.agents.iter().map(|a| a.state).collect();
        let settled = prev_state.iter().filter(|&&s| s == AgentState::Settled).count();
        let scouts = prev_state.iter().filter(|&&s| s == AgentState::SettledScout).count() as u32;
        let crowded = occupants.iter().filter(|o| o.len() > 1).count();
        let delta = cfg.graph.max_degree();
        let metrics = Metrics {
            k,
            n,
            max_degree: delta,
            moves: vec![0; k],
            max_memory_bits: cfg.agents.iter().map(|a| memory_bits(a, k, delta)).max().unwrap_or(0),
            ..Metrics::default()
        };
        let monitor = opts.check_invariants.then(|| Monitor::new(&cfg));
        Ok(Simulation {
            sched: sched::Scheduler::new(opts.policy, k),
            occupants,
            slot,
            opts,
            seq: 0,
            epoch: 1,
            cycled_stamp: vec![0; k],
            cycled: 0,
            stamp: vec![u64::MAX; k],
            prev_state,
            settled,
            scouts,
            crowded,
            trace: SimulationTrace { k, events: Vec::new() },
            metrics,
            open_probes: HashMap::new(),
            monitor,
            done: false,
            cfg,
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.cfg
    }

    pub fn occupants(&self, node: NodeId) -> &[usize] {
        &self.occupants[node]
    }

    pub fn trace(&self) -> &SimulationTrace {
        &self.trace
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn scout_count(&self) -> u32 {
        self.scouts
    }

    pub fn settled_count(&self) -> usize {
        self.settled
    }

    pub fn is_terminated(&self) -> bool {
        self.done
    }

    fn terminated_now(&self) -> bool {
        self.settled == self.cfg.k() && self.crowded == 0
    }

    /// One cycle of the scheduler's choice. The event is returned when the
    /// trace mode keeps it.
    pub fn step(&mut self, algo: &dyn Algorithm) -> Result<Option<&TraceEvent>, String> {
        let i = self.sched.pick();
        self.activate(i, algo)
    }

    /// One cycle of agent index `i`. Returns the recorded event, or the
    /// invariant message if a check failed.
    pub fn activate(&mut self, i: usize, algo: &dyn Algorithm) -> Result<Option<&TraceEvent>, String> {
        assert!(i < self.cfg.k(), "no agent with index {i}");
        assert!(!self.done, "simulation already terminated");
        let node = self.cfg.positions[i];
        let mut written = Vec::new();
        let mut markers = Vec::new();
        let here = std::mem::take(&mut self.occupants[node]);
        let action = {
            let mut local = Local {
                me: i,
                node,
                degree: self.cfg.graph.degree(node),
                agents: &mut self.cfg.agents,
                positions: &self.cfg.positions,
                here: &here,
                written: &mut written,
                stamp: &mut self.stamp,
                seq: self.seq,
                markers: &mut markers,
            };
            algo.cycle(&mut local)
        };
        self.occupants[node] = here;

        let mut failure = None;
        let mut node_after = node;
        if let Action::Move(p) = action {
            if p == 0 || p as usize > self.cfg.graph.degree(node) {
                failure = Some(format!("agent {} moved through missing port {p}", self.cfg.agents[i].id));
            } else {
                let (w, q) = self.cfg.graph.neighbor(node, p);
                self.relocate(i, w);
                self.cfg.agents[i].arrival_port = Some(q);
                self.metrics.moves[i] += 1;
                node_after = w;
            }
        }

        for &j in &written {
            let s = self.cfg.agents[j].state;
            let old = self.prev_state[j];
            if s != old {
                if old == AgentState::Settled {
                    self.settled -= 1;
                }
                if s == AgentState::Settled {
                    self.settled += 1;
                }
                if old == AgentState::SettledScout {
                    self.scouts -= 1;
                }
                if s == AgentState::SettledScout {
                    self.scouts += 1;
                }
                self.prev_state[j] = s;
                if old == AgentState::SettledScout || s == AgentState::SettledScout {
                    self.metrics.vacated_timeline.push((self.epoch, self.scouts));
                }
            }
            let l = self.cfg.agents[j].tree_label;
            if self.metrics.max_label.is_none_or(|m| l > m) {
                self.metrics.max_label = Some(l);
            }
        }

        if let Some(mut mon) = self.monitor.take() {
            if failure.is_none() {
                if let Err(e) = mon.after_cycle(self, i, node, &markers, &written) {
                    failure = Some(e);
                }
            }
            self.monitor = Some(mon);
        }
        if failure.is_none() {
            if let Some(Marker::Violation(m)) = markers.iter().find(|m| matches!(m, Marker::Violation(_))) {
                failure = Some(m.clone());
            }
        }

        // Epoch bookkeeping: the event belongs to the current epoch; the
        // boundary falls right after the event completing the last missing cycle.
        let epoch = self.epoch;
        if self.cycled_stamp[i] != epoch {
            self.cycled_stamp[i] = epoch;
            self.cycled += 1;
        }
        let progress = self.cycled;
        if self.cycled as usize == self.cfg.k() {
            self.epoch += 1;
            self.cycled = 0;
        }

        if self.terminated_now() {
            self.done = true;
            markers.push(Marker::Termination);
        }
        let null = action == Action::Stay && written.is_empty() && markers.is_empty();
        if null {
            self.metrics.null_events += 1;
        }
        let ev = TraceEvent {
            seq: self.seq,
            epoch,
            progress,
            agent: self.cfg.agents[i].id,
            node_before: node,
            node_after,
            written: written.iter().map(|&j| self.cfg.agents[j].id).collect(),
            null,
            markers,
        };
        for m in &ev.markers {
            match m {
                Marker::ProbeStart { tree, .. } => {
                    self.open_probes.insert((tree.leader, tree.level), ev.clone());
                }
                Marker::ProbeEnd { tree } => {
                    if let Some(start) = self.open_probes.remove(&(tree.leader, tree.level)) {
                        let d = trace::span(&start, &ev, self.cfg.k());
                        *self.metrics.probe_histogram.entry(d).or_insert(0) += 1;
                        self.metrics.probes += 1;
                    }
                }
                _ => {}
            }
        }
        self.seq += 1;
        self.metrics.events += 1;
        self.metrics.epochs = epoch;
        let keep = self.opts.trace_mode == TraceMode::Full || !ev.markers.is_empty() || failure.is_some();
        if keep {
            self.trace.events.push(ev);
        }
        if let Some(f) = failure {
            return Err(f);
        }
        Ok(if keep { self.trace.events.last() } else { None })
    }

    fn relocate(&mut self, i: usize, w: NodeId) {
        let v = self.cfg.positions[i];
        let s = self.slot[i];
        let before_v = self.occupants[v].len();
        self.occupants[v].swap_remove(s);
        if s < self.occupants[v].len() {
            let moved = self.occupants[v][s];
            self.slot[moved] = s;
        }
        if before_v == 2 {
            self.crowded -= 1;
        }
        self.slot[i] = self.occupants[w].len();
        self.occupants[w].push(i);
        if self.occupants[w].len() == 2 {
            self.crowded += 1;
        }
        self.cfg.positions[i] = w;
    }

    pub fn finish(mut self) -> RunOutcome {
        self.metrics.dispersed = crate::dispersion::check_dispersed(&self.cfg);
        let k = self.cfg.k();
        let delta = self.cfg.graph.max_degree();
        let bits = self.cfg.agents.iter().map(|a| memory_bits(a, k, delta)).max().unwrap_or(0);
        self.metrics.max_memory_bits = self.metrics.max_memory_bits.max(bits);
        if let Some(m) = &self.monitor {
            self.metrics.tuples_checked = m.probes_checked;
            self.metrics.tuples_stale = m.probes_stale;
        }
        RunOutcome { config: self.cfg, trace: self.trace, metrics: self.metrics }
    }
}

/// Runs `algo` until every agent is settled on its own node.
pub fn run(cfg: Configuration, algo: &dyn Algorithm, opts: RunOptions) -> Result<RunOutcome, RunError> {
    let mut sim = Simulation::new(cfg, opts)?;
    if sim.terminated_now() {
        return Ok(sim.finish());
    }
    loop {
        if let Err(message) = sim.step(algo) {
            let seq = sim.seq - 1;
            return Err(RunError::Invariant { seq, message, outcome: Box::new(sim.finish()) });
        }
        if sim.done {
            return Ok(sim.finish());
        }
        if sim.epoch > opts.epoch_cap {
            let cap = opts.epoch_cap;
            return Err(RunError::CapExceeded { cap, outcome: Box::new(sim.finish()) });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{init_agents, IdPolicy};
    use crate::graph::{generate, GraphKind};

    /// Walks port 1 forever.
    struct Walker;
    impl Algorithm for Walker {
        fn cycle(&self, _: &mut Local<'_>) -> Action {
            Action::Move(1)
        }
    }

    /// Settles immediately.
    struct Sitter;
    impl Algorithm for Sitter {
        fn cycle(&self, l: &mut Local<'_>) -> Action {
            if l.me().state != AgentState::Settled {
                l.me_mut().state = AgentState::Settled;
            }
            Action::Stay
        }
    }

    fn cfg(n: usize, positions: Vec<NodeId>) -> Configuration {
        let g = Arc::new(generate(GraphKind::Line, n, 0).unwrap());
        let agents = init_agents(positions.len(), IdPolicy::Dense);
        Configuration::new(g, agents, positions).unwrap()
    }

    #[test]
    fn round_robin_epochs_every_k_events() {
        let opts = RunOptions { epoch_cap: 5, check_invariants: false, ..RunOptions::default() };
        let err = run(cfg(4, vec![0, 0, 0]), &Walker, opts).unwrap_err();
        let out = err.outcome().unwrap();
        assert!(matches!(err, RunError::CapExceeded { cap: 5, .. }));
        for e in &out.trace.events {
            assert_eq!(e.epoch, e.seq / 3 + 1);
        }
        assert_eq!(out.metrics.moves, vec![5, 5, 5]);
    }

    #[test]
    fn dispersed_start_terminates_in_one_epoch() {
        let opts = RunOptions { check_invariants: false, ..RunOptions::default() };
        let out = run(cfg(3, vec![0, 1, 2]), &Sitter, opts).unwrap();
        assert_eq!(out.metrics.epochs, 1);
        assert!(out.metrics.dispersed);
        assert!(out.trace.events.last().unwrap().markers.contains(&Marker::Termination));
    }

    #[test]
    fn bad_configs() {
        let g = Arc::new(generate(GraphKind::Line, 2, 0).unwrap());
        assert!(Configuration::new(g.clone(), init_agents(3, IdPolicy::Dense), vec![0, 0, 0]).is_err());
        assert!(Configuration::new(g.clone(), init_agents(1, IdPolicy::Dense), vec![5]).is_err());
        assert!(Placement::Roots { count: 3, seed: 1 }.positions(2, 2).is_err());
    }

    #[test]
    fn roots_placement() {
        let p = Placement::Roots { count: 3, seed: 9 }.positions(20, 10).unwrap();
        assert_eq!(p.len(), 10);
        let mut distinct = p.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn metrics_text_is_aligned() {
        let t = Metrics::default().to_text();
        assert!(t.contains("max_memory_bits"));
        let col = t.lines().map(|l| l.rfind(' ').unwrap()).next().unwrap();
        assert!(t.lines().all(|l| l.rfind(' ') == Some(col)));
    }
}
