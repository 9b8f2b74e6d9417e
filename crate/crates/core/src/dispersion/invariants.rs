//! Runtime checks against ground truth the agents never see.

use std::collections::{BTreeSet, HashMap};

use crate::agents::{AgentId, AgentState, Role, Task, TreeLabel};
use crate::graph::{EdgeRecord, NodeId};
use crate::p1tree::{uncovered, DfsNodeType};
use crate::runtime::{Configuration, Marker, ProbeOutcome, Simulation};

/// Longest scout excursion allowed during one probe.
pub const MAX_TRIP_MOVES: u32 = 6;

pub fn min_pool(k: usize) -> u32 {
    (k.saturating_sub(2) as u32).div_ceil(3)
}

/// Last time an agent was taken into another tree, and what it was before.
#[derive(Clone, Copy)]
struct Departure {
    cycle: u64,
    home: Option<NodeId>,
    label: TreeLabel,
    state: AgentState,
}

pub struct Monitor {
    rooted: bool,
    index: HashMap<AgentId, usize>,
    home: Vec<Option<NodeId>>,
    state: Vec<AgentState>,
    label: Vec<TreeLabel>,
    scouting: Vec<bool>,
    trip: Vec<u32>,
    cycles: u64,
    /// Cycle of the latest probe-start of each (leader, level).
    probe_since: HashMap<(AgentId, u32), u64>,
    left: Vec<Option<Departure>>,
    /// Probe tuples checked against ground truth.
    pub probes_checked: u64,
    /// Reports overtaken by a larger traversal before the head read them.
    pub probes_stale: u64,
}

impl Monitor {
    pub fn new(cfg: &Configuration) -> Self {
        let k = cfg.k();
        let rooted = cfg.positions.iter().all(|&p| p == cfg.positions[0]);
        Monitor {
            rooted: rooted && k > 1,
            index: cfg.agents.iter().enumerate().map(|(i, a)| (a.id, i)).collect(),
            home: cfg
                .agents
                .iter()
                .zip(&cfg.positions)
                .map(|(a, &p)| (a.state == AgentState::Settled).then_some(p))
                .collect(),
            state: cfg.agents.iter().map(|a| a.state).collect(),
            label: cfg.agents.iter().map(|a| a.tree_label).collect(),
            scouting: vec![false; k],
            trip: vec![0; k],
            cycles: 0,
            probe_since: HashMap::new(),
            left: vec![None; k],
            probes_checked: 0,
            probes_stale: 0,
        }
    }

    pub fn after_cycle(
        &mut self,
        sim: &Simulation,
        actor: usize,
        node_before: NodeId,
        markers: &[Marker],
        written: &[usize],
    ) -> Result<(), String> {
        self.cycles += 1;
        let cfg = sim.config();
        let moved = cfg.positions[actor] != node_before;
        let a = &cfg.agents[actor];
        if moved && a.state == AgentState::Settled {
            return Err(format!("settled agent {} moved", a.id));
        }
        if moved && (self.scouting[actor] || a.task == Task::Scout) {
            self.trip[actor] += 1;
        }

        // settling and leaving again can happen inside one cycle
        for m in markers {
            if let Marker::Settle { agent } = m {
                if let Some(&j) = self.index.get(agent) {
                    if self.state[j] != AgentState::Settled {
                        self.state[j] = AgentState::Settled;
                        self.home[j] = Some(cfg.positions[j]);
                    }
                }
            }
        }
        for &j in written.iter().chain(std::iter::once(&actor)) {
            let b = &cfg.agents[j];
            let (old, new) = (self.state[j], b.state);
            if !b.tree_label.same_tree(&self.label[j]) {
                self.left[j] =
                    Some(Departure { cycle: self.cycles, home: self.home[j], label: self.label[j], state: old });
            }
            let ok = matches!(
                (old, new),
                (AgentState::Unsettled, AgentState::Settled)
                    | (AgentState::Settled, AgentState::SettledScout)
                    | (AgentState::SettledScout, AgentState::Settled)
            ) || old == new;
            if !ok {
                return Err(format!("agent {} went from {old} to {new}", b.id));
            }
            if b.tree_label < self.label[j] {
                return Err(format!("agent {} label dropped from {} to {}", b.id, self.label[j], b.tree_label));
            }
            let pos = cfg.positions[j];
            if new == AgentState::Settled && old != AgentState::Settled {
                if old == AgentState::SettledScout && !b.free {
                    if let Some(h) = self.home[j] {
                        if h != pos && self.rooted {
                            return Err(format!("agent {} resettled at {pos}, its node is {h}", b.id));
                        }
                    }
                }
                self.home[j] = Some(pos);
            }
            if b.free || new == AgentState::Unsettled {
                self.home[j] = None;
            }
            if new == AgentState::Settled {
                let settled =
                    sim.occupants(pos).iter().filter(|&&o| cfg.agents[o].state == AgentState::Settled).count();
                if settled > 1 {
                    return Err(format!("{settled} settled agents on node {pos}"));
                }
            }
            let scouting = b.task == Task::Scout;
            if self.scouting[j] && !scouting {
                if self.trip[j] > MAX_TRIP_MOVES {
                    return Err(format!("scout {} walked {} moves", b.id, self.trip[j]));
                }
                self.trip[j] = 0;
            } else if !self.scouting[j] && scouting && j != actor {
                self.trip[j] = 0;
            }
            self.scouting[j] = scouting;
            self.state[j] = new;
            self.label[j] = b.tree_label;
        }

        for m in markers {
            match m {
                Marker::Probe { tree, port, remote_port, outcome } => {
                    let (y, q) = cfg.graph.neighbor(node_before, *port);
                    if q != *remote_port {
                        return Err(format!("probe of port {port} reported remote port {remote_port}, truth {q}"));
                    }
                    let truth = self.truth(sim, tree, y);
                    if truth == *outcome {
                        self.probes_checked += 1;
                    } else if self.overtaken(tree, y, outcome) {
                        self.probes_stale += 1;
                    } else {
                        return Err(format!("probe of node {y} said {outcome}, truth {truth}"));
                    }
                }
                Marker::ProbeStart { tree, pool } => {
                    self.probe_since.insert((tree.leader, tree.level), self.cycles);
                    if !self.rooted {
                        continue;
                    }
                    let need = min_pool(cfg.k());
                    if *pool < need {
                        return Err(format!("probe started with {pool} scouts, need {need}"));
                    }
                }
                Marker::Decision if self.rooted => {
                    let scouts = sim.scout_count() as usize;
                    let tree = sim.settled_count() + scouts;
                    if scouts < tree / 3 {
                        return Err(format!("{scouts} vacated of {tree} tree nodes"));
                    }
                }
                Marker::ConstructionEnd { tree } if self.rooted => self.check_tree(cfg, tree)?,
                Marker::Lose { tree } | Marker::Restart { tree } if self.rooted => {
                    return Err(format!("traversal {tree} gave up in a rooted run"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// True if the report held when the probe started and a larger traversal
    /// took the agent before the head read it.
    fn overtaken(&self, tree: &TreeLabel, y: NodeId, outcome: &ProbeOutcome) -> bool {
        let (id, was) = match outcome {
            ProbeOutcome::Occupied(id) => (id, AgentState::Settled),
            ProbeOutcome::Vacated(id) => (id, AgentState::SettledScout),
            ProbeOutcome::Empty => return false,
        };
        let Some(&since) = self.probe_since.get(&(tree.leader, tree.level)) else { return false };
        let Some(&j) = self.index.get(id) else { return false };
        self.left[j].is_some_and(|d| {
            d.cycle >= since && d.home == Some(y) && d.label.same_tree(tree) && d.state == was && self.label[j] > *tree
        })
    }

    fn truth(&self, sim: &Simulation, tree: &TreeLabel, y: NodeId) -> ProbeOutcome {
        let cfg = sim.config();
        for &o in sim.occupants(y) {
            let b = &cfg.agents[o];
            if b.role == Role::Home && b.tree_label.same_tree(tree) {
                return ProbeOutcome::Occupied(b.id);
            }
        }
        for (j, b) in cfg.agents.iter().enumerate() {
            if self.home[j] == Some(y) && b.state == AgentState::SettledScout && !b.free && b.tree_label.same_tree(tree)
            {
                return ProbeOutcome::Vacated(b.id);
            }
        }
        ProbeOutcome::Empty
    }

    /// The settled agents' parent pointers must form a port-one tree, up to
    /// two kinds of node the walk never got back to: partial nodes, which
    /// must become covered by swapping in their port-1 edge, and leaves that
    /// were never probed from, settled as the last step of construction.
    fn check_tree(&self, cfg: &Configuration, tree: &TreeLabel) -> Result<(), String> {
        let g = &cfg.graph;
        let mut nodes = BTreeSet::new();
        let mut edges = Vec::new();
        let mut partial = Vec::new();
        let mut unprobed = BTreeSet::new();
        for (j, b) in cfg.agents.iter().enumerate() {
            if !b.tree_label.same_tree(tree) {
                continue;
            }
            if matches!(b.task, Task::SettleVia(_) | Task::SettleHere) {
                // on its way to a neighbor as part of a shortcut
                let Some((pid, port)) = b.parent else { continue };
                let u = self.index.get(&pid).and_then(|&p| self.home[p]).ok_or(format!("parent {pid} has no node"))?;
                let (v, q) = g.neighbor(u, port);
                nodes.insert(v);
                unprobed.insert(v);
                edges.push(EdgeRecord::new(u, port, q, v));
                continue;
            }
            let placed = b.state == AgentState::Settled || (b.state == AgentState::SettledScout && !b.free);
            if !placed {
                continue;
            }
            let Some(v) = self.home[j] else { continue };
            nodes.insert(v);
            if b.node_type == DfsNodeType::PartiallyVisited {
                partial.push(v);
            }
            if b.checked == 0 {
                unprobed.insert(v);
            }
            if let (Some((pid, q)), Some(pp)) = (b.parent, b.parent_port) {
                let u = self.index.get(&pid).and_then(|&p| self.home[p]).ok_or(format!("parent {pid} has no node"))?;
                edges.push(EdgeRecord::new(u, q, pp, v));
            }
        }
        for v in partial {
            let covered = edges.iter().any(|e| (e.u == v && e.p_uv == 1) || (e.v == v && e.p_vu == 1));
            let (w, q) = g.neighbor(v, 1);
            if covered || !nodes.contains(&w) {
                continue;
            }
            if let Some(e) = edges.iter_mut().find(|e| e.v == v) {
                *e = EdgeRecord::new(w, q, 1, v);
            }
        }
        let Some(left) = uncovered(g, &nodes, &edges) else {
            return Err(format!("construction edges over {} nodes do not form a tree", nodes.len()));
        };
        if nodes.len() == 1 {
            return Ok(());
        }
        let inner: BTreeSet<NodeId> = edges.iter().map(|e| e.u).collect();
        match left.iter().find(|v| !unprobed.contains(v) || inner.contains(v)) {
            Some(v) => Err(format!("node {v} of the construction tree has no port-1 tree edge")),
            None => Ok(()),
        }
    }
}
