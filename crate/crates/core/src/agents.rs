//! Agent identity and the full persistent memory of one agent.
//!
//! Nodes are memory-less, so everything the algorithms know lives here. The
//! fields follow the variable table of the dispersion algorithm plus a small
//! number of bookkeeping fields the per-agent realization needs (task mailbox,
//! group size, a few one-bit flags).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{EdgeType, Port};
use crate::p1tree::DfsNodeType;

pub type AgentId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AgentState {
    #[default]
    Unsettled,
    Settled,
    SettledScout,
}

impl fmt::Display for AgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentState::Unsettled => "unsettled",
            AgentState::Settled => "settled",
            AgentState::SettledScout => "settledScout",
        })
    }
}

/// What the agent is doing for its traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Role {
    /// Not yet organized into a group.
    #[default]
    Initial,
    /// Travels with a DFS head (unsettled or vacated).
    Member,
    /// Settled at its node.
    Home,
    /// Member of a group that lost a merge and is looking for the winner.
    Chaser,
}

/// Work order written into an agent's mailbox by the group coordinator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Task {
    #[default]
    Idle,
    Move(Port),
    Scout,
    CheckPortOne,
    PullParent,
    SettleVia(Port),
    SettleHere,
}

/// Coordinator phase, only meaningful while `lead` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Phase {
    #[default]
    Arrive,
    Probe,
    ProbeShortcut,
    Vacate,
    RetraceFresh,
    RetraceUp,
    RetraceDown,
    Chase,
}

/// Identifies a traversal and orders traversals for merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TreeLabel {
    pub leader: AgentId,
    pub level: u32,
    pub weight: u32,
}

impl TreeLabel {
    /// Two labels name the same traversal when leader and level agree; the
    /// weight is a counter that only the coordinator keeps current.
    pub fn same_tree(&self, other: &TreeLabel) -> bool {
        self.leader == other.leader && self.level == other.level
    }
}

impl Ord for TreeLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.level, self.leader, self.weight).cmp(&(other.level, other.leader, other.weight))
    }
}

impl PartialOrd for TreeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TreeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.leader, self.level, self.weight)
    }
}

/// What a probe learned about one neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProbeTuple {
    pub port_at_x: Port,
    pub edge_type: EdgeType,
    pub neighbor_node_type: Option<DfsNodeType>,
    pub neighbor_settled_agent: Option<AgentId>,
}

/// Coordinator context. Moves to the lowest-ID member when membership changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeadContext {
    pub phase: Phase,
    pub group_size: u32,
    pub prev_id: Option<AgentId>,
    pub child_port: Option<Port>,
    pub sibling_details: Option<(AgentId, Port)>,
    pub child_details: Option<(AgentId, Port)>,
    pub next_agent_id: Option<AgentId>,
    pub next_port: Option<Port>,
    pub expected_host: Option<AgentId>,
    pub reconfig: bool,
    pub vacate_eval: bool,
    pub chase_target: Option<TreeLabel>,
    pub chase_steps: u32,
    pub chase_hops: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    pub state: AgentState,
    pub role: Role,
    pub arrival_port: Option<Port>,
    pub node_type: DfsNodeType,
    /// Parent's ID and the port at the parent leading here.
    pub parent: Option<(AgentId, Port)>,
    /// Port here leading to the parent.
    pub parent_port: Option<Port>,
    pub p1_neighbor: Option<AgentId>,
    pub port_at_p1_neighbor: Option<Port>,
    pub vacated_neighbor: bool,
    pub recent_child: Option<Port>,
    pub sibling: Option<(AgentId, Port)>,
    pub recent_port: Option<Port>,
    pub probe_result: Option<ProbeTuple>,
    pub checked: u32,

    pub scout_port: Option<Port>,
    pub scout_edge_type: Option<EdgeType>,
    pub scout_found: Option<AgentId>,
    pub scout_found_type: Option<DfsNodeType>,
    pub scout_p1_neighbor: Option<AgentId>,
    pub scout_port_at_p1_neighbor: Option<Port>,
    pub scout_p1p1_neighbor: Option<AgentId>,
    pub scout_port_at_p1p1_neighbor: Option<Port>,
    pub scout_return_port: Option<Port>,
    pub scout_phase: u8,
    pub scout_foreign: bool,
    pub saw_higher: bool,

    pub ctx: LeadContext,
    pub lead: bool,
    pub tree_label: TreeLabel,
    pub task: Task,

    /// A tree edge with port 1 at some end touches this node.
    pub port_one_edge: bool,
    /// 2 when vacated while its port-1 neighbor was itself vacated.
    pub vacate_depth: u8,
    /// Sibling pointer from before a reconfiguration.
    pub detached_sibling: Option<(AgentId, Port)>,
    pub head_here: bool,
    /// A vacated agent whose node was given up; it needs a new home.
    pub free: bool,
}

impl Agent {
    pub fn new(id: AgentId) -> Self {
        Agent {
            id,
            state: AgentState::Unsettled,
            role: Role::Initial,
            arrival_port: None,
            node_type: DfsNodeType::Unvisited,
            parent: None,
            parent_port: None,
            p1_neighbor: None,
            port_at_p1_neighbor: None,
            vacated_neighbor: false,
            recent_child: None,
            sibling: None,
            recent_port: None,
            probe_result: None,
            checked: 0,
            scout_port: None,
            scout_edge_type: None,
            scout_found: None,
            scout_found_type: None,
            scout_p1_neighbor: None,
            scout_port_at_p1_neighbor: None,
            scout_p1p1_neighbor: None,
            scout_port_at_p1p1_neighbor: None,
            scout_return_port: None,
            scout_phase: 0,
            scout_foreign: false,
            saw_higher: false,
            ctx: LeadContext::default(),
            lead: false,
            tree_label: TreeLabel::default(),
            task: Task::Idle,
            port_one_edge: false,
            vacate_depth: 0,
            detached_sibling: None,
            head_here: false,
            free: false,
        }
    }

    /// Forgets every tree pointer, keeping identity, state, label and any
    /// coordinator context.
    pub fn clear_tree_fields(&mut self) {
        let keep = Agent {
            id: self.id,
            state: self.state,
            role: self.role,
            arrival_port: self.arrival_port,
            tree_label: self.tree_label,
            task: self.task,
            free: self.free,
            lead: self.lead,
            ctx: self.ctx,
            ..Agent::new(self.id)
        };
        *self = keep;
    }

    pub fn clear_scout_fields(&mut self) {
        self.scout_port = None;
        self.scout_edge_type = None;
        self.scout_found = None;
        self.scout_found_type = None;
        self.scout_p1_neighbor = None;
        self.scout_port_at_p1_neighbor = None;
        self.scout_p1p1_neighbor = None;
        self.scout_port_at_p1p1_neighbor = None;
        self.scout_return_port = None;
        self.scout_phase = 0;
        self.scout_foreign = false;
        self.saw_higher = false;
    }

    pub fn is_root(&self) -> bool {
        self.parent_port.is_none()
    }

    /// One line of `field=value` pairs, `-` for absent values.
    pub fn snapshot(&self) -> String {
        fn opt<T: fmt::Display>(v: Option<T>) -> String {
            v.map_or_else(|| "-".to_string(), |v| v.to_string())
        }
        fn pair(v: Option<(AgentId, Port)>) -> String {
            v.map_or_else(|| "-".to_string(), |(a, p)| format!("{a}:{p}"))
        }
        let mut s = String::new();
        let _ = write!(
            s,
            "id={} state={} nodeType={} parent={} parentPort={} P1Neighbor={} portAtP1Neighbor={} \
             vacatedNeighbor={} recentChild={} sibling={} recentPort={} checked={} treeLabel={}",
            self.id,
            self.state,
            self.node_type,
            pair(self.parent),
            opt(self.parent_port),
            opt(self.p1_neighbor),
            opt(self.port_at_p1_neighbor),
            self.vacated_neighbor,
            opt(self.recent_child),
            pair(self.sibling),
            opt(self.recent_port),
            self.checked,
            self.tree_label,
        );
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdPolicy {
    /// IDs 1..=k in order.
    Dense,
    /// Distinct IDs drawn from 1..=k^2.
    Random(u64),
}

pub fn init_agents(k: usize, policy: IdPolicy) -> Vec<Agent> {
    assert!(k >= 1, "need at least one agent");
    match policy {
        IdPolicy::Dense => (1..=k as AgentId).map(Agent::new).collect(),
        IdPolicy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hi = (k as u64 * k as u64).max(k as u64) as AgentId;
            let mut seen = BTreeSet::new();
            let mut out = Vec::with_capacity(k);
            while out.len() < k {
                let id = rng.gen_range(1..=hi);
                if seen.insert(id) {
                    out.push(Agent::new(id));
                }
            }
            out
        }
    }
}

fn bits_for(max_value: u64) -> u32 {
    64 - max_value.leading_zeros()
}

/// Number of fields of each kind in [`Agent`], pair members counted apart.
pub mod inventory {
    pub const PORTS: u32 = 19;
    pub const IDS: u32 = 16;
    pub const COUNTERS: u32 = 6;
    /// Sum of the widths of all state, type and flag fields.
    pub const FLAG_BITS: u32 = 36;
}

/// Bits needed to store every persistent field of `a`.
///
/// Ports cost `ceil(log2(delta+1))`, IDs `ceil(log2(max_id+1))` where the
/// largest ID is at least `k`, counters `ceil(log2(k+1))`. Absent values use
/// the zero code, which no port or ID takes.
pub fn memory_bits(a: &Agent, k: usize, delta: usize) -> u32 {
    let port = bits_for(delta as u64);
    let id = bits_for((k as u64).max(a.id as u64));
    let counter = bits_for(k as u64);
    inventory::PORTS * port + inventory::IDS * id + inventory::COUNTERS * counter + inventory::FLAG_BITS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_ids() {
        let a = init_agents(6, IdPolicy::Dense);
        assert_eq!(a.iter().map(|a| a.id).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
        assert!(a.iter().all(|a| a.state == AgentState::Unsettled));
        assert_eq!(init_agents(1, IdPolicy::Dense).len(), 1);
    }

    #[test]
    fn random_ids_are_reproducible_and_unique() {
        let a = init_agents(50, IdPolicy::Random(3));
        let b = init_agents(50, IdPolicy::Random(3));
        assert_eq!(a, b);
        let ids: BTreeSet<_> = a.iter().map(|a| a.id).collect();
        assert_eq!(ids.len(), 50);
    }

    #[test]
    fn fresh_agent_memory_is_frozen() {
        let b0 = memory_bits(&Agent::new(1), 6, 5);
        assert_eq!(b0, 159);
        assert!(b0 <= 40 * 4);
        assert!(memory_bits(&Agent::new(1), 6, 9) >= b0);
        assert!(memory_bits(&Agent::new(1), 40, 5) >= b0);
    }

    #[test]
    fn label_order() {
        let a = TreeLabel { leader: 2, level: 0, weight: 4 };
        let b = TreeLabel { leader: 9, level: 0, weight: 3 };
        let c = TreeLabel { leader: 1, level: 1, weight: 1 };
        assert!(a < b && b < c);
        assert!(b < TreeLabel { weight: 4, ..b });
        assert!(a.same_tree(&TreeLabel { weight: 7, ..a }));
    }

    #[test]
    fn snapshot_uses_dash() {
        let s = Agent::new(4).snapshot();
        assert!(s.starts_with("id=4 state=unsettled"));
        assert!(s.contains("parent=-"));
    }

    #[test]
    fn bits_grow_with_delta() {
        let a = Agent::new(1);
        let small = memory_bits(&a, 6, 7);
        let big = memory_bits(&a, 6, 8);
        assert_eq!(big - small, inventory::PORTS);
        assert!(memory_bits(&a, 12, 8) >= big);
    }
}
