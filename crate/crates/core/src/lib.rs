//! Dispersion of mobile agents on anonymous port-labeled graphs.
//!
//! The crate is split the same way the simulator is layered: [`graph`] is the
//! world, [`p1tree`] holds the centralized tree constructions, [`agents`] the
//! per-agent memory, [`runtime`] the asynchronous scheduler and
//! [`dispersion`] the agent algorithms themselves.

pub mod agents;
pub mod dispersion;
pub mod graph;
pub mod p1tree;
pub mod runtime;

pub use agents::{init_agents, memory_bits, Agent, AgentId, AgentState, IdPolicy, ProbeTuple};
pub use dispersion::{check_dispersed, Dispersion};
pub use graph::{
    edge_type, generate, load_graph, random_with_max_degree, save_graph, EdgeRecord, EdgeType, GraphError, GraphKind,
    NodeId, Port, PortLabeledGraph,
};
pub use p1tree::{
    centralized_p1tree, dfs_p1tree, is_p1tree, is_partial_p1tree, load_tree, p1tree_oracle, save_tree,
    ConstructionTrace, DfsNodeType, P1Tree, TreeError, TreeEvent,
};
pub use runtime::{
    epochs_between, run, Configuration, Marker, Metrics, Placement, ProbeOutcome, RunError, RunOptions,
    SchedulerPolicy, SimulationTrace, TraceEvent, TraceMode,
};
