//! Anonymous port-labeled graphs.
//!
//! Node indices only exist inside the simulator and the text format. Agent
//! code never sees them: it gets the degree of the node it stands on, the port
//! it arrived through and the memory of co-located agents.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type NodeId = usize;
/// Local edge label, always in `1..=degree`.
pub type Port = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("node {node} is out of range for a graph of {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop at node {node}")]
    SelfLoop { node: NodeId },
    #[error("parallel edges between {u} and {v}")]
    ParallelEdge { u: NodeId, v: NodeId },
    #[error("port 0 used at node {node}")]
    ZeroPort { node: NodeId },
    #[error("port {port} used twice at node {node}")]
    DuplicatePort { node: NodeId, port: Port },
    #[error("node {node} has degree {degree} but port {port} is missing")]
    PortGap { node: NodeId, port: Port, degree: usize },
    #[error("edge {u}:{p_uv} -> {v} has no matching port back at {v}")]
    Asymmetric { u: NodeId, p_uv: Port, v: NodeId },
    #[error("graph is disconnected, node {node} unreachable from node 0")]
    Disconnected { node: NodeId },
    #[error("invalid size {n} for {kind}")]
    InvalidSize { kind: GraphKind, n: usize },
}

/// One edge written from the side of `u`: port `p_uv` at `u` and `p_vu` at `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRecord {
    pub u: NodeId,
    pub p_uv: Port,
    pub p_vu: Port,
    pub v: NodeId,
}

impl EdgeRecord {
    pub fn new(u: NodeId, p_uv: Port, p_vu: Port, v: NodeId) -> Self {
        EdgeRecord { u, p_uv, p_vu, v }
    }

    /// The same edge seen from `v`.
    pub fn reversed(self) -> Self {
        EdgeRecord { u: self.v, p_uv: self.p_vu, p_vu: self.p_uv, v: self.u }
    }

    /// Orientation with the smaller endpoint first.
    pub fn canonical(self) -> Self {
        if self.u <= self.v {
            self
        } else {
            self.reversed()
        }
    }

    /// Type of the edge as seen from `u`.
    pub fn edge_type(&self) -> EdgeType {
        edge_type(self.p_uv, self.p_vu)
    }

    pub fn has_port_one(&self) -> bool {
        self.p_uv == 1 || self.p_vu == 1
    }

    pub fn other(&self, x: NodeId) -> NodeId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeType {
    T11,
    Tp1,
    T1q,
    Tpq,
}

impl EdgeType {
    /// Rank in the traversal priority `tp1 > t11 ~ t1q > tpq`; lower is better.
    pub fn priority(self) -> u8 {
        match self {
            EdgeType::Tp1 => 0,
            EdgeType::T11 | EdgeType::T1q => 1,
            EdgeType::Tpq => 2,
        }
    }

    /// Type of the same edge seen from the other endpoint.
    pub fn flipped(self) -> EdgeType {
        match self {
            EdgeType::T11 => EdgeType::T11,
            EdgeType::Tp1 => EdgeType::T1q,
            EdgeType::T1q => EdgeType::Tp1,
            EdgeType::Tpq => EdgeType::Tpq,
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeType::T11 => "t11",
            EdgeType::Tp1 => "tp1",
            EdgeType::T1q => "t1q",
            EdgeType::Tpq => "tpq",
        })
    }
}

/// Classifies an edge from the endpoint whose port is `p_uv`.
pub fn edge_type(p_uv: Port, p_vu: Port) -> EdgeType {
    debug_assert!(p_uv >= 1 && p_vu >= 1);
    match (p_uv == 1, p_vu == 1) {
        (true, true) => EdgeType::T11,
        (true, false) => EdgeType::T1q,
        (false, true) => EdgeType::Tp1,
        (false, false) => EdgeType::Tpq,
    }
}

/// Simple connected undirected graph with per-node port numbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortLabeledGraph {
    // adj[v][p - 1] = (neighbor, port at neighbor leading back to v)
    adj: Vec<Vec<(NodeId, Port)>>,
}

impl PortLabeledGraph {
    /// Builds a graph from an edge list and checks every invariant.
    pub fn from_edges(n: usize, edges: &[EdgeRecord]) -> Result<Self, GraphError> {
        let mut slots: Vec<Vec<Option<(NodeId, Port)>>> = vec![Vec::new(); n];
        let mut pairs = HashSet::new();
        for e in edges {
            for node in [e.u, e.v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop { node: e.u });
            }
            if !pairs.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(GraphError::ParallelEdge { u: e.u.min(e.v), v: e.u.max(e.v) });
            }
            for (x, p, y, q) in [(e.u, e.p_uv, e.v, e.p_vu), (e.v, e.p_vu, e.u, e.p_uv)] {
                if p == 0 {
                    return Err(GraphError::ZeroPort { node: x });
                }
                let idx = p as usize - 1;
                if slots[x].len() <= idx {
                    slots[x].resize(idx + 1, None);
                }
                if slots[x][idx].is_some() {
                    return Err(GraphError::DuplicatePort { node: x, port: p });
                }
                slots[x][idx] = Some((y, q));
            }
        }
        let mut adj = Vec::with_capacity(n);
        for (v, row) in slots.into_iter().enumerate() {
            let degree = row.iter().filter(|s| s.is_some()).count();
            let mut out = Vec::with_capacity(row.len());
            for (i, s) in row.into_iter().enumerate() {
                match s {
                    Some(s) => out.push(s),
                    None => return Err(GraphError::PortGap { node: v, port: i as Port + 1, degree }),
                }
            }
            adj.push(out);
        }
        let g = PortLabeledGraph { adj };
        g.check_connected()?;
        Ok(g)
    }

    /// Builds a graph from port-indexed adjacency rows, `rows[v][p - 1] = (w, q)`.
    pub fn from_adjacency(rows: Vec<Vec<(NodeId, Port)>>) -> Result<Self, GraphError> {
        let n = rows.len();
        let mut edges = Vec::new();
        for (u, row) in rows.iter().enumerate() {
            for (i, &(v, q)) in row.iter().enumerate() {
                let p = i as Port + 1;
                if v >= n {
                    return Err(GraphError::NodeOutOfRange { node: v, n });
                }
                let back = rows[v].get(q.max(1) as usize - 1).copied();
                if q == 0 || back != Some((u, p)) {
                    return Err(GraphError::Asymmetric { u, p_uv: p, v });
                }
                if u < v {
                    edges.push(EdgeRecord::new(u, p, q, v));
                } else if u == v {
                    return Err(GraphError::SelfLoop { node: u });
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let n = self.adj.len();
        if n == 0 {
            return Ok(());
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(node) => Err(GraphError::Disconnected { node }),
            None => Ok(()),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Neighbor reached through port `p` at `v`, with the port at the neighbor.
    pub fn neighbor(&self, v: NodeId, p: Port) -> (NodeId, Port) {
        self.adj[v][p as usize - 1]
    }

    /// Edge record leaving `v` through port `p`.
    pub fn edge_at(&self, v: NodeId, p: Port) -> EdgeRecord {
        let (w, q) = self.neighbor(v, p);
        EdgeRecord::new(v, p, q, w)
    }

    /// Port at `u` leading to `v`, if adjacent.
    pub fn port_to(&self, u: NodeId, v: NodeId) -> Option<Port> {
        self.adj[u].iter().position(|&(w, _)| w == v).map(|i| i as Port + 1)
    }

    /// Edges incident to `v` in port order, oriented away from `v`.
    pub fn incident(&self, v: NodeId) -> impl Iterator<Item = EdgeRecord> + '_ {
        self.adj[v].iter().enumerate().map(move |(i, &(w, q))| EdgeRecord::new(v, i as Port + 1, q, w))
    }

    /// All edges with `u < v`, sorted by `(u, v)`.
    pub fn edges(&self) -> Vec<EdgeRecord> {
        let mut out: Vec<EdgeRecord> =
            (0..self.node_count()).flat_map(|u| self.incident(u).filter(|e| e.u < e.v)).collect();
        out.sort_by_key(|e| (e.u, e.v));
        out
    }
}

/// Parses the line format: `n`, then one `u p_uv p_vu v` line per edge.
pub fn load_graph(text: &str) -> Result<PortLabeledGraph, GraphError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| GraphError::Parse { line: 1, msg: "missing node count".into() })?;
    let n: usize =
        first.trim().parse().map_err(|_| GraphError::Parse { line: 1, msg: format!("bad node count {first:?}") })?;
    let mut edges = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(GraphError::Parse { line: i + 1, msg: format!("expected 4 fields, found {}", fields.len()) });
        }
        let mut nums = [0usize; 4];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| GraphError::Parse { line: i + 1, msg: format!("not a number: {f:?}") })?;
        }
        edges.push(EdgeRecord::new(nums[0], nums[1] as Port, nums[2] as Port, nums[3]));
    }
    PortLabeledGraph::from_edges(n, &edges)
}

/// Canonical text form; `load_graph(&save_graph(g)) == g`.
pub fn save_graph(g: &PortLabeledGraph) -> String {
    let mut out = format!("{}\n", g.node_count());
    for e in g.edges() {
        out.push_str(&format!("{} {} {} {}\n", e.u, e.p_uv, e.p_vu, e.v));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Line,
    Ring,
    Complete,
    Star,
    RandomConnected,
    FixtureFig2,
    FixtureFig3,
    FixtureExample,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Line => "line",
            GraphKind::Ring => "ring",
            GraphKind::Complete => "complete",
            GraphKind::Star => "star",
            GraphKind::RandomConnected => "random",
            GraphKind::FixtureFig2 => "fig2",
            GraphKind::FixtureFig3 => "fig3",
            GraphKind::FixtureExample => "example",
        })
    }
}

impl FromStr for GraphKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "line" => GraphKind::Line,
            "ring" => GraphKind::Ring,
            "complete" => GraphKind::Complete,
            "star" => GraphKind::Star,
            "random" | "random_connected" => GraphKind::RandomConnected,
            "fig2" | "fixture_fig2" => GraphKind::FixtureFig2,
            "fig3" | "fixture_fig3" => GraphKind::FixtureFig3,
            "example" | "fixture_example" => GraphKind::FixtureExample,
            other => return Err(format!("unknown graph kind {other:?}")),
        })
    }
}

impl GraphKind {
    pub fn is_fixture(self) -> bool {
        matches!(self, GraphKind::FixtureFig2 | GraphKind::FixtureFig3 | GraphKind::FixtureExample)
    }
}

/// Builds a graph of the given family. Fixtures ignore `n` and `seed`.
pub fn generate(kind: GraphKind, n: usize, seed: u64) -> Result<PortLabeledGraph, GraphError> {
    let min = match kind {
        GraphKind::Ring => 3,
        k if k.is_fixture() => 0,
        _ => 2,
    };
    if n < min {
        return Err(GraphError::InvalidSize { kind, n });
    }
    let edges = match kind {
        GraphKind::Line => line_edges(n),
        GraphKind::Ring => {
            let mut e = line_edges(n);
            // close the ring: port 2 at the last node, port 2 at node 0 (node 0 has 1 -> 1)
            e.push(EdgeRecord::new(0, 2, 2, n - 1));
            e
        }
        GraphKind::Complete => {
            let mut e = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    e.push(EdgeRecord::new(u, v as Port, (u + 1) as Port, v));
                }
            }
            e
        }
        GraphKind::Star => (1..n).map(|v| EdgeRecord::new(0, v as Port, 1, v)).collect(),
        GraphKind::RandomConnected => return Ok(random_connected(n, seed)),
        GraphKind::FixtureFig2 => return fixture(10, FIG2),
        GraphKind::FixtureFig3 => return fixture(11, FIG3),
        GraphKind::FixtureExample => return fixture(6, EXAMPLE),
    };
    PortLabeledGraph::from_edges(n, &edges)
}

// Node i: port 1 towards i-1 and port 2 towards i+1; node 0 uses port 1 for node 1.
fn line_edges(n: usize) -> Vec<EdgeRecord> {
    (0..n - 1).map(|u| EdgeRecord::new(u, if u == 0 { 1 } else { 2 }, 1, u + 1)).collect()
}

fn random_connected(n: usize, seed: u64) -> PortLabeledGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for (u, v) in random_tree(n, &mut rng) {
        pairs.insert((u.min(v), u.max(v)));
    }
    let target = (2 * n).min(n * (n - 1) / 2);
    while pairs.len() < target {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    label_ports(n, &pairs, &mut rng)
}

/// Random connected graph whose largest degree is exactly `delta`.
pub fn random_with_max_degree(n: usize, delta: usize, seed: u64) -> Result<PortLabeledGraph, GraphError> {
    if n < 2 || delta < 2 || delta >= n {
        return Err(GraphError::InvalidSize { kind: GraphKind::RandomConnected, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degree = vec![0usize; n];
    let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let add = |u: NodeId, v: NodeId, degree: &mut Vec<usize>, pairs: &mut BTreeSet<(NodeId, NodeId)>| {
        if u != v && degree[u] < delta && degree[v] < delta && pairs.insert((u.min(v), u.max(v))) {
            degree[u] += 1;
            degree[v] += 1;
        }
    };
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng);
    for i in 1..n {
        let open: Vec<NodeId> = order[..i].iter().copied().filter(|&u| degree[u] < delta).collect();
        let u = *open.choose(&mut rng).expect("a tree leaf always has room");
        add(u, order[i], &mut degree, &mut pairs);
    }
    let hub = order[0];
    let mut others: Vec<NodeId> = (0..n).filter(|&v| v != hub).collect();
    others.shuffle(&mut rng);
    for v in others {
        if degree[hub] == delta {
            break;
        }
        add(hub, v, &mut degree, &mut pairs);
    }
    for _ in 0..4 * n {
        add(rng.gen_range(0..n), rng.gen_range(0..n), &mut degree, &mut pairs);
    }
    if degree[hub] < delta {
        return Err(GraphError::InvalidSize { kind: GraphKind::RandomConnected, n });
    }
    Ok(label_ports(n, &pairs, &mut rng))
}

// Each node gets an independent random order of its ports.
fn label_ports(n: usize, pairs: &BTreeSet<(NodeId, NodeId)>, rng: &mut ChaCha8Rng) -> PortLabeledGraph {
    let mut incident: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for &(u, v) in pairs {
        incident[u].push(v);
        incident[v].push(u);
    }
    for row in &mut incident {
        row.shuffle(rng);
    }
    let port = |x: NodeId, y: NodeId| incident[x].iter().position(|&w| w == y).unwrap() as Port + 1;
    let edges: Vec<EdgeRecord> = pairs.iter().map(|&(u, v)| EdgeRecord::new(u, port(u, v), port(v, u), v)).collect();
    PortLabeledGraph::from_edges(n, &edges).expect("generator produced an invalid graph")
}

// Uniform labeled tree from a random Pruefer sequence.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<NodeId> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut leaves: BTreeSet<NodeId> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = *leaves.iter().next().unwrap();
        leaves.remove(&leaf);
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let mut rest = leaves.into_iter();
    edges.push((rest.next().unwrap(), rest.next().unwrap()));
    edges
}

fn fixture(n: usize, edges: &[(NodeId, NodeId, Port, Port)]) -> Result<PortLabeledGraph, GraphError> {
    let edges: Vec<EdgeRecord> = edges.iter().map(|&(a, b, pa, pb)| EdgeRecord::new(a, pa, pb, b)).collect();
    PortLabeledGraph::from_edges(n, &edges)
}

// (a, b, port at a, port at b)
const FIG2: &[(NodeId, NodeId, Port, Port)] = &[
    (0, 1, 1, 2),
    (0, 2, 2, 1),
    (0, 3, 3, 1),
    (1, 3, 1, 2),
    (2, 3, 2, 3),
    (3, 4, 4, 3),
    (4, 6, 2, 1),
    (4, 5, 1, 1),
    (5, 6, 2, 2),
    (5, 7, 3, 1),
    (5, 9, 4, 1),
    (5, 8, 5, 1),
    (7, 8, 2, 2),
    (9, 8, 2, 3),
];

/// Tree edges of the Fig. 2 fixture, as `(a, b)` node pairs.
pub const FIG2_TREE: &[(NodeId, NodeId)] = &[(0, 2), (0, 3), (1, 3), (3, 4), (4, 6), (5, 6), (5, 7), (5, 9), (5, 8)];

// Ports at nodes 0 and 9 are renumbered to close the gap left by the figure.
const FIG3: &[(NodeId, NodeId, Port, Port)] = &[
    (0, 9, 1, 1),
    (0, 1, 2, 1),
    (0, 7, 3, 1),
    (0, 10, 4, 2),
    (0, 6, 5, 1),
    (2, 9, 2, 2),
    (2, 1, 1, 2),
    (2, 3, 3, 1),
    (4, 5, 1, 2),
    (4, 3, 2, 2),
    (4, 7, 3, 2),
    (9, 10, 3, 1),
    (9, 6, 4, 2),
    (1, 5, 3, 1),
    (1, 6, 4, 4),
    (5, 6, 3, 3),
    (7, 8, 3, 1),
];

/// Node names of the appendix example, by index.
pub const EXAMPLE_NAMES: [&str; 6] = ["v", "u", "w", "x", "y", "z"];

const EXAMPLE: &[(NodeId, NodeId, Port, Port)] = &[
    (0, 1, 1, 1),
    (1, 2, 2, 1),
    (2, 3, 2, 2),
    (3, 1, 1, 3),
    (3, 0, 3, 2),
    (2, 4, 3, 3),
    (4, 5, 1, 1),
    (5, 2, 2, 4),
    (4, 3, 2, 4),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_type_cases() {
        assert_eq!(edge_type(1, 1), EdgeType::T11);
        assert_eq!(edge_type(3, 1), EdgeType::Tp1);
        assert_eq!(edge_type(1, 4), EdgeType::T1q);
        assert_eq!(edge_type(2, 3), EdgeType::Tpq);
    }

    #[test]
    fn two_node_file() {
        let g = load_graph("2\n0 1 1 1\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.neighbor(0, 1), (1, 1));
        assert_eq!(save_graph(&g), "2\n0 1 1 1\n");
    }

    #[test]
    fn duplicate_port_names_node() {
        let err = load_graph("3\n0 1 1 1\n0 1 1 2\n").unwrap_err();
        assert_eq!(err, GraphError::DuplicatePort { node: 0, port: 1 });
    }

    #[test]
    fn port_gap_names_node() {
        let err = load_graph("2\n0 2 1 1\n").unwrap_err();
        assert!(matches!(err, GraphError::PortGap { node: 0, port: 1, .. }));
    }

    #[test]
    fn disconnected_and_self_loop() {
        assert_eq!(load_graph("4\n0 1 1 1\n2 1 1 3\n").unwrap_err(), GraphError::Disconnected { node: 2 });
        assert_eq!(load_graph("2\n1 1 2 1\n").unwrap_err(), GraphError::SelfLoop { node: 1 });
    }

    #[test]
    fn malformed_line() {
        assert!(matches!(load_graph("2\n0 1 1\n"), Err(GraphError::Parse { line: 2, .. })));
        assert!(matches!(load_graph("x\n"), Err(GraphError::Parse { line: 1, .. })));
    }

    #[test]
    fn asymmetric_rows() {
        let err = PortLabeledGraph::from_adjacency(vec![vec![(1, 1)], vec![(0, 2)]]).unwrap_err();
        assert!(matches!(err, GraphError::Asymmetric { u: 0, .. }));
    }

    #[test]
    fn line_of_two_is_t11() {
        let g = generate(GraphKind::Line, 2, 0).unwrap();
        assert_eq!(g.edge_at(0, 1).edge_type(), EdgeType::T11);
    }

    #[test]
    fn fixtures_are_valid() {
        let fig2 = generate(GraphKind::FixtureFig2, 0, 0).unwrap();
        assert_eq!(fig2.node_count(), 10);
        assert_eq!(fig2.max_degree(), 5);
        let fig3 = generate(GraphKind::FixtureFig3, 0, 0).unwrap();
        assert_eq!(fig3.node_count(), 11);
        let ex = generate(GraphKind::FixtureExample, 0, 0).unwrap();
        assert_eq!(ex.edge_at(0, 1).edge_type(), EdgeType::T11);
        assert_eq!(ex.neighbor(0, 1), (1, 1));
    }

    #[test]
    fn random_is_deterministic() {
        let a = generate(GraphKind::RandomConnected, 20, 7).unwrap();
        let b = generate(GraphKind::RandomConnected, 20, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 40);
    }

    #[test]
    fn capped_degree() {
        for (n, d) in [(10, 4), (64, 8), (64, 16), (5, 4)] {
            let g = random_with_max_degree(n, d, 3).unwrap();
            assert_eq!(g.max_degree(), d);
            assert_eq!(g.node_count(), n);
        }
        assert!(random_with_max_degree(4, 4, 0).is_err());
    }

    #[test]
    fn ring_and_complete() {
        let r = generate(GraphKind::Ring, 5, 0).unwrap();
        assert!((0..5).all(|v| r.degree(v) == 2));
        let k = generate(GraphKind::Complete, 5, 0).unwrap();
        assert_eq!(k.edge_count(), 10);
        assert!(generate(GraphKind::Ring, 2, 0).is_err());
    }
}
