//! Port-one trees: spanning trees in which every node touches a tree edge that
//! carries port 1 at one of its ends.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::graph::{EdgeRecord, EdgeType, GraphError, NodeId, Port, PortLabeledGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("edge {0:?} is not an edge of the graph")]
    EdgeNotInGraph(EdgeRecord),
    #[error("edges do not form a spanning tree rooted at {root}")]
    NotATree { root: NodeId },
    #[error("exhaustive search is limited to 8 nodes, graph has {n}")]
    TooLarge { n: usize },
    #[error("no port-one tree found")]
    NoneFound,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DfsNodeType {
    #[default]
    Unvisited,
    Visited,
    PartiallyVisited,
    FullyVisited,
}

impl fmt::Display for DfsNodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DfsNodeType::Unvisited => "unvisited",
            DfsNodeType::Visited => "visited",
            DfsNodeType::PartiallyVisited => "partial",
            DfsNodeType::FullyVisited => "full",
        })
    }
}

/// Rooted spanning tree stored as parent edges oriented parent -> child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct P1Tree {
    pub root: NodeId,
    parent_edge: Vec<Option<EdgeRecord>>,
}

impl P1Tree {
    /// Orients an undirected edge set away from `root`.
    pub fn from_edges(n: usize, root: NodeId, edges: &[EdgeRecord]) -> Result<Self, TreeError> {
        if root >= n || edges.len() + 1 != n {
            return Err(TreeError::NotATree { root });
        }
        let mut incident: Vec<Vec<EdgeRecord>> = vec![Vec::new(); n];
        for e in edges {
            if e.u >= n || e.v >= n {
                return Err(TreeError::NotATree { root });
            }
            incident[e.u].push(*e);
            incident[e.v].push(e.reversed());
        }
        let mut parent_edge = vec![None; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for e in &incident[u] {
                if !seen[e.v] {
                    seen[e.v] = true;
                    parent_edge[e.v] = Some(*e);
                    stack.push(e.v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(TreeError::NotATree { root });
        }
        Ok(P1Tree { root, parent_edge })
    }

    pub fn node_count(&self) -> usize {
        self.parent_edge.len()
    }

    /// Edge from the parent of `v` down to `v`; `None` for the root.
    pub fn parent_edge(&self, v: NodeId) -> Option<EdgeRecord> {
        self.parent_edge[v]
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent_edge[v].map(|e| e.u)
    }

    /// Tree edges in canonical orientation, sorted.
    pub fn edges(&self) -> Vec<EdgeRecord> {
        let mut out: Vec<EdgeRecord> = self.parent_edge.iter().flatten().map(|e| e.canonical()).collect();
        out.sort();
        out
    }

    pub fn edge_set(&self) -> BTreeSet<EdgeRecord> {
        self.edges().into_iter().collect()
    }

    /// Number of tree edges with port 1 at some end.
    pub fn port_one_edges(&self) -> usize {
        self.parent_edge.iter().flatten().filter(|e| e.has_port_one()).count()
    }
}

/// Checks both tree invariants: a spanning tree, and a port-1 edge at every node.
pub fn is_p1tree(g: &PortLabeledGraph, t: &P1Tree) -> Result<bool, TreeError> {
    let n = g.node_count();
    for e in t.parent_edge.iter().flatten() {
        if e.u >= n || e.p_uv as usize > g.degree(e.u) || g.edge_at(e.u, e.p_uv) != *e {
            return Err(TreeError::EdgeNotInGraph(*e));
        }
    }
    if t.node_count() != n || t.root >= n || t.parent_edge[t.root].is_some() {
        return Ok(false);
    }
    // every node must reach the root by parent steps without repeating
    for v in 0..n {
        let (mut x, mut steps) = (v, 0);
        while let Some(e) = t.parent_edge[x] {
            if e.v != x {
                return Ok(false);
            }
            x = e.u;
            steps += 1;
            if steps > n {
                return Ok(false);
            }
        }
        if x != t.root {
            return Ok(false);
        }
    }
    if n == 1 {
        return Ok(true);
    }
    let mut touched = vec![false; n];
    for e in t.parent_edge.iter().flatten().filter(|e| e.has_port_one()) {
        touched[e.u] = true;
        touched[e.v] = true;
    }
    Ok(touched.into_iter().all(|x| x))
}

/// Same invariants for a tree over a subset of nodes: `edges` must be graph
/// edges spanning exactly `nodes`, and every node in `nodes` must touch a
/// tree edge with port 1 at some end.
pub fn is_partial_p1tree(g: &PortLabeledGraph, nodes: &BTreeSet<NodeId>, edges: &[EdgeRecord]) -> bool {
    uncovered(g, nodes, edges).is_some_and(|u| nodes.len() == 1 || u.is_empty())
}

/// For a tree over `nodes` made of edges of `g`, the nodes touching no
/// port-1 tree edge. `None` if the edges do not form such a tree.
pub fn uncovered(g: &PortLabeledGraph, nodes: &BTreeSet<NodeId>, edges: &[EdgeRecord]) -> Option<BTreeSet<NodeId>> {
    let n = g.node_count();
    if nodes.is_empty() || edges.len() + 1 != nodes.len() {
        return None;
    }
    let mut uf = UnionFind::new(n);
    let mut left = nodes.clone();
    for e in edges {
        if e.u >= n || e.v >= n || e.p_uv as usize > g.degree(e.u) || g.edge_at(e.u, e.p_uv) != *e {
            return None;
        }
        if !nodes.contains(&e.u) || !nodes.contains(&e.v) || !uf.union(e.u, e.v) {
            return None;
        }
        if e.has_port_one() {
            left.remove(&e.u);
            left.remove(&e.v);
        }
    }
    Some(left)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Grows components over port-1 edges, then joins them with `tpq` edges in
/// `(u, p_uv)` order.
pub fn centralized_p1tree(g: &PortLabeledGraph, start: NodeId) -> P1Tree {
    let n = g.node_count();
    let mut visited = vec![false; n];
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    let order = std::iter::once(start).chain((0..n).filter(|&v| v != start));
    for s in order {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for e in g.incident(u).filter(|e| e.has_port_one()) {
                if !visited[e.v] {
                    visited[e.v] = true;
                    tree.push(e);
                    stack.push(e.v);
                }
            }
        }
    }
    let mut uf = UnionFind::new(n);
    let mut components = n;
    for e in &tree {
        uf.union(e.u, e.v);
        components -= 1;
    }
    let mut joins: Vec<EdgeRecord> = g.edges().into_iter().filter(|e| e.edge_type() == EdgeType::Tpq).collect();
    joins.sort_by_key(|e| (e.u, e.p_uv));
    for e in joins {
        if components == 1 {
            break;
        }
        if uf.union(e.u, e.v) {
            tree.push(e);
            components -= 1;
        }
    }
    P1Tree::from_edges(n, start, &tree).expect("connected graph yields a spanning tree")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeEvent {
    /// Tree edge added, oriented parent -> child.
    Forward(EdgeRecord),
    /// `node` popped; `edge` is its parent edge (none for the root).
    Backtrack {
        node: NodeId,
        edge: Option<EdgeRecord>,
    },
    Mark(NodeId, DfsNodeType),
    Reconfigure {
        node: NodeId,
        old: EdgeRecord,
        new: EdgeRecord,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstructionTrace {
    pub events: Vec<TreeEvent>,
}

impl ConstructionTrace {
    /// Rebuilds the final tree from forward and reconfigure events alone.
    pub fn replay(&self, n: usize, root: NodeId) -> Result<P1Tree, TreeError> {
        let mut parent: Vec<Option<EdgeRecord>> = vec![None; n];
        for ev in &self.events {
            match ev {
                TreeEvent::Forward(e) => parent[e.v] = Some(*e),
                TreeEvent::Reconfigure { node, new, .. } => parent[*node] = Some(*new),
                _ => {}
            }
        }
        let edges: Vec<EdgeRecord> = parent.into_iter().flatten().collect();
        P1Tree::from_edges(n, root, &edges)
    }

    pub fn pops(&self, node: NodeId) -> usize {
        self.events.iter().filter(|ev| matches!(ev, TreeEvent::Backtrack { node: x, .. } if *x == node)).count()
    }

    pub fn reconfigurations(&self) -> impl Iterator<Item = (NodeId, EdgeRecord, EdgeRecord)> + '_ {
        self.events.iter().filter_map(|ev| match ev {
            TreeEvent::Reconfigure { node, old, new } => Some((*node, *old, *new)),
            _ => None,
        })
    }
}

/// Depth-first construction with partially visited nodes and reconfiguration.
pub fn dfs_p1tree(g: &PortLabeledGraph, root: NodeId) -> (P1Tree, ConstructionTrace) {
    let n = g.node_count();
    let mut kind = vec![DfsNodeType::Unvisited; n];
    let mut parent: Vec<Option<EdgeRecord>> = vec![None; n];
    // tree edges with port 1 at some end, per node
    let mut port_one = vec![0usize; n];
    let mut trace = ConstructionTrace::default();
    let mut stack = vec![root];
    kind[root] = DfsNodeType::Visited;
    trace.events.push(TreeEvent::Mark(root, DfsNodeType::Visited));

    let ordered: Vec<Vec<EdgeRecord>> = (0..n)
        .map(|u| {
            let mut es: Vec<EdgeRecord> = g.incident(u).collect();
            es.sort_by_key(|e| (e.edge_type().priority(), e.p_uv));
            es
        })
        .collect();

    while let Some(&u) = stack.last() {
        let next = ordered[u].iter().copied().find(|e| match kind[e.v] {
            DfsNodeType::Unvisited => true,
            DfsNodeType::PartiallyVisited => {
                matches!(e.edge_type(), EdgeType::Tp1 | EdgeType::T11)
            }
            _ => false,
        });
        let Some(e) = next else {
            // still uncovered: its port-1 neighbor is an ancestor and will
            // pick it up on the way back
            let done =
                if port_one[u] == 0 && u != root { DfsNodeType::PartiallyVisited } else { DfsNodeType::FullyVisited };
            kind[u] = done;
            trace.events.push(TreeEvent::Mark(u, done));
            stack.pop();
            trace.events.push(TreeEvent::Backtrack { node: u, edge: parent[u] });
            continue;
        };
        let up_is_tpq = parent[u].is_some_and(|p| p.edge_type() == EdgeType::Tpq);
        if e.edge_type() == EdgeType::Tpq && up_is_tpq && port_one[u] == 0 {
            kind[u] = DfsNodeType::PartiallyVisited;
            trace.events.push(TreeEvent::Mark(u, DfsNodeType::PartiallyVisited));
            stack.pop();
            trace.events.push(TreeEvent::Backtrack { node: u, edge: parent[u] });
            continue;
        }
        if kind[e.v] == DfsNodeType::PartiallyVisited {
            let old = parent[e.v].expect("partially visited node has a parent");
            if old.has_port_one() {
                port_one[old.u] -= 1;
                port_one[old.v] -= 1;
            }
            trace.events.push(TreeEvent::Reconfigure { node: e.v, old, new: e });
        } else {
            trace.events.push(TreeEvent::Forward(e));
        }
        parent[e.v] = Some(e);
        if e.has_port_one() {
            port_one[e.u] += 1;
            port_one[e.v] += 1;
        }
        stack.push(e.v);
        kind[e.v] = DfsNodeType::Visited;
        trace.events.push(TreeEvent::Mark(e.v, DfsNodeType::Visited));
    }
    let edges: Vec<EdgeRecord> = parent.into_iter().flatten().collect();
    let tree = P1Tree::from_edges(n, root, &edges).expect("traversal spans a connected graph");
    (tree, trace)
}

/// Every spanning tree of `g`, as canonical edge sets. Only for tiny graphs.
pub fn spanning_trees(g: &PortLabeledGraph) -> Result<Vec<BTreeSet<EdgeRecord>>, TreeError> {
    let n = g.node_count();
    if n > 8 {
        return Err(TreeError::TooLarge { n });
    }
    let edges = g.edges();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(n);
    enumerate(&edges, 0, n, &mut chosen, &mut out);
    Ok(out)
}

fn enumerate(
    edges: &[EdgeRecord],
    i: usize,
    n: usize,
    chosen: &mut Vec<EdgeRecord>,
    out: &mut Vec<BTreeSet<EdgeRecord>>,
) {
    if chosen.len() + 1 == n {
        out.push(chosen.iter().copied().collect());
        return;
    }
    if i == edges.len() || edges.len() - i < n - 1 - chosen.len() {
        return;
    }
    let mut uf = UnionFind::new(n);
    for e in chosen.iter() {
        uf.union(e.u, e.v);
    }
    if uf.find(edges[i].u) != uf.find(edges[i].v) {
        chosen.push(edges[i]);
        enumerate(edges, i + 1, n, chosen, out);
        chosen.pop();
    }
    enumerate(edges, i + 1, n, chosen, out);
}

/// All spanning trees of `g` that are port-one trees.
pub fn all_p1trees(g: &PortLabeledGraph) -> Result<Vec<BTreeSet<EdgeRecord>>, TreeError> {
    let n = g.node_count();
    let mut out = Vec::new();
    for set in spanning_trees(g)? {
        let edges: Vec<EdgeRecord> = set.iter().copied().collect();
        let t = P1Tree::from_edges(n, 0, &edges)?;
        if is_p1tree(g, &t)? {
            out.push(set);
        }
    }
    Ok(out)
}

/// Exhaustive search for a port-one tree, rooted at node 0.
pub fn p1tree_oracle(g: &PortLabeledGraph) -> Result<P1Tree, TreeError> {
    let n = g.node_count();
    for set in spanning_trees(g)? {
        let edges: Vec<EdgeRecord> = set.into_iter().collect();
        let t = P1Tree::from_edges(n, 0, &edges)?;
        if is_p1tree(g, &t)? {
            return Ok(t);
        }
    }
    Err(TreeError::NoneFound)
}

/// Text form: root on the first line, then `u p_uv p_vu v` per edge.
pub fn save_tree(t: &P1Tree) -> String {
    let mut out = format!("{}\n", t.root);
    for e in t.edges() {
        out.push_str(&format!("{} {} {} {}\n", e.u, e.p_uv, e.p_vu, e.v));
    }
    out
}

pub fn load_tree(text: &str, n: usize) -> Result<P1Tree, TreeError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, msg: &str| TreeError::Graph(GraphError::Parse { line, msg: msg.to_string() });
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "missing root"))?;
    let root: NodeId = first.trim().parse().map_err(|_| parse_err(1, "bad root"))?;
    let mut edges = Vec::new();
    for (i, line) in lines {
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(|f| f.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(i + 1, "not a number"))?;
        if nums.len() != 4 {
            return Err(parse_err(i + 1, "expected 4 fields"));
        }
        edges.push(EdgeRecord::new(nums[0], nums[1] as Port, nums[2] as Port, nums[3]));
    }
    P1Tree::from_edges(n, root, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind, FIG2_TREE};

    fn fixture(kind: GraphKind) -> PortLabeledGraph {
        generate(kind, 0, 0).unwrap()
    }

    #[test]
    fn fig2_blue_tree_is_valid() {
        let g = fixture(GraphKind::FixtureFig2);
        let edges: Vec<EdgeRecord> = FIG2_TREE.iter().map(|&(a, b)| g.edge_at(a, g.port_to(a, b).unwrap())).collect();
        let t = P1Tree::from_edges(10, 0, &edges).unwrap();
        assert!(is_p1tree(&g, &t).unwrap());
    }

    #[test]
    fn two_node_tree() {
        let g = generate(GraphKind::Line, 2, 0).unwrap();
        for root in 0..2 {
            let t = centralized_p1tree(&g, root);
            assert!(is_p1tree(&g, &t).unwrap());
            assert_eq!(t.edges().len(), 1);
        }
        assert_eq!(p1tree_oracle(&g).unwrap().edges().len(), 1);
    }

    #[test]
    fn edge_not_in_graph() {
        let g = generate(GraphKind::Line, 3, 0).unwrap();
        let t = P1Tree::from_edges(3, 0, &[EdgeRecord::new(0, 1, 1, 1), EdgeRecord::new(0, 2, 1, 2)]).unwrap();
        assert!(matches!(is_p1tree(&g, &t), Err(TreeError::EdgeNotInGraph(_))));
    }

    #[test]
    fn line_dfs_is_the_line() {
        for n in 2..10 {
            let g = generate(GraphKind::Line, n, 0).unwrap();
            for root in [0, n / 2, n - 1] {
                let (t, trace) = dfs_p1tree(&g, root);
                assert_eq!(t.edge_set(), g.edges().into_iter().collect());
                assert_eq!(trace.reconfigurations().count(), 0);
            }
        }
    }

    #[test]
    fn fig3_reconfigures_node_six() {
        let g = fixture(GraphKind::FixtureFig3);
        let (t, trace) = dfs_p1tree(&g, 0);
        assert!(is_p1tree(&g, &t).unwrap());
        let first_partial = trace
            .events
            .iter()
            .find_map(|ev| match ev {
                TreeEvent::Mark(v, DfsNodeType::PartiallyVisited) => Some(*v),
                _ => None,
            })
            .unwrap();
        assert_eq!(first_partial, 6);
        let recs: Vec<_> = trace.reconfigurations().collect();
        assert_eq!(recs.len(), 1);
        let (node, old, new) = recs[0];
        assert_eq!(node, 6);
        assert_eq!((old.u.min(old.v), old.u.max(old.v)), (5, 6));
        assert_eq!((new.u, new.v), (0, 6));
        assert_eq!(new.edge_type(), EdgeType::Tp1);
    }

    #[test]
    fn replay_matches() {
        let g = fixture(GraphKind::FixtureFig3);
        let (t, trace) = dfs_p1tree(&g, 0);
        assert_eq!(trace.replay(g.node_count(), 0).unwrap(), t);
    }

    #[test]
    fn tree_text_round_trip() {
        let g = fixture(GraphKind::FixtureFig2);
        let t = centralized_p1tree(&g, 3);
        let back = load_tree(&save_tree(&t), 10).unwrap();
        assert_eq!(back.edge_set(), t.edge_set());
        assert_eq!(back.root, 3);
    }
}
#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;
    use crate::graph::{generate, GraphKind};

    proptest! {
        #[test]
        fn dfs_and_centralized_are_p1trees(n in 2usize..40, seed in any::<u64>(), r in any::<usize>()) {
            let g = generate(GraphKind::RandomConnected, n, seed).unwrap();
            let root = r % n;
            let (t, trace) = dfs_p1tree(&g, root);
            prop_assert!(is_p1tree(&g, &t).unwrap());
            prop_assert_eq!(trace.replay(n, root).unwrap(), t);
            prop_assert!(is_p1tree(&g, &centralized_p1tree(&g, root)).unwrap());
        }

        #[test]
        fn dfs_is_among_all_p1trees(n in 2usize..=6, seed in any::<u64>(), r in any::<usize>()) {
            let g = generate(GraphKind::RandomConnected, n, seed).unwrap();
            let (t, _) = dfs_p1tree(&g, r % n);
            let all = all_p1trees(&g).unwrap();
            prop_assert!(all.contains(&t.edge_set()));
            prop_assert!(all.contains(&p1tree_oracle(&g).unwrap().edge_set()));
        }
    }
}
