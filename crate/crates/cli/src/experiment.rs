//! Turning command-line values into a configuration and running it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use disperse_core::runtime::RunOutcome;
use disperse_core::{
    centralized_p1tree, dfs_p1tree, generate, init_agents, is_p1tree, load_graph, random_with_max_degree, run,
    save_tree, Configuration, Dispersion, GraphError, GraphKind, IdPolicy, NodeId, P1Tree, Placement, PortLabeledGraph,
    RunError, RunOptions, SchedulerPolicy, TraceMode,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0} tree from root {1} is not a port-one tree")]
    BadTree(Algo, NodeId),
    #[error("replay diverged: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec(_) | CliError::Graph(_) | CliError::Io { .. } => 2,
            CliError::Run(RunError::InvalidConfig(_)) => 2,
            CliError::Run(RunError::CapExceeded { .. }) => 3,
            CliError::Run(RunError::Invariant { .. }) | CliError::BadTree(..) => 4,
            CliError::Diverged(_) => 1,
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Single-root dispersion.
    Rooted,
    /// Dispersion from any placement.
    General,
    /// Sequential DFS tree construction only.
    #[value(name = "dfs_p1tree")]
    Dfs,
    /// Centralized tree construction only.
    #[value(name = "centralized_p1tree")]
    Centralized,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&value_name(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ids {
    /// 1..=k in agent order.
    Dense,
    /// Distinct random IDs drawn from the seed.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Flags shared by `run` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct Setup {
    /// `line:N`, `ring:N`, `complete:N`, `star:N`, `random:N`, `random:N:D`,
    /// `fixture:example|fig2|fig3`, or a graph file.
    #[arg(long)]
    pub graph: String,
    /// Start every agent on this node: an index, `end` on a line, or v..z on the example.
    #[arg(long, group = "placement_kind")]
    pub rooted: Option<String>,
    /// File listing each agent's start node.
    #[arg(long, group = "placement_kind")]
    pub placement: Option<PathBuf>,
    /// Spread the agents over this many random nodes.
    #[arg(long, group = "placement_kind")]
    pub roots: Option<usize>,
    /// Allow start configurations with more than one occupied node.
    #[arg(long)]
    pub general: bool,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    #[arg(long, value_enum, default_value = "dense")]
    pub ids: Ids,
    /// Default 50·k.
    #[arg(long)]
    pub epoch_cap: Option<u64>,
    #[arg(long, value_enum, default_value = "on")]
    pub check_invariants: Switch,
}

impl Setup {
    pub fn algo(&self) -> Algo {
        self.algo.unwrap_or(if self.general { Algo::General } else { Algo::Rooted })
    }

    /// Canonical flags, used to record a run in its trace header.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec!["--graph".to_string(), self.graph.clone()];
        if let Some(r) = &self.rooted {
            a.extend(["--rooted".into(), r.clone()]);
        }
        if let Some(p) = &self.placement {
            a.extend(["--placement".into(), p.display().to_string()]);
        }
        if let Some(l) = self.roots {
            a.extend(["--roots".into(), l.to_string()]);
        }
        if self.general {
            a.push("--general".into());
        }
        if let Some(algo) = self.algo {
            a.extend(["--algo".into(), value_name(algo)]);
        }
        a.extend(["--ids".into(), value_name(self.ids)]);
        if let Some(c) = self.epoch_cap {
            a.extend(["--epoch-cap".into(), c.to_string()]);
        }
        a.extend(["--check-invariants".into(), value_name(self.check_invariants)]);
        a
    }
}

fn value_name(v: impl ValueEnum) -> String {
    v.to_possible_value().expect("no skipped values").get_name().to_string()
}

/// A fully resolved run.
pub struct Experiment {
    pub graph: Arc<PortLabeledGraph>,
    pub k: usize,
    pub positions: Vec<NodeId>,
    pub algo: Algo,
    pub ids: IdPolicy,
    pub opts: RunOptions,
}

/// Builds the graph named by `desc`; `k` stands in for a missing size.
pub fn build_graph(desc: &str, k: Option<usize>, seed: u64) -> Result<(PortLabeledGraph, Option<GraphKind>), CliError> {
    let path = Path::new(desc);
    if path.is_file() {
        return Ok((load_graph(&read(path)?)?, None));
    }
    let mut parts = desc.split(':');
    let head = parts.next().unwrap_or_default();
    let (kind, size) = if head == "fixture" {
        let name = parts.next().ok_or_else(|| CliError::Spec("fixture needs a name".into()))?;
        (name.parse::<GraphKind>().map_err(CliError::Spec)?, None)
    } else {
        let kind = head
            .parse::<GraphKind>()
            .map_err(|_| CliError::Spec(format!("{desc:?} is neither a graph kind nor a file")))?;
        (kind, parts.next())
    };
    if kind.is_fixture() {
        return Ok((generate(kind, 0, 0)?, Some(kind)));
    }
    let n = match size {
        Some(s) => s.parse().map_err(|_| CliError::Spec(format!("bad graph size {s:?}")))?,
        None => k.ok_or_else(|| CliError::Spec(format!("{desc:?} needs a size, e.g. {head}:16")))?,
    };
    match (kind, parts.next()) {
        (GraphKind::RandomConnected, Some(d)) => {
            let d = d.parse().map_err(|_| CliError::Spec(format!("bad degree bound {d:?}")))?;
            Ok((random_with_max_degree(n, d, seed)?, Some(kind)))
        }
        (_, Some(extra)) => Err(CliError::Spec(format!("unexpected {extra:?} in graph {desc:?}"))),
        (_, None) => Ok((generate(kind, n, seed)?, Some(kind))),
    }
}

fn node(name: &str, kind: Option<GraphKind>, n: usize) -> Result<NodeId, CliError> {
    if name == "end" {
        return match kind {
            Some(GraphKind::Line) => Ok(0),
            _ => Err(CliError::Spec("`end` only names a node of a line graph".into())),
        };
    }
    if kind == Some(GraphKind::FixtureExample) {
        if let Some(i) = ["v", "u", "w", "x", "y", "z"].iter().position(|&s| s == name) {
            return Ok(i);
        }
    }
    let v: NodeId = name.parse().map_err(|_| CliError::Spec(format!("bad node {name:?}")))?;
    if v >= n {
        return Err(CliError::Spec(format!("node {v} out of range, graph has {n} nodes")));
    }
    Ok(v)
}

fn placement_file(path: &Path) -> Result<Vec<NodeId>, CliError> {
    read(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or_default())
        .flat_map(str::split_whitespace)
        .map(|t| t.parse().map_err(|_| CliError::Spec(format!("{}: bad node {t:?}", path.display()))))
        .collect()
}

impl Experiment {
    pub fn new(
        setup: &Setup,
        k: Option<usize>,
        sched: SchedulerPolicy,
        seed: u64,
        traced: bool,
    ) -> Result<Self, CliError> {
        let (graph, kind) = build_graph(&setup.graph, k, seed)?;
        let n = graph.node_count();
        let listed = setup.placement.as_deref().map(placement_file).transpose()?;
        let k = k.or(listed.as_ref().map(Vec::len)).unwrap_or(n);
        if k == 0 || k > n {
            return Err(CliError::Spec(format!("k = {k} must be between 1 and n = {n}")));
        }
        let placement = match (&setup.rooted, listed, setup.roots) {
            (Some(r), _, _) => Placement::Rooted(node(r, kind, n)?),
            (_, Some(p), _) => Placement::Explicit(p),
            (_, _, Some(l)) => Placement::Roots { count: l, seed },
            _ => Placement::Rooted(0),
        };
        let positions = placement.positions(n, k)?;
        if let Some(&v) = positions.iter().find(|&&v| v >= n) {
            return Err(CliError::Spec(format!("placement uses node {v}, graph has {n} nodes")));
        }
        let algo = setup.algo();
        if algo == Algo::Rooted && positions.iter().any(|&v| v != positions[0]) {
            return Err(CliError::Spec("agents start on several nodes; pass --general".into()));
        }
        let ids = match setup.ids {
            Ids::Dense => IdPolicy::Dense,
            Ids::Random => IdPolicy::Random(seed),
        };
        let opts = RunOptions {
            policy: sched.with_seed(seed),
            epoch_cap: setup.epoch_cap.unwrap_or(50 * k as u64),
            check_invariants: setup.check_invariants == Switch::On,
            trace_mode: if traced { TraceMode::Full } else { TraceMode::Markers },
        };
        Ok(Experiment { graph: Arc::new(graph), k, positions, algo, ids, opts })
    }

    pub fn n(&self) -> usize {
        self.graph.node_count()
    }

    pub fn simulate(&self) -> Result<RunOutcome, RunError> {
        let cfg = Configuration::new(self.graph.clone(), init_agents(self.k, self.ids), self.positions.clone())?;
        run(cfg, &Dispersion, self.opts)
    }

    /// The tree algorithms, rooted at the first agent's node.
    pub fn tree(&self) -> Result<(P1Tree, String), CliError> {
        let root = self.positions[0];
        let tree = match self.algo {
            Algo::Centralized => centralized_p1tree(&self.graph, root),
            _ => dfs_p1tree(&self.graph, root).0,
        };
        if !is_p1tree(&self.graph, &tree).unwrap_or(false) {
            return Err(CliError::BadTree(self.algo, root));
        }
        let text = save_tree(&tree);
        Ok((tree, text))
    }
}
