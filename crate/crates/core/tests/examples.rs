use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use disperse_core::runtime::Simulation;
use disperse_core::{
    check_dispersed, generate, init_agents, load_graph, run, AgentState, Configuration, Dispersion, GraphKind,
    IdPolicy, Marker, NodeId, Placement, Port, PortLabeledGraph, ProbeOutcome, RunOptions, SchedulerPolicy,
};

/// Node names of the appendix example: v u w x y z.
const V: NodeId = 0;
const U: NodeId = 1;
const X: NodeId = 3;

fn rooted(g: PortLabeledGraph, k: usize, root: NodeId, ids: IdPolicy) -> Configuration {
    Configuration::new(Arc::new(g), init_agents(k, ids), vec![root; k]).unwrap()
}

fn example() -> Configuration {
    rooted(generate(GraphKind::FixtureExample, 0, 0).unwrap(), 6, V, IdPolicy::Dense)
}

fn settle_seq(out: &disperse_core::runtime::RunOutcome, id: u32) -> u64 {
    out.trace.markers().filter(|(_, m)| **m == Marker::Settle { agent: id }).map(|(e, _)| e.seq).last().unwrap()
}

#[test]
fn appendix_example_round_robin() {
    let out = run(example(), &Dispersion, RunOptions::default()).unwrap();
    let got: Vec<_> = (0..6).map(|v| out.config.settled_at(v).map(|a| a.id)).collect();
    assert_eq!(got, vec![Some(6), Some(5), Some(4), Some(3), Some(2), Some(1)]);

    // x probes u through port 1 and v through port 3, then vacates
    let at_x = out
        .trace
        .events
        .iter()
        .find(|e| e.node_before == X && e.markers.iter().any(|m| matches!(m, Marker::ProbeEnd { .. })))
        .unwrap();
    let probes: HashMap<Port, ProbeOutcome> = at_x
        .markers
        .iter()
        .filter_map(|m| match m {
            Marker::Probe { port, outcome, .. } => Some((*port, *outcome)),
            _ => None,
        })
        .collect();
    assert_eq!(probes[&1], ProbeOutcome::Vacated(5));
    assert_eq!(probes[&3], ProbeOutcome::Occupied(6));
    assert!(at_x.markers.contains(&Marker::Vacate { agent: 3 }));

    let retrace = out.trace.markers().find(|(_, m)| matches!(m, Marker::RetraceStart { .. })).unwrap().0.seq;
    let (a3, a5) = (settle_seq(&out, 3), settle_seq(&out, 5));
    assert!(retrace < a3 && a3 < a5);
    assert_eq!(out.config.agent(5).unwrap().1, U);

    // frozen regression count
    assert_eq!(out.metrics.epochs, 48);
}

#[test]
fn appendix_example_under_lag_four() {
    for seed in 0..20 {
        let opts = RunOptions { policy: SchedulerPolicy::AdversarialLag { bound: 4, seed }, ..RunOptions::default() };
        let out = run(example(), &Dispersion, opts).unwrap();
        let got: Vec<_> = (0..6).map(|v| out.config.settled_at(v).map(|a| a.id)).collect();
        assert_eq!(got, vec![Some(6), Some(5), Some(4), Some(3), Some(2), Some(1)], "seed {seed}");
    }
}

#[test]
fn star_center_needs_one_batch() {
    for n in 3..=20 {
        let g = generate(GraphKind::Star, n, 0).unwrap();
        let out = run(rooted(g, n, 0, IdPolicy::Dense), &Dispersion, RunOptions::default()).unwrap();
        assert!(check_dispersed(&out.config));
        let starts = out.trace.markers().filter(|(_, m)| matches!(m, Marker::ProbeStart { .. })).count();
        assert_eq!(starts, 1, "n={n}");
    }
}

#[test]
fn single_agent_never_probes() {
    let g = generate(GraphKind::RandomConnected, 9, 2).unwrap();
    let out = run(rooted(g, 1, 4, IdPolicy::Dense), &Dispersion, RunOptions::default()).unwrap();
    assert_eq!(out.metrics.epochs, 1);
    assert_eq!(out.metrics.probes, 0);
}

#[test]
fn dispersed_start_stays_put() {
    let g = Arc::new(generate(GraphKind::RandomConnected, 12, 5).unwrap());
    let cfg = Configuration::new(g, init_agents(7, IdPolicy::Random(5)), vec![0, 2, 3, 5, 7, 8, 11]).unwrap();
    let out = run(cfg, &Dispersion, RunOptions::default()).unwrap();
    assert!(out.metrics.dispersed);
    assert_eq!(out.metrics.total_moves(), 0);
    assert_eq!(out.config.positions, vec![0, 2, 3, 5, 7, 8, 11]);
}

#[test]
fn mid_run_is_not_dispersed() {
    let mut sim = Simulation::new(example(), RunOptions::default()).unwrap();
    for _ in 0..10 {
        sim.step(&Dispersion).unwrap();
        assert!(!check_dispersed(sim.config()));
    }
}

#[test]
fn three_roots_disperse() {
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let n = 6 + (seed as usize * 5) % 27;
        let k = 3 + (seed as usize * 7) % (n - 2);
        let g = Arc::new(generate(GraphKind::RandomConnected, n, seed).unwrap());
        let positions = Placement::Roots { count: 3, seed }.positions(n, k).unwrap();
        let cfg = Configuration::new(g, init_agents(k, IdPolicy::Random(seed)), positions).unwrap();
        let opts =
            RunOptions { policy: SchedulerPolicy::Random { seed }, epoch_cap: 50 * k as u64, ..RunOptions::default() };
        match run(cfg, &Dispersion, opts) {
            Ok(out) if out.metrics.dispersed => {}
            Ok(_) => failures.push(format!("n={n} k={k} seed={seed}: not dispersed")),
            Err(e) => failures.push(format!("n={n} k={k} seed={seed}: {e}")),
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

// Path 3 - 0 - 1 - 2. From node 2 only node 0 vacates, next to the last node 3.
const PATH4: &str = "4\n0 1 1 1\n0 2 1 3\n1 2 1 2\n";

#[test]
fn lone_vacated_neighbor_settles_within_two_moves() {
    let out =
        run(rooted(load_graph(PATH4).unwrap(), 4, 2, IdPolicy::Dense), &Dispersion, RunOptions::default()).unwrap();
    let vacates: Vec<_> = out.trace.markers().filter(|(_, m)| matches!(m, Marker::Vacate { .. })).collect();
    assert_eq!(vacates.len(), 1);
    let start = out.trace.markers().find(|(_, m)| matches!(m, Marker::RetraceStart { .. })).unwrap().0;
    assert_eq!(start.node_after, 3);
    let moves = out.trace.events.iter().filter(|e| e.seq >= start.seq && e.node_before != e.node_after).count();
    assert!(moves <= 2, "{moves} moves");
    let Marker::Vacate { agent } = vacates[0].1 else { unreachable!() };
    assert_eq!(out.config.settled_at(0).map(|a| a.id), Some(*agent));
}

/// Every connected graph on four nodes, under every port numbering.
fn all_four_node_graphs() -> Vec<PortLabeledGraph> {
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let perms = |d: usize| -> Vec<Vec<usize>> {
        match d {
            1 => vec![vec![0]],
            2 => vec![vec![0, 1], vec![1, 0]],
            _ => [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]].map(Vec::from).to_vec(),
        }
    };
    let mut out = Vec::new();
    for mask in 1u32..64 {
        let nb: Vec<Vec<NodeId>> = (0..4)
            .map(|v| {
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .filter_map(|(_, &(a, b))| (a == v).then_some(b).or((b == v).then_some(a)))
                    .collect()
            })
            .collect();
        if nb.iter().any(Vec::is_empty) {
            continue;
        }
        let choices: Vec<Vec<Vec<usize>>> = nb.iter().map(|r| perms(r.len())).collect();
        let mut pick = [0usize; 4];
        loop {
            let order: Vec<&Vec<usize>> = (0..4).map(|v| &choices[v][pick[v]]).collect();
            let port = |v: NodeId, w: NodeId| order[v].iter().position(|&i| nb[v][i] == w).unwrap() as Port + 1;
            let rows = (0..4).map(|v| order[v].iter().map(|&i| (nb[v][i], port(nb[v][i], v))).collect()).collect();
            if let Ok(g) = PortLabeledGraph::from_adjacency(rows) {
                out.push(g);
            }
            let mut v = 0;
            while v < 4 && pick[v] + 1 == choices[v].len() {
                pick[v] = 0;
                v += 1;
            }
            if v == 4 {
                break;
            }
            pick[v] += 1;
        }
    }
    out
}

#[test]
fn lone_vacated_neighbor_on_every_four_node_graph() {
    let mut seen = 0;
    for g in all_four_node_graphs() {
        for root in 0..4 {
            let out = run(rooted(g.clone(), 4, root, IdPolicy::Dense), &Dispersion, RunOptions::default()).unwrap();
            let vacated: Vec<u32> = out
                .trace
                .markers()
                .filter_map(|(_, m)| match m {
                    Marker::Vacate { agent } => Some(*agent),
                    _ => None,
                })
                .collect();
            let Some(start) = out.trace.markers().find(|(_, m)| matches!(m, Marker::RetraceStart { .. })) else {
                continue;
            };
            let [a] = vacated[..] else { continue };
            let home = out.config.agent(a).unwrap().1;
            if g.port_to(start.0.node_after, home).is_none() {
                continue;
            }
            seen += 1;
            let moves =
                out.trace.events.iter().filter(|e| e.seq >= start.0.seq && e.node_before != e.node_after).count();
            assert!(moves <= 2, "root {root}, {moves} moves on\n{}", disperse_core::save_graph(&g));
        }
    }
    assert!(seen > 0);
}

/// Rooted run stepped by hand: the head's node at each probe start, and the
/// nodes left vacated when construction ends. The node where construction
/// ends never gets a vacate decision, so it is left out.
fn head_walk(cfg: Configuration) -> (Vec<NodeId>, BTreeSet<NodeId>) {
    let mut sim = Simulation::new(cfg, RunOptions::default()).unwrap();
    let mut heads = Vec::new();
    let mut home = HashMap::new();
    while !sim.is_terminated() {
        let ev = sim.step(&Dispersion).unwrap().cloned().unwrap();
        for m in &ev.markers {
            match m {
                Marker::ProbeStart { .. } => heads.push(ev.node_before),
                Marker::Vacate { agent } => {
                    let at = if ev.agent == *agent { ev.node_before } else { sim.config().agent(*agent).unwrap().1 };
                    home.insert(*agent, at);
                }
                Marker::ConstructionEnd { .. } => {
                    if ev.markers.iter().any(|m| matches!(m, Marker::ProbeEnd { .. })) {
                        heads.pop();
                    }
                    let vacated = sim
                        .config()
                        .agents
                        .iter()
                        .filter(|a| a.state == AgentState::SettledScout)
                        .map(|a| home[&a.id])
                        .collect();
                    return (heads, vacated);
                }
                _ => {}
            }
        }
    }
    (heads, BTreeSet::new())
}

#[test]
fn one_of_three_consecutive_heads_is_vacated() {
    let mut checked = 0;
    for seed in 0..60u64 {
        let n = 6 + (seed as usize * 7) % 30;
        let g = generate(GraphKind::RandomConnected, n, seed).unwrap();
        let (heads, vacated) = head_walk(rooted(g, n, seed as usize % n, IdPolicy::Random(seed)));
        let mut seen = BTreeSet::new();
        for i in 0..heads.len() {
            if !seen.insert(heads[i]) || i + 3 > heads.len() {
                continue;
            }
            let w = &heads[i..i + 3];
            checked += 1;
            assert!(
                w.iter().any(|v| vacated.contains(v)),
                "seed {seed}: heads {w:?} all occupied, vacated {vacated:?}"
            );
        }
    }
    assert!(checked > 100, "only {checked} windows");
}

#[test]
fn retrace_walks_each_edge_at_most_twice() {
    for seed in 0..60u64 {
        let n = 6 + (seed as usize * 7) % 40;
        let g = generate(GraphKind::RandomConnected, n, seed).unwrap();
        let out = run(rooted(g, n, 0, IdPolicy::Random(seed)), &Dispersion, RunOptions::default()).unwrap();
        let Some(start) = out.trace.markers().find(|(_, m)| matches!(m, Marker::RetraceStart { .. })) else {
            continue;
        };
        let mut uses: HashMap<(u32, NodeId, NodeId), u32> = HashMap::new();
        for e in out.trace.events.iter().filter(|e| e.seq > start.0.seq && e.node_before != e.node_after) {
            let edge = (e.agent, e.node_before.min(e.node_after), e.node_before.max(e.node_after));
            *uses.entry(edge).or_default() += 1;
        }
        if let Some((edge, c)) = uses.iter().find(|(_, &c)| c > 2) {
            panic!("seed {seed}: agent {} crossed {}-{} {c} times", edge.0, edge.1, edge.2);
        }
    }
}
