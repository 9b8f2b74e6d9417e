//! Configurations shared by the benchmarks.

use std::sync::Arc;

use disperse_core::{generate, init_agents, Configuration, GraphKind, IdPolicy, Placement};

/// All `k` agents at one end of a line of `k` nodes.
pub fn line_from_end(k: usize) -> Configuration {
    let g = Arc::new(generate(GraphKind::Line, k, 0).unwrap());
    Configuration::new(g, init_agents(k, IdPolicy::Random(k as u64)), vec![0; k]).unwrap()
}

/// Six agents on node v of the worked example.
pub fn example() -> Configuration {
    let g = Arc::new(generate(GraphKind::FixtureExample, 0, 0).unwrap());
    Configuration::new(g, init_agents(6, IdPolicy::Dense), vec![0; 6]).unwrap()
}

/// `k` agents over `roots` random nodes of a random graph with `n` nodes.
pub fn multi_root(n: usize, k: usize, roots: usize, seed: u64) -> Configuration {
    let g = Arc::new(generate(GraphKind::RandomConnected, n, seed).unwrap());
    let positions = Placement::Roots { count: roots, seed }.positions(n, k).unwrap();
    Configuration::new(g, init_agents(k, IdPolicy::Random(seed)), positions).unwrap()
}
