//! Shared inputs for the benchmarks.

use dqi_core::gen::{random_problem, reachability_problem, rng, Digraph, GenConfig, Problem, Shape};
use dqi_core::{parse, ProblemFile};

const MEDICAL: &str = include_str!("../../../fixtures/medical.dqi");
const PSB: &str = include_str!("../../../fixtures/psbvscertain.dqi");

pub fn medical() -> ProblemFile {
    parse(MEDICAL).expect("fixture parses")
}

pub fn psb() -> ProblemFile {
    parse(PSB).expect("fixture parses")
}

/// Reachability problem on a path of `n` nodes from the first to the last node.
pub fn reachability_path(n: usize) -> Problem {
    let g = Digraph {
        nodes: n,
        edges: (1..n).map(|i| (i - 1, i)).collect(),
    };
    reachability_problem(&g, 0, n - 1)
}

/// `count` random ID problems from consecutive seeds.
pub fn id_problems(count: u64) -> Vec<Problem> {
    let cfg = GenConfig {
        shape: Shape::Id,
        ..GenConfig::default()
    };
    (0..count).map(|s| random_problem(&mut rng(s), &cfg)).collect()
}
