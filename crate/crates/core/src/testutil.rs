//! Shared fixtures for the unit tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::ProbGraph;

/// Three-vertex example: edges a = (s, u), b = (u, t), c = (s, t), all with
/// the same probability. The s-t connecting family is
/// {{c}, {a,b}, {a,c}, {b,c}, {a,b,c}} and sigma(s, t) = p + p^2 - p^3.
pub fn triangle(p: f64) -> ProbGraph {
    ProbGraph::from_parts(
        vec!["s".into(), "u".into(), "t".into()],
        vec![(0, 1), (1, 2), (0, 2)],
        vec![p, p, p],
    )
    .unwrap()
}

/// Star with center `c` and out-edges to three leaves.
pub fn star3(p: f64) -> ProbGraph {
    ProbGraph::from_parts(
        vec!["c".into(), "l1".into(), "l2".into(), "l3".into()],
        vec![(0, 1), (0, 2), (0, 3)],
        vec![p, p, p],
    )
    .unwrap()
}

/// Deterministic random digraph with at most `max_edges` edges and
/// probabilities in (0, 1).
pub fn random_graph(seed: u64, n: usize, max_edges: usize) -> ProbGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v)
        .collect();
    // Fisher-Yates so edge selection is uniform but reproducible.
    for i in (1..pairs.len()).rev() {
        let j = rng.random_range(0..=i);
        pairs.swap(i, j);
    }
    let m = rng.random_range(1..=max_edges.min(pairs.len()));
    let edges: Vec<(usize, usize)> = pairs.into_iter().take(m).collect();
    let probs: Vec<f64> = edges
        .iter()
        .map(|_| rng.random_range(0.05..0.95))
        .collect();
    ProbGraph::from_parts(labels, edges, probs).unwrap()
}
