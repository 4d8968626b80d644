//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use icbdd::graph::ProbGraph;

/// Three-vertex example: a = (s, u), b = (u, t), c = (s, t), all with the
/// same probability; sigma(s, t) = p + p^2 - p^3.
pub fn triangle(p: f64) -> ProbGraph {
    ProbGraph::from_parts(
        vec!["s".into(), "u".into(), "t".into()],
        vec![(0, 1), (1, 2), (0, 2)],
        vec![p, p, p],
    )
    .unwrap()
}

pub fn triangle_text() -> &'static str {
    "s u 0.5\nu t 0.5\ns t 0.5\n"
}

/// Star with center `c` and three leaves.
pub fn star3(p: f64) -> ProbGraph {
    ProbGraph::from_parts(
        vec!["c".into(), "l1".into(), "l2".into(), "l3".into()],
        vec![(0, 1), (0, 2), (0, 3)],
        vec![p, p, p],
    )
    .unwrap()
}

/// 5-by-`w` grid with both directions per undirected edge. Returns the graph
/// together with the north-west and south-east corner ids.
pub fn grid5(w: usize, p: f64) -> (ProbGraph, usize, usize) {
    let rows = 5;
    let labels: Vec<String> = (0..rows * w)
        .map(|i| format!("r{}c{}", i / w, i % w))
        .collect();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..w {
            let here = r * w + c;
            if c + 1 < w {
                edges.push((here, here + 1));
                edges.push((here + 1, here));
            }
            if r + 1 < rows {
                edges.push((here, here + w));
                edges.push((here + w, here));
            }
        }
    }
    let m = edges.len();
    let g = ProbGraph::from_parts(labels, edges, vec![p; m]).unwrap();
    (g, 0, rows * w - 1)
}

/// Deterministic random digraph with between 1 and `max_edges` edges and
/// probabilities away from the boundaries.
pub fn random_digraph(seed: u64, n: usize, max_edges: usize) -> ProbGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=max_edges);
    random_digraph_exact(seed.wrapping_mul(31).wrapping_add(7), n, m)
}

/// Deterministic random digraph with exactly `m` edges (capped by n(n-1)).
pub fn random_digraph_exact(seed: u64, n: usize, m: usize) -> ProbGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v)
        .collect();
    for i in (1..pairs.len()).rev() {
        let j = rng.random_range(0..=i);
        pairs.swap(i, j);
    }
    let edges: Vec<(usize, usize)> = pairs.into_iter().take(m.min(n * (n - 1))).collect();
    let probs: Vec<f64> = edges.iter().map(|_| rng.random_range(0.05..0.95)).collect();
    ProbGraph::from_parts(labels, edges, probs).unwrap()
}
