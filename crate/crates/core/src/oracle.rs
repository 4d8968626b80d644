//! Independent ground truth: exhaustive enumeration over all edge subsets and
//! Monte-Carlo simulation. Nothing here touches the diagram code paths, so
//! these functions double as the oracle side of the property tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{ProbGraph, VertexId};

/// Hard guard for [`brute_spread`]: the cost is `2^m` subsets.
pub const BRUTE_SPREAD_MAX_EDGES: usize = 25;
/// Hard guard for [`brute_family`].
pub const BRUTE_FAMILY_MAX_EDGES: usize = 20;

const MC_BATCH: u64 = 10_000;

/// Number of vertices reachable from `seeds` using only the edges whose bit
/// is set in `mask`; `scratch` must hold `n` booleans.
fn realized_reach(
    graph: &ProbGraph,
    seeds: &[VertexId],
    mask: u64,
    scratch: &mut [bool],
    stack: &mut Vec<VertexId>,
) -> usize {
    scratch.fill(false);
    stack.clear();
    let mut count = 0;
    for &s in seeds {
        if !scratch[s] {
            scratch[s] = true;
            count += 1;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for &e in graph.out_edges(u) {
            if mask >> e & 1 == 1 {
                let v = graph.edge(e).1;
                if !scratch[v] {
                    scratch[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// Exact influence spread by full enumeration of every edge subset.
///
/// Returns the spread together with the per-target influence probabilities.
pub fn brute_spread(graph: &ProbGraph, seeds: &[VertexId]) -> Result<(f64, Vec<f64>)> {
    let m = graph.num_edges();
    if m > BRUTE_SPREAD_MAX_EDGES {
        return Err(Error::OracleGuard(m, BRUTE_SPREAD_MAX_EDGES));
    }
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let n = graph.num_vertices();
    for &s in seeds {
        if s >= n {
            return Err(Error::VertexRange(s));
        }
    }
    let mut per_target = vec![0.0; n];
    let mut scratch = vec![false; n];
    let mut stack = Vec::new();
    for mask in 0u64..1u64 << m {
        let mut p = 1.0;
        for e in 0..m {
            let pe = graph.prob(e);
            p *= if mask >> e & 1 == 1 { pe } else { 1.0 - pe };
        }
        if p == 0.0 {
            continue;
        }
        realized_reach(graph, seeds, mask, &mut scratch, &mut stack);
        for (t, &hit) in scratch.iter().enumerate() {
            if hit {
                per_target[t] += p;
            }
        }
    }
    Ok((per_target.iter().sum(), per_target))
}

/// Explicit family of all edge subsets on which `t` is reachable from `s`,
/// one bitmask per member, ascending.
pub fn brute_family(graph: &ProbGraph, s: VertexId, t: VertexId) -> Result<Vec<u64>> {
    let m = graph.num_edges();
    if m > BRUTE_FAMILY_MAX_EDGES {
        return Err(Error::OracleGuard(m, BRUTE_FAMILY_MAX_EDGES));
    }
    let n = graph.num_vertices();
    if s >= n || t >= n {
        return Err(Error::VertexRange(s.max(t)));
    }
    let mut scratch = vec![false; n];
    let mut stack = Vec::new();
    let mut family = Vec::new();
    for mask in 0u64..1u64 << m {
        realized_reach(graph, &[s], mask, &mut scratch, &mut stack);
        if scratch[t] {
            family.push(mask);
        }
    }
    Ok(family)
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Estimates the influence spread by sampling edge realizations.
///
/// Work is split into fixed-size batches; batch `i` draws from its own
/// ChaCha stream derived from `seed`, so the result is identical for any
/// worker count, including `threads == 1`.
pub fn monte_carlo_spread(
    graph: &ProbGraph,
    seeds: &[VertexId],
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let n = graph.num_vertices();
    for &s in seeds {
        if s >= n {
            return Err(Error::VertexRange(s));
        }
    }

    let batches: Vec<(u64, u64)> = (0..samples.div_ceil(MC_BATCH))
        .map(|i| (i, MC_BATCH.min(samples - i * MC_BATCH)))
        .collect();
    let run_batch = |&(stream, count): &(u64, u64)| -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let m = graph.num_edges();
        let mut scratch = vec![false; n];
        let mut stack = Vec::new();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..count {
            let mut mask = 0u64;
            for e in 0..m {
                if rng.random_bool(graph.prob(e)) {
                    mask |= 1 << e;
                }
            }
            let x = realized_reach(graph, seeds, mask, &mut scratch, &mut stack) as f64;
            sum += x;
            sum_sq += x * x;
        }
        (sum, sum_sq)
    };

    let partials: Vec<(f64, f64)> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| batches.par_iter().map(run_batch).collect())
    } else {
        batches.iter().map(run_batch).collect()
    };

    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
    let count = samples as f64;
    let mean = sum / count;
    let stderr = if samples > 1 {
        let var = ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr,
        samples,
    })
}
