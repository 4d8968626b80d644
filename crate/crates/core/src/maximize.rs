//! Plain greedy influence maximization over the exact spread.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::spread::Engine;

/// One committed greedy step.
#[derive(Debug, Clone)]
pub struct GreedyStep {
    pub step: usize,
    pub vertex: VertexId,
    pub sigma: f64,
    pub marginal: f64,
    /// Live nodes in the shared store after the step.
    pub shared_size: usize,
    /// Wall-clock time since the run started.
    pub elapsed: Duration,
}

/// Committed steps plus an abort marker when the node budget ran out
/// mid-run; the steps up to the failure are still valid.
#[derive(Debug, Clone, Default)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
    pub aborted: Option<String>,
}

impl GreedyTrace {
    pub fn seeds(&self) -> Vec<VertexId> {
        self.steps.iter().map(|s| s.vertex).collect()
    }
}

/// Repeatedly adds the vertex with the maximum exact marginal gain until `k`
/// seeds are chosen. Ties break towards the smallest vertex id, so runs are
/// reproducible. Every candidate is evaluated exactly through cached
/// single-seed roots and unions.
pub fn greedy(engine: &mut Engine, k: usize) -> Result<GreedyTrace> {
    let n = engine.graph().num_vertices();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let started = Instant::now();
    let mut trace = GreedyTrace::default();
    let mut seeds: Vec<VertexId> = Vec::new();
    let mut sigma_prev = 0.0;
    for step in 1..=k {
        let mut best: Option<(f64, VertexId)> = None;
        for u in 0..n {
            if seeds.contains(&u) {
                continue;
            }
            let mut candidate = seeds.clone();
            candidate.push(u);
            match engine.influence_spread(&candidate) {
                Ok(out) => {
                    if best.is_none_or(|(s, _)| out.sigma > s) {
                        best = Some((out.sigma, u));
                    }
                }
                Err(e @ Error::NodeLimit(_)) => {
                    trace.aborted = Some(e.to_string());
                    return Ok(trace);
                }
                Err(e) => return Err(e),
            }
        }
        let (sigma, vertex) = best.expect("k <= n leaves a candidate");
        seeds.push(vertex);
        trace.steps.push(GreedyStep {
            step,
            vertex,
            sigma,
            marginal: sigma - sigma_prev,
            shared_size: engine.shared_live_size(),
            elapsed: started.elapsed(),
        });
        sigma_prev = sigma;
    }
    Ok(trace)
}
