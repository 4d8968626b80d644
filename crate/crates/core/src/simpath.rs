//! Frontier-based enumeration of directed s-t simple paths, used to find the
//! edges that participate in at least one such path.
//!
//! The search mirrors the connectivity search but carries a path-fragment
//! state instead of a reachability matrix: each active vertex is untouched,
//! saturated (interior of a fragment), or a fragment endpoint paired with the
//! opposite endpoint. A branch dies as soon as a fragment endpoint other than
//! the source or target is abandoned by the frontier, and completes when the
//! source fragment merges into the target fragment with nothing else open.
//! Support extraction then marks every edge whose 1-arc lies on some
//! root-to-accepting path of the raw diagram.

use std::collections::HashMap;

use crate::bdd::Ref;
use crate::error::{Error, Result};
use crate::frontier::StepPlan;
use crate::graph::{ProbGraph, VertexId};
use crate::ordering::EdgeOrder;

const UNTOUCHED: u8 = 0;
const SATURATED: u8 = 1;

fn start_of(mate: usize) -> u8 {
    2 + 2 * mate as u8
}

fn end_of(mate: usize) -> u8 {
    3 + 2 * mate as u8
}

fn is_start(state: u8) -> bool {
    state >= 2 && state.is_multiple_of(2)
}

fn is_end(state: u8) -> bool {
    state >= 2 && state % 2 == 1
}

fn mate_of(state: u8) -> usize {
    debug_assert!(state >= 2);
    (state as usize - 2) / 2
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum PathState {
    Running(Vec<u8>),
    /// The source-target path is complete; every remaining edge must stay
    /// excluded.
    Done,
}

struct RawPathNode {
    edge: usize,
    lo: Ref,
    hi: Ref,
}

/// Edges lying on at least one simple path from `s` to `t`, restricted to
/// the `candidates` mask. Returns a full-length edge mask.
pub(crate) fn simple_path_support(
    graph: &ProbGraph,
    order: &EdgeOrder,
    s: VertexId,
    t: VertexId,
    candidates: &[bool],
    node_limit: usize,
) -> Result<Vec<bool>> {
    let m = graph.num_edges();
    let mut support = vec![false; m];
    let has_source_out = (0..m).any(|e| candidates[e] && graph.edge(e).0 == s);
    let has_target_in = (0..m).any(|e| candidates[e] && graph.edge(e).1 == t);
    if !has_source_out || !has_target_in {
        return Ok(support);
    }

    let plan = StepPlan::new(graph, order, candidates, s, t, None)?;
    let num_steps = plan.steps.len();
    debug_assert!(num_steps > 0);

    let mut nodes: Vec<RawPathNode> = vec![RawPathNode {
        edge: plan.steps[0].edge,
        lo: Ref::ZERO,
        hi: Ref::ZERO,
    }];
    let initial = PathState::Running(vec![UNTOUCHED; plan.initial_active.len()]);
    let mut layer: Vec<(PathState, usize)> = vec![(initial, 0)];

    for step in 0..num_steps {
        let st = &plan.steps[step];
        let last = step + 1 == num_steps;
        let mut next: Vec<(PathState, usize)> = Vec::new();
        let mut index: HashMap<PathState, usize> = HashMap::new();
        for (state, raw_idx) in std::mem::take(&mut layer) {
            let lifted = lift(&state, st);
            let mut arcs = [Ref::ZERO; 2];
            for x in [false, true] {
                let child = match (&lifted, x) {
                    (PathState::Done, false) => Some(PathState::Done),
                    (PathState::Done, true) => None,
                    (PathState::Running(bytes), _) => branch(bytes, st, &plan, x),
                };
                let child = child.and_then(|c| finish_step(c, st, &plan));
                arcs[x as usize] = match child {
                    None => Ref::ZERO,
                    Some(PathState::Done) if last => Ref::ONE,
                    Some(_) if last => Ref::ZERO,
                    Some(state) => match index.entry(state) {
                        std::collections::hash_map::Entry::Occupied(o) => {
                            Ref::node(next[*o.get()].1)
                        }
                        std::collections::hash_map::Entry::Vacant(slot) => {
                            if nodes.len() >= node_limit {
                                return Err(Error::NodeLimit(node_limit));
                            }
                            let idx = nodes.len();
                            nodes.push(RawPathNode {
                                edge: plan.steps[step + 1].edge,
                                lo: Ref::ZERO,
                                hi: Ref::ZERO,
                            });
                            let state = slot.key().clone();
                            slot.insert(next.len());
                            next.push((state, idx));
                            Ref::node(idx)
                        }
                    },
                };
            }
            nodes[raw_idx].lo = arcs[0];
            nodes[raw_idx].hi = arcs[1];
        }
        layer = next;
    }

    // Forward marks: arcs always point at later-created nodes.
    let mut reached = vec![false; nodes.len()];
    reached[0] = true;
    for i in 0..nodes.len() {
        if reached[i] {
            for r in [nodes[i].lo, nodes[i].hi] {
                if !r.is_terminal() {
                    reached[r.index()] = true;
                }
            }
        }
    }
    // Backward marks: can the node reach the accepting terminal?
    let mut accepts = vec![false; nodes.len()];
    for i in (0..nodes.len()).rev() {
        let ok = |r: Ref| r == Ref::ONE || (!r.is_terminal() && accepts[r.index()]);
        accepts[i] = ok(nodes[i].lo) || ok(nodes[i].hi);
    }
    for (i, node) in nodes.iter().enumerate() {
        let hi_accepts =
            node.hi == Ref::ONE || (!node.hi.is_terminal() && accepts[node.hi.index()]);
        if reached[i] && hi_accepts {
            support[node.edge] = true;
        }
    }
    Ok(support)
}

/// Remaps a state onto the step's working active set; entering vertices are
/// untouched.
fn lift(state: &PathState, st: &crate::frontier::PlanStep) -> PathState {
    match state {
        PathState::Done => PathState::Done,
        PathState::Running(bytes) => {
            let mut out = vec![UNTOUCHED; st.during.len()];
            for (pi, &di) in st.prev_to_during.iter().enumerate() {
                out[di] = match bytes[pi] {
                    UNTOUCHED => UNTOUCHED,
                    SATURATED => SATURATED,
                    b if is_start(b) => start_of(st.prev_to_during[mate_of(b)]),
                    b => end_of(st.prev_to_during[mate_of(b)]),
                };
            }
            PathState::Running(out)
        }
    }
}

/// Applies the include/exclude decision over the working active set.
/// `None` means the branch can never extend to a simple s-t path.
fn branch(
    bytes: &[u8],
    st: &crate::frontier::PlanStep,
    plan: &StepPlan,
    include: bool,
) -> Option<PathState> {
    if !include {
        return Some(PathState::Running(bytes.to_vec()));
    }
    let (ui, vi) = (st.tail_during, st.head_during);
    // The target never takes an out-edge and the source never an in-edge on
    // a simple s-t path.
    if st.tail == plan.t || st.head == plan.s {
        return None;
    }
    let (su, sv) = (bytes[ui], bytes[vi]);
    let out_free = su == UNTOUCHED || is_end(su);
    let in_free = sv == UNTOUCHED || is_start(sv);
    if !out_free || !in_free {
        return None;
    }
    // Joining a fragment to itself would close a cycle.
    if is_end(su) && mate_of(su) == vi {
        return None;
    }
    let a = if su == UNTOUCHED { ui } else { mate_of(su) };
    let b = if sv == UNTOUCHED { vi } else { mate_of(sv) };
    if a == st.s_during && b == st.t_during {
        // Path complete; any other open fragment is stranded for good.
        for (i, &byte) in bytes.iter().enumerate() {
            if byte >= 2 && i != ui && i != vi && i != a && i != b {
                return None;
            }
        }
        return Some(PathState::Done);
    }
    let mut out = bytes.to_vec();
    out[ui] = if su == UNTOUCHED { start_of(b) } else { SATURATED };
    out[vi] = if sv == UNTOUCHED { end_of(a) } else { SATURATED };
    if a != ui {
        out[a] = start_of(b);
    }
    if b != vi {
        out[b] = end_of(a);
    }
    Some(PathState::Running(out))
}

/// Frontier-exit checks and projection onto the post-step active set.
fn finish_step(
    state: PathState,
    st: &crate::frontier::PlanStep,
    plan: &StepPlan,
) -> Option<PathState> {
    let bytes = match state {
        PathState::Done => return Some(PathState::Done),
        PathState::Running(bytes) => bytes,
    };
    for &di in &st.leaving_during {
        let byte = bytes[di];
        let v = st.during[di];
        if v == plan.s || v == plan.t {
            // Last incident edge decided while still untouched: the
            // endpoint can never join a path.
            if byte == UNTOUCHED {
                return None;
            }
        } else if byte >= 2 {
            // A stranded fragment endpoint can never be extended.
            return None;
        }
    }
    let mut out = vec![UNTOUCHED; st.after.len()];
    for (di, ai) in st.during_to_after.iter().enumerate() {
        if let Some(ai) = ai {
            out[*ai] = match bytes[di] {
                UNTOUCHED => UNTOUCHED,
                SATURATED => SATURATED,
                b if is_start(b) => {
                    start_of(st.during_to_after[mate_of(b)].expect("mates never dropped"))
                }
                b => end_of(st.during_to_after[mate_of(b)].expect("mates never dropped")),
            };
        }
    }
    Some(PathState::Running(out))
}
