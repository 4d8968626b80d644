//! Frontier-based search: builds the diagram of all edge subsets on which a
//! target is reachable from a source.
//!
//! Edges are processed in the shared global order. A search node carries the
//! reachability matrix of the decided subgraph restricted to the current
//! frontier plus the source and target rows; nodes are merged by the
//! projection of that matrix onto the rows not yet reached from `s` and the
//! columns not yet reaching `t`, which is exactly as coarse as merging
//! soundness allows. Terminal detection uses the precomputed suffix closures:
//! a branch dies as soon as the excluded edges cut every route, and completes
//! as soon as the included edges connect the pair. The raw output is then
//! reduced into the shared store.

use std::collections::HashMap;

use crate::bdd::{Bdd, NodeStore, RawDiagram, RawNode, Ref};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, ProbGraph, SuffixClosure, VertexId};
use crate::ordering::EdgeOrder;
use crate::simpath;

/// Edge restriction applied before the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneMode {
    /// Keep exactly the edges lying on at least one s-t simple path
    /// (frontier-based simple-path enumeration).
    #[default]
    Exact,
    /// Sound over-approximation: keep (u, v) iff s reaches u and v reaches t
    /// in the full graph.
    Weak,
    /// Keep every edge.
    Off,
}

/// Per-step bookkeeping shared by the connectivity search and the
/// simple-path search: active vertex sets, index maps between consecutive
/// steps, and the suffix closure restricted to the active set.
pub(crate) struct StepPlan {
    pub steps: Vec<PlanStep>,
    pub initial_active: Vec<VertexId>,
    pub s: VertexId,
    pub t: VertexId,
}

pub(crate) struct PlanStep {
    pub edge: EdgeId,
    pub level: u32,
    pub tail: VertexId,
    pub head: VertexId,
    /// Active set while this edge is decided (sorted ascending).
    pub during: Vec<VertexId>,
    /// Active set once the step is finished (sorted ascending).
    pub after: Vec<VertexId>,
    pub tail_during: usize,
    pub head_during: usize,
    pub s_during: usize,
    pub t_during: usize,
    pub s_after: usize,
    pub t_after: usize,
    /// Local index map from the previous active set into `during`.
    pub prev_to_during: Vec<usize>,
    /// Local index map from `during` into `after`; `None` drops the vertex.
    pub during_to_after: Vec<Option<usize>>,
    /// `during` indices whose frontier membership ends at this step
    /// (`s`/`t` stay in the active set but still appear here).
    pub leaving_during: Vec<usize>,
    /// Frontier members within `after` (excludes pure `s`/`t` marks).
    pub w_mask_after: u64,
    /// Suffix-closure rows restricted to `after`; empty when built without
    /// closures.
    pub suffix_after: Vec<u64>,
}

impl StepPlan {
    pub fn new(
        graph: &ProbGraph,
        order: &EdgeOrder,
        kept: &[bool],
        s: VertexId,
        t: VertexId,
        closures: Option<&SuffixClosure>,
    ) -> Result<StepPlan> {
        let n = graph.num_vertices();
        let kept_positions: Vec<usize> = (0..graph.num_edges())
            .map(|i| order.perm()[i])
            .enumerate()
            .filter(|&(_, e)| kept[e])
            .map(|(pos, _)| pos)
            .collect();

        let mut first = vec![usize::MAX; n];
        let mut last = vec![usize::MAX; n];
        for (step, &pos) in kept_positions.iter().enumerate() {
            let (u, v) = graph.edge(order.perm()[pos]);
            for w in [u, v] {
                if first[w] == usize::MAX {
                    first[w] = step;
                }
                last[w] = step;
            }
        }

        let active_after = |step: usize| -> Vec<VertexId> {
            let mut set: Vec<VertexId> = (0..n)
                .filter(|&v| {
                    v == s || v == t || (first[v] != usize::MAX && first[v] <= step && last[v] > step)
                })
                .collect();
            set.sort_unstable();
            set
        };

        let mut initial_active = vec![s, t];
        initial_active.sort_unstable();
        let mut prev = initial_active.clone();
        let mut steps = Vec::with_capacity(kept_positions.len());
        for (step, &pos) in kept_positions.iter().enumerate() {
            let edge = order.perm()[pos];
            let (tail, head) = graph.edge(edge);
            let mut during = prev.clone();
            for w in [tail, head] {
                if let Err(slot) = during.binary_search(&w) {
                    during.insert(slot, w);
                }
            }
            if during.len() > 62 {
                return Err(Error::FrontierTooWide);
            }
            let after = active_after(step);
            let find = |set: &[VertexId], v: VertexId| set.binary_search(&v).unwrap();
            let prev_to_during: Vec<usize> = prev.iter().map(|&v| find(&during, v)).collect();
            let during_to_after: Vec<Option<usize>> = during
                .iter()
                .map(|&v| after.binary_search(&v).ok())
                .collect();
            let leaving_during: Vec<usize> = during
                .iter()
                .enumerate()
                .filter(|&(_, &v)| first[v] != usize::MAX && last[v] == step)
                .map(|(i, _)| i)
                .collect();
            let mut w_mask_after = 0u64;
            for (i, &v) in after.iter().enumerate() {
                if first[v] != usize::MAX && first[v] <= step && last[v] > step {
                    w_mask_after |= 1 << i;
                }
            }
            let suffix_after = match closures {
                Some(cl) => {
                    let mat = cl.matrix(pos + 1);
                    after
                        .iter()
                        .map(|&u| {
                            let mut row = 0u64;
                            for (j, &v) in after.iter().enumerate() {
                                if mat.get(u, v) {
                                    row |= 1 << j;
                                }
                            }
                            row
                        })
                        .collect()
                }
                None => Vec::new(),
            };
            steps.push(PlanStep {
                edge,
                level: pos as u32 + 1,
                tail,
                head,
                tail_during: find(&during, tail),
                head_during: find(&during, head),
                s_during: find(&during, s),
                t_during: find(&during, t),
                s_after: find(&after, s),
                t_after: find(&after, t),
                during,
                after: after.clone(),
                prev_to_during,
                during_to_after,
                leaving_during,
                w_mask_after,
                suffix_after,
            });
            prev = after;
        }
        Ok(StepPlan {
            steps,
            initial_active,
            s,
            t,
        })
    }
}

/// Search state: the reachability matrix of the decided subgraph restricted
/// to the step's active set (frontier plus `s` and `t`), one `u64` row per
/// active vertex, always reflexive and transitively closed. The merge key is
/// its projection; see [`SearchContext::merge_key`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    step: usize,
    rows: Vec<u64>,
}

impl Configuration {
    /// Layer index: how many kept edges have been decided.
    pub fn step(&self) -> usize {
        self.step
    }
}

/// Everything a single source-target search needs: the kept edges, the step
/// plan, and the suffix closures.
pub struct SearchContext {
    plan: StepPlan,
    kept: Vec<bool>,
}

impl SearchContext {
    pub fn new(
        graph: &ProbGraph,
        order: &EdgeOrder,
        closures: &SuffixClosure,
        s: VertexId,
        t: VertexId,
        prune: PruneMode,
        node_limit: usize,
    ) -> Result<SearchContext> {
        let kept = prune_edges(graph, order, s, t, prune, node_limit)?;
        let plan = StepPlan::new(graph, order, &kept, s, t, Some(closures))?;
        Ok(SearchContext { plan, kept })
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    /// Number of kept edges, i.e. search steps.
    pub fn num_steps(&self) -> usize {
        self.plan.steps.len()
    }

    /// Frontier size once the given step has finished.
    pub fn frontier_size(&self, step: usize) -> usize {
        self.plan.steps[step].w_mask_after.count_ones() as usize
    }

    /// Root configuration: identity over `{s, t}`.
    pub fn initial(&self) -> Configuration {
        Configuration {
            step: 0,
            rows: (0..self.plan.initial_active.len())
                .map(|i| 1u64 << i)
                .collect(),
        }
    }

    /// Extends the matrix to the step's working active set: entering
    /// vertices get reflexive-only rows.
    fn lift(&self, cfg: &Configuration) -> Vec<u64> {
        let st = &self.plan.steps[cfg.step];
        let mut rows: Vec<u64> = (0..st.during.len()).map(|i| 1u64 << i).collect();
        for (pi, &di) in st.prev_to_during.iter().enumerate() {
            rows[di] |= remap_bits(cfg.rows[pi], &st.prev_to_during);
        }
        rows
    }

    /// True iff including the step's edge completes a source-target path:
    /// the source already reaches the tail and the head already reaches the
    /// target. Excluding an edge (`x == false`) can never complete a path.
    pub fn is_one_terminal(&self, cfg: &Configuration, x: bool) -> bool {
        if !x {
            return false;
        }
        let st = &self.plan.steps[cfg.step];
        let rows = self.lift(cfg);
        rows[st.s_during] >> st.tail_during & 1 == 1
            && rows[st.head_during] >> st.t_during & 1 == 1
    }

    /// Child configuration for the given branch: applies frontier entry,
    /// adds the arc and re-closes the matrix when `x` is true, then drops the
    /// vertices whose last edge was just decided.
    pub fn create_node(&self, cfg: &Configuration, x: bool) -> Configuration {
        let st = &self.plan.steps[cfg.step];
        let mut rows = self.lift(cfg);
        if x {
            // New arc tail -> head; one sweep restores transitivity because
            // the matrix was closed before.
            let head_row = rows[st.head_during];
            for row in rows.iter_mut() {
                if *row >> st.tail_during & 1 == 1 {
                    *row |= head_row;
                }
            }
        }
        let mut out = vec![0u64; st.after.len()];
        for (di, ai) in st.during_to_after.iter().enumerate() {
            if let Some(ai) = ai {
                out[*ai] = remap_bits_opt(rows[di], &st.during_to_after);
            }
        }
        Configuration {
            step: cfg.step + 1,
            rows: out,
        }
    }

    /// True iff the target is unreachable from the source even when every
    /// undecided edge is added: a search over the active set combining the
    /// configuration with the suffix closure. Evaluated on the candidate
    /// child state.
    pub fn is_zero_terminal(&self, child: &Configuration) -> bool {
        debug_assert!(child.step >= 1);
        let st = &self.plan.steps[child.step - 1];
        let mut visited = 1u64 << st.s_after;
        loop {
            let mut next = visited;
            let mut bits = visited;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                next |= child.rows[i] | st.suffix_after[i];
            }
            if next == visited {
                break;
            }
            visited = next;
        }
        visited >> st.t_after & 1 == 0
    }

    /// Canonical merge key: the matrix projected onto the rows indexed by
    /// the frontier vertices not reached from the source (plus the source
    /// row) and the columns indexed by the frontier vertices not reaching
    /// the target (plus the target column), rows and columns ascending by
    /// vertex id. Equal keys imply equivalent search states.
    pub fn merge_key(&self, child: &Configuration) -> Vec<u64> {
        let st = &self.plan.steps[child.step - 1];
        let srow = child.rows[st.s_after];
        let mut rows_mask = 1u64 << st.s_after;
        let mut cols_mask = 1u64 << st.t_after;
        let mut bits = st.w_mask_after;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if srow >> i & 1 == 0 {
                rows_mask |= 1 << i;
            }
            if child.rows[i] >> st.t_after & 1 == 0 {
                cols_mask |= 1 << i;
            }
        }
        let mut key = Vec::with_capacity(2 + rows_mask.count_ones() as usize);
        key.push(rows_mask);
        key.push(cols_mask);
        let mut bits = rows_mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            key.push(child.rows[i] & cols_mask);
        }
        key
    }
}

fn remap_bits(row: u64, map: &[usize]) -> u64 {
    let mut out = 0;
    let mut bits = row;
    while bits != 0 {
        let b = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        out |= 1 << map[b];
    }
    out
}

fn remap_bits_opt(row: u64, map: &[Option<usize>]) -> u64 {
    let mut out = 0;
    let mut bits = row;
    while bits != 0 {
        let b = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        if let Some(m) = map[b] {
            out |= 1 << m;
        }
    }
    out
}

/// Search statistics for diagnostics and the invariant tests.
#[derive(Debug, Clone, Default)]
pub struct SearchStats {
    /// Live nodes per layer (layer 0 is the root).
    pub layer_sizes: Vec<usize>,
    /// Frontier size after each step.
    pub frontier_sizes: Vec<usize>,
    pub kept_edges: usize,
    pub raw_nodes: usize,
}

/// Edges that may participate in an s-t connection.
///
/// `Exact` returns precisely the union of all s-t simple paths (everything
/// else is don't-care for s-t reachability); `Weak` is the cheap reachability
/// over-approximation. The returned mask is always a superset of the exact
/// support.
pub fn prune_edges(
    graph: &ProbGraph,
    order: &EdgeOrder,
    s: VertexId,
    t: VertexId,
    mode: PruneMode,
    node_limit: usize,
) -> Result<Vec<bool>> {
    let m = graph.num_edges();
    match mode {
        PruneMode::Off => Ok(vec![true; m]),
        PruneMode::Weak => Ok(weak_keep(graph, s, t)),
        PruneMode::Exact => {
            let weak = weak_keep(graph, s, t);
            simpath::simple_path_support(graph, order, s, t, &weak, node_limit)
        }
    }
}

fn weak_keep(graph: &ProbGraph, s: VertexId, t: VertexId) -> Vec<bool> {
    let n = graph.num_vertices();
    let mut from_s = vec![false; n];
    from_s[s] = true;
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for &e in graph.out_edges(u) {
            let v = graph.edge(e).1;
            if !from_s[v] {
                from_s[v] = true;
                stack.push(v);
            }
        }
    }
    let mut to_t = vec![false; n];
    to_t[t] = true;
    stack.push(t);
    while let Some(u) = stack.pop() {
        for &e in graph.in_edges(u) {
            let v = graph.edge(e).0;
            if !to_t[v] {
                to_t[v] = true;
                stack.push(v);
            }
        }
    }
    graph
        .edges()
        .iter()
        .map(|&(u, v)| from_s[u] && to_t[v])
        .collect()
}

/// Builds the canonical diagram of all edge subsets connecting `s` to `t`.
pub fn build_single(
    store: &mut NodeStore,
    graph: &ProbGraph,
    order: &EdgeOrder,
    closures: &SuffixClosure,
    s: VertexId,
    t: VertexId,
    prune: PruneMode,
) -> Result<Bdd> {
    build_single_with_stats(store, graph, order, closures, s, t, prune).map(|(bdd, _)| bdd)
}

/// As [`build_single`], also returning layer statistics.
pub fn build_single_with_stats(
    store: &mut NodeStore,
    graph: &ProbGraph,
    order: &EdgeOrder,
    closures: &SuffixClosure,
    s: VertexId,
    t: VertexId,
    prune: PruneMode,
) -> Result<(Bdd, SearchStats)> {
    let n = graph.num_vertices();
    if s >= n || t >= n {
        return Err(Error::VertexRange(s.max(t)));
    }
    if s == t {
        return Err(Error::InvalidArgument(
            "source equals target; the connecting family is trivially full".into(),
        ));
    }
    if !closures.matrix(0).get(s, t) {
        return Ok((store.zero(), SearchStats::default()));
    }
    let ctx = SearchContext::new(graph, order, closures, s, t, prune, store.node_limit())?;
    let (raw, stats) = search_raw(&ctx, store.node_limit())?;
    let bdd = store.reduce(&raw)?;
    Ok((bdd, stats))
}

fn search_raw(ctx: &SearchContext, raw_limit: usize) -> Result<(RawDiagram, SearchStats)> {
    let num_steps = ctx.num_steps();
    debug_assert!(num_steps > 0, "a connected pair keeps at least one edge");
    let mut nodes: Vec<RawNode> = vec![RawNode {
        level: ctx.plan.steps[0].level,
        lo: Ref::ZERO,
        hi: Ref::ZERO,
    }];
    let mut layer: Vec<(Configuration, usize)> = vec![(ctx.initial(), 0)];
    let mut stats = SearchStats {
        layer_sizes: vec![1],
        frontier_sizes: Vec::with_capacity(num_steps),
        kept_edges: num_steps,
        raw_nodes: 0,
    };

    for step in 0..num_steps {
        let mut next: Vec<(Configuration, usize)> = Vec::new();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        for (cfg, raw_idx) in std::mem::take(&mut layer) {
            let mut arcs = [Ref::ZERO; 2];
            for x in [false, true] {
                arcs[x as usize] = if ctx.is_one_terminal(&cfg, x) {
                    Ref::ONE
                } else {
                    let child = ctx.create_node(&cfg, x);
                    if ctx.is_zero_terminal(&child) {
                        Ref::ZERO
                    } else {
                        if step + 1 >= num_steps {
                            unreachable!("frontier search: live state after the final kept edge");
                        }
                        let key = ctx.merge_key(&child);
                        match index.entry(key) {
                            std::collections::hash_map::Entry::Occupied(o) => {
                                Ref::node(next[*o.get()].1)
                            }
                            std::collections::hash_map::Entry::Vacant(slot) => {
                                if nodes.len() >= raw_limit {
                                    return Err(Error::NodeLimit(raw_limit));
                                }
                                let idx = nodes.len();
                                nodes.push(RawNode {
                                    level: ctx.plan.steps[step + 1].level,
                                    lo: Ref::ZERO,
                                    hi: Ref::ZERO,
                                });
                                slot.insert(next.len());
                                next.push((child, idx));
                                Ref::node(idx)
                            }
                        }
                    }
                };
            }
            nodes[raw_idx].lo = arcs[0];
            nodes[raw_idx].hi = arcs[1];
        }
        stats.frontier_sizes.push(ctx.frontier_size(step));
        if step + 1 < num_steps {
            stats.layer_sizes.push(next.len());
        }
        layer = next;
    }
    stats.raw_nodes = nodes.len();
    Ok((
        RawDiagram {
            nodes,
            root: Ref::node(0),
        },
        stats,
    ))
}

/// Union of per-seed diagrams: the multi-seed family is exactly the union of
/// the single-seed families, and the Boolean algebra is cheaper than a
/// dedicated multi-seed search.
pub fn build_multi(store: &mut NodeStore, parts: &[Bdd]) -> Result<Bdd> {
    let mut iter = parts.iter();
    let first = iter.next().ok_or(Error::EmptySeeds)?;
    let mut acc = *first;
    for part in iter {
        acc = store.apply_or(&acc, part)?;
    }
    store.check(&acc)?;
    Ok(acc)
}
