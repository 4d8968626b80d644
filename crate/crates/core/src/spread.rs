//! Probability queries over the constructed diagrams: exact spread,
//! gradients, conditional spread, probability updates, and rejection-free
//! sampling. [`Engine`] owns the store and the root caches and is the main
//! entry point for everything downstream of graph loading.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigUint;
use rand::Rng;
use rand::RngCore;

use crate::bdd::{Bdd, NodeStore, Ref, DEFAULT_NODE_LIMIT};
use crate::error::{Error, Result};
use crate::frontier::{self, PruneMode};
use crate::graph::{suffix_closures, EdgeId, ProbGraph, SuffixClosure, VertexId};
use crate::ordering::{beam_search_order, frontier_profile, EdgeOrder};

/// Backward and forward probability maps over the nodes of one root.
///
/// `backward(a)` is the probability mass of the family rooted at `a`;
/// `forward(a)` the mass of all root-to-`a` paths. Levels skipped along an
/// arc contribute the factor `p + (1 - p) = 1`, so no gap correction appears
/// anywhere.
#[derive(Debug, Clone, Default)]
pub struct ProbTables {
    backward: HashMap<Ref, f64>,
    forward: HashMap<Ref, f64>,
}

impl ProbTables {
    pub fn backward(&self, r: Ref) -> f64 {
        match r {
            Ref::ZERO => 0.0,
            Ref::ONE => 1.0,
            _ => self.backward.get(&r).copied().unwrap_or(0.0),
        }
    }

    pub fn forward(&self, r: Ref) -> f64 {
        self.forward.get(&r).copied().unwrap_or(0.0)
    }
}

/// Bottom-up pass in reverse topological order. `pos_probs[i]` is the
/// activation probability of the variable at 0-based position `i`.
pub fn backward(store: &NodeStore, f: &Bdd, pos_probs: &[f64]) -> Result<ProbTables> {
    let root = store.check(f)?;
    let mut tables = ProbTables::default();
    let mut nodes = store.reachable(&[root]);
    nodes.sort_by_key(|&r| std::cmp::Reverse(store.level(r)));
    for r in nodes {
        let p = pos_probs[(store.level(r) - 1) as usize];
        let value =
            (1.0 - p) * tables.backward(store.lo(r)) + p * tables.backward(store.hi(r));
        tables.backward.insert(r, value);
    }
    Ok(tables)
}

/// Influence probability for the root: the backward value at the root.
pub fn sigma(tables: &ProbTables, f: &Bdd) -> f64 {
    tables.backward(f.root())
}

/// Top-down pass, pushing mass from each node into its children in
/// topological order. The forward value of the 1-terminal equals the
/// backward value of the root.
pub fn forward(store: &NodeStore, f: &Bdd, pos_probs: &[f64], tables: &mut ProbTables) -> Result<()> {
    let root = store.check(f)?;
    tables.forward.clear();
    if root.is_terminal() {
        tables.forward.insert(root, 1.0);
        return Ok(());
    }
    let mut nodes = store.reachable(&[root]);
    nodes.sort_by_key(|&r| store.level(r));
    tables.forward.insert(root, 1.0);
    for r in nodes {
        let p = pos_probs[(store.level(r) - 1) as usize];
        let here = tables.forward(r);
        *tables.forward.entry(store.lo(r)).or_insert(0.0) += (1.0 - p) * here;
        *tables.forward.entry(store.hi(r)).or_insert(0.0) += p * here;
    }
    Ok(())
}

/// Derivative of the root's probability with respect to every position:
/// each node at the position contributes its forward mass times the
/// difference of its children's backward masses. Positions absent from the
/// diagram get zero. Requires both tables to be filled.
pub fn gradient(store: &NodeStore, f: &Bdd, tables: &ProbTables) -> Result<Vec<f64>> {
    let root = store.check(f)?;
    let mut grad = vec![0.0; store.num_vars()];
    if root.is_terminal() {
        return Ok(grad);
    }
    let mut nodes = store.reachable(&[root]);
    nodes.sort_by_key(|&r| store.level(r));
    for r in nodes {
        let pos = (store.level(r) - 1) as usize;
        grad[pos] += tables.forward(r)
            * (tables.backward(store.hi(r)) - tables.backward(store.lo(r)));
    }
    Ok(grad)
}

/// Draws one member of the root's family exactly proportionally to its
/// realization probability, without rejection: a weighted walk from the root
/// to the 1-terminal followed by independent sampling of every undetermined
/// position. Requires the backward table.
pub fn sample_realization<R: RngCore>(
    store: &NodeStore,
    f: &Bdd,
    pos_probs: &[f64],
    tables: &ProbTables,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let root = store.check(f)?;
    if root == Ref::ZERO {
        return Err(Error::EmptyFamily);
    }
    if tables.backward(root) <= 0.0 {
        return Err(Error::ZeroMassFamily);
    }
    let m = store.num_vars();
    let mut decided: Vec<Option<bool>> = vec![None; m];
    let mut cur = root;
    while cur != Ref::ONE {
        let pos = (store.level(cur) - 1) as usize;
        let p = pos_probs[pos];
        let w1 = p * tables.backward(store.hi(cur));
        let w0 = (1.0 - p) * tables.backward(store.lo(cur));
        let take_hi = rng.random::<f64>() * (w0 + w1) < w1;
        decided[pos] = Some(take_hi);
        cur = if take_hi { store.hi(cur) } else { store.lo(cur) };
    }
    Ok(decided
        .into_iter()
        .enumerate()
        .map(|(pos, d)| d.unwrap_or_else(|| rng.random_bool(pos_probs[pos])))
        .collect())
}

/// Construction and query options for [`Engine`].
#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub beam_width: usize,
    pub order_seed: u64,
    pub node_limit: usize,
    pub prune: PruneMode,
    /// Explicit permutation to use instead of running the beam search.
    pub order: Option<Vec<EdgeId>>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            beam_width: 100,
            order_seed: 0,
            node_limit: DEFAULT_NODE_LIMIT,
            prune: PruneMode::Exact,
            order: None,
        }
    }
}

/// Spread of a seed set together with its per-target breakdown.
#[derive(Debug, Clone)]
pub struct SpreadOutcome {
    pub sigma: f64,
    pub per_target: Vec<f64>,
}

/// Conditional spread under observed evidence.
#[derive(Debug, Clone)]
pub struct ConditionalOutcome {
    pub sigma: f64,
    pub per_target: Vec<f64>,
    pub evidence_probability: f64,
}

/// Per-pair construction statistics.
#[derive(Debug, Clone)]
pub struct PairStats {
    pub s: VertexId,
    pub t: VertexId,
    pub size: usize,
    pub cardinality: BigUint,
    pub millis: f64,
}

#[derive(Debug, Clone)]
pub struct StatsReport {
    pub pairs: Vec<PairStats>,
    pub shared_size: usize,
}

/// One graph, one shared edge order, one shared node store, and the caches
/// of every root built so far. All diagram roots are probability-independent,
/// so probability updates never invalidate them.
pub struct Engine {
    graph: ProbGraph,
    order: EdgeOrder,
    closures: SuffixClosure,
    store: NodeStore,
    prune: PruneMode,
    pos_probs: Vec<f64>,
    pair_roots: HashMap<(VertexId, VertexId), Ref>,
    multi_roots: HashMap<(Vec<VertexId>, VertexId), Ref>,
}

impl Engine {
    pub fn new(graph: ProbGraph, options: EngineOptions) -> Result<Engine> {
        let order = match options.order {
            Some(perm) => frontier_profile(&graph, perm)?,
            None => beam_search_order(&graph, options.beam_width, options.order_seed),
        };
        let closures = suffix_closures(&graph, &order)?;
        let store = NodeStore::new(graph.num_edges(), options.node_limit);
        let pos_probs = order.perm().iter().map(|&e| graph.prob(e)).collect();
        Ok(Engine {
            graph,
            order,
            closures,
            store,
            prune: options.prune,
            pos_probs,
            pair_roots: HashMap::new(),
            multi_roots: HashMap::new(),
        })
    }

    pub fn graph(&self) -> &ProbGraph {
        &self.graph
    }

    pub fn order(&self) -> &EdgeOrder {
        &self.order
    }

    pub fn store(&self) -> &NodeStore {
        &self.store
    }

    /// Sorted, deduplicated, validated seed ids.
    pub fn normalize_seeds(&self, seeds: &[VertexId]) -> Result<Vec<VertexId>> {
        if seeds.is_empty() {
            return Err(Error::EmptySeeds);
        }
        let n = self.graph.num_vertices();
        let mut out = seeds.to_vec();
        for &s in &out {
            if s >= n {
                return Err(Error::VertexRange(s));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Root of the single-pair family, built on first use and cached.
    pub fn pair_bdd(&mut self, s: VertexId, t: VertexId) -> Result<Bdd> {
        let r = self.pair_ref(s, t)?;
        Ok(self.store.wrap(r))
    }

    fn pair_ref(&mut self, s: VertexId, t: VertexId) -> Result<Ref> {
        if s == t {
            return Ok(Ref::ONE);
        }
        if let Some(&r) = self.pair_roots.get(&(s, t)) {
            return Ok(r);
        }
        let bdd = frontier::build_single(
            &mut self.store,
            &self.graph,
            &self.order,
            &self.closures,
            s,
            t,
            self.prune,
        )?;
        self.pair_roots.insert((s, t), bdd.root());
        Ok(bdd.root())
    }

    /// Root of the multi-seed family: the union of the single-seed roots,
    /// cached per (sorted seed set, target). A target inside the seed set is
    /// trivially connected.
    pub fn seeds_bdd(&mut self, seeds: &[VertexId], t: VertexId) -> Result<Bdd> {
        let seeds = self.normalize_seeds(seeds)?;
        let r = self.seeds_ref(&seeds, t)?;
        Ok(self.store.wrap(r))
    }

    fn seeds_ref(&mut self, sorted: &[VertexId], t: VertexId) -> Result<Ref> {
        if sorted.binary_search(&t).is_ok() {
            return Ok(Ref::ONE);
        }
        if sorted.len() == 1 {
            return self.pair_ref(sorted[0], t);
        }
        let key = (sorted.to_vec(), t);
        if let Some(&r) = self.multi_roots.get(&key) {
            return Ok(r);
        }
        let prefix = self.seeds_ref(&sorted[..sorted.len() - 1], t)?;
        let last = self.pair_ref(sorted[sorted.len() - 1], t)?;
        let r = self.store.or_refs(prefix, last)?;
        self.multi_roots.insert(key, r);
        Ok(r)
    }

    /// Influence probability from the seed set to one target.
    pub fn sigma_to(&mut self, seeds: &[VertexId], t: VertexId) -> Result<f64> {
        let seeds = self.normalize_seeds(seeds)?;
        self.sigma_to_sorted(&seeds, t)
    }

    fn sigma_to_sorted(&mut self, sorted: &[VertexId], t: VertexId) -> Result<f64> {
        let root = self.seeds_ref(sorted, t)?;
        Ok(self.root_sigma(root))
    }

    fn root_sigma(&self, root: Ref) -> f64 {
        match root {
            Ref::ZERO => 0.0,
            Ref::ONE => 1.0,
            _ => {
                let f = self.store.wrap(root);
                let tables = backward(&self.store, &f, &self.pos_probs)
                    .expect("root belongs to this store");
                sigma(&tables, &f)
            }
        }
    }

    /// Exact influence spread: the sum over all targets of the influence
    /// probability, with the per-target breakdown.
    pub fn influence_spread(&mut self, seeds: &[VertexId]) -> Result<SpreadOutcome> {
        let seeds = self.normalize_seeds(seeds)?;
        let n = self.graph.num_vertices();
        let mut per_target = vec![0.0; n];
        for (t, slot) in per_target.iter_mut().enumerate() {
            *slot = self.sigma_to_sorted(&seeds, t)?;
        }
        Ok(SpreadOutcome {
            sigma: per_target.iter().sum(),
            per_target,
        })
    }

    /// Derivative of the influence probability to `t` with respect to every
    /// edge probability. Edges absent from the diagram get zero.
    pub fn gradient_to(&mut self, seeds: &[VertexId], t: VertexId) -> Result<Vec<f64>> {
        let seeds = self.normalize_seeds(seeds)?;
        self.gradient_to_sorted(&seeds, t)
    }

    fn gradient_to_sorted(&mut self, sorted: &[VertexId], t: VertexId) -> Result<Vec<f64>> {
        let m = self.graph.num_edges();
        let root = self.seeds_ref(sorted, t)?;
        if root.is_terminal() {
            return Ok(vec![0.0; m]);
        }
        let f = self.store.wrap(root);
        let mut tables = backward(&self.store, &f, &self.pos_probs)?;
        forward(&self.store, &f, &self.pos_probs, &mut tables)?;
        let by_pos = gradient(&self.store, &f, &tables)?;
        let mut by_edge = vec![0.0; m];
        for (pos, &g) in by_pos.iter().enumerate() {
            by_edge[self.order.perm()[pos]] = g;
        }
        Ok(by_edge)
    }

    /// Derivative of the total spread: the per-target gradients summed.
    pub fn gradient_total(&mut self, seeds: &[VertexId]) -> Result<Vec<f64>> {
        let seeds = self.normalize_seeds(seeds)?;
        let mut total = vec![0.0; self.graph.num_edges()];
        for t in 0..self.graph.num_vertices() {
            for (acc, g) in total.iter_mut().zip(self.gradient_to_sorted(&seeds, t)?) {
                *acc += g;
            }
        }
        Ok(total)
    }

    /// Conditional spread given that every vertex in `positives` was
    /// influenced and every vertex in `negatives` was not.
    pub fn conditional_spread(
        &mut self,
        seeds: &[VertexId],
        positives: &[VertexId],
        negatives: &[VertexId],
    ) -> Result<ConditionalOutcome> {
        let seeds = self.normalize_seeds(seeds)?;
        let n = self.graph.num_vertices();
        let mut positives = positives.to_vec();
        let mut negatives = negatives.to_vec();
        positives.sort_unstable();
        positives.dedup();
        negatives.sort_unstable();
        negatives.dedup();
        for &v in positives.iter().chain(&negatives) {
            if v >= n {
                return Err(Error::VertexRange(v));
            }
        }
        if let Some(v) = positives
            .iter()
            .copied()
            .find(|v| negatives.binary_search(v).is_ok())
        {
            return Err(Error::ContradictoryEvidence(self.graph.label(v).to_string()));
        }
        if let Some(v) = negatives
            .iter()
            .copied()
            .find(|v| seeds.binary_search(v).is_ok())
        {
            return Err(Error::SeedEvidence(self.graph.label(v).to_string()));
        }

        let mut evidence = Ref::ONE;
        for &u in &positives {
            let r = self.seeds_ref(&seeds, u)?;
            evidence = self.store.and_refs(evidence, r)?;
        }
        for &w in &negatives {
            let r = self.seeds_ref(&seeds, w)?;
            let complement = self.store.not_ref(r)?;
            evidence = self.store.and_refs(evidence, complement)?;
        }
        let evidence_probability = self.root_sigma(evidence);
        if evidence == Ref::ZERO || evidence_probability <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }

        let mut per_target = vec![0.0; n];
        for (t, slot) in per_target.iter_mut().enumerate() {
            *slot = if seeds.binary_search(&t).is_ok() || positives.binary_search(&t).is_ok() {
                1.0
            } else if negatives.binary_search(&t).is_ok() {
                0.0
            } else {
                let root = self.seeds_ref(&seeds, t)?;
                let joint = self.store.and_refs(root, evidence)?;
                self.root_sigma(joint) / evidence_probability
            };
        }
        Ok(ConditionalOutcome {
            sigma: per_target.iter().sum(),
            per_target,
            evidence_probability,
        })
    }

    /// Replaces the activation probabilities. Every constructed diagram is
    /// reused as-is; only the dynamic programming reruns on later queries.
    pub fn update_probabilities(&mut self, probs: Vec<f64>) -> Result<()> {
        self.graph.set_probabilities(probs)?;
        self.pos_probs = self
            .order
            .perm()
            .iter()
            .map(|&e| self.graph.prob(e))
            .collect();
        Ok(())
    }

    /// Draws `count` realizations from the family connecting the seeds to
    /// `t`, each distributed exactly as its conditional probability. Every
    /// returned realization is a sorted list of included edge ids.
    pub fn sample_realizations<R: RngCore>(
        &mut self,
        seeds: &[VertexId],
        t: VertexId,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<EdgeId>>> {
        let seeds = self.normalize_seeds(seeds)?;
        let root = self.seeds_ref(&seeds, t)?;
        if root == Ref::ZERO {
            return Err(Error::EmptyFamily);
        }
        let f = self.store.wrap(root);
        let tables = backward(&self.store, &f, &self.pos_probs)?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let by_pos = sample_realization(&self.store, &f, &self.pos_probs, &tables, rng)?;
            let mut edges: Vec<EdgeId> = by_pos
                .iter()
                .enumerate()
                .filter_map(|(pos, &inc)| inc.then_some(self.order.perm()[pos]))
                .collect();
            edges.sort_unstable();
            out.push(edges);
        }
        Ok(out)
    }

    /// Builds every distinct ordered pair and reports sizes, cardinalities,
    /// construction times, and the shared live size.
    pub fn all_pairs_stats(&mut self) -> Result<StatsReport> {
        let n = self.graph.num_vertices();
        let mut pairs = Vec::with_capacity(n.saturating_sub(1) * n);
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let started = Instant::now();
                let root = self.pair_ref(s, t)?;
                let millis = started.elapsed().as_secs_f64() * 1e3;
                let f = self.store.wrap(root);
                pairs.push(PairStats {
                    s,
                    t,
                    size: self.store.size(&f)?,
                    cardinality: self.store.count_models(&f)?,
                    millis,
                });
            }
        }
        Ok(StatsReport {
            pairs,
            shared_size: self.shared_live_size(),
        })
    }

    /// Non-terminal nodes reachable from any cached root.
    pub fn shared_live_size(&self) -> usize {
        let mut roots: Vec<Bdd> = Vec::new();
        let mut refs: Vec<&Ref> = self.pair_roots.values().collect();
        let multi: Vec<&Ref> = self.multi_roots.values().collect();
        refs.extend(multi);
        for r in refs {
            roots.push(self.store.wrap(*r));
        }
        self.store.shared_size(&roots).expect("roots are local")
    }

    /// Labeled export of the cached pair diagrams.
    pub fn export_pairs(&self) -> Result<String> {
        let mut keys: Vec<(VertexId, VertexId)> = self.pair_roots.keys().copied().collect();
        keys.sort_unstable();
        let roots: Vec<(String, Bdd)> = keys
            .iter()
            .map(|&(s, t)| {
                (
                    format!("{}->{}", self.graph.label(s), self.graph.label(t)),
                    self.store.wrap(self.pair_roots[&(s, t)]),
                )
            })
            .collect();
        self.store.export(&roots)
    }
}
