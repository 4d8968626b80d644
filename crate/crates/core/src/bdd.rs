//! Hash-consed, multi-rooted reduced ordered BDD forest.
//!
//! All roots built for one graph live in a single [`NodeStore`], so isomorphic
//! subdiagrams are stored once and Boolean operations between any two roots
//! are valid. Levels are 1-based positions in the shared edge order; both
//! terminals sit at the sentinel level `m + 1`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Reference to a node inside a store (or a raw diagram). `Ref::ZERO` and
/// `Ref::ONE` are the terminals; everything else indexes a stored node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ref(u32);

impl Ref {
    pub const ZERO: Ref = Ref(0);
    pub const ONE: Ref = Ref(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }

    pub(crate) fn node(index: usize) -> Ref {
        Ref(index as u32 + 2)
    }

    pub(crate) fn index(self) -> usize {
        debug_assert!(!self.is_terminal());
        self.0 as usize - 2
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    level: u32,
    lo: Ref,
    hi: Ref,
}

/// A root handle tied to the store that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bdd {
    store: u64,
    root: Ref,
}

impl Bdd {
    pub fn root(&self) -> Ref {
        self.root
    }
}

/// Unreduced, ordered diagram as produced by the frontier search. Node arcs
/// may only point at terminals or at nodes of strictly greater level.
#[derive(Debug, Clone)]
pub struct RawDiagram {
    pub nodes: Vec<RawNode>,
    pub root: Ref,
}

#[derive(Debug, Clone, Copy)]
pub struct RawNode {
    pub level: u32,
    pub lo: Ref,
    pub hi: Ref,
}

const OP_OR: u8 = 0;
const OP_AND: u8 = 1;
const OP_NOT: u8 = 2;

static STORE_IDS: AtomicU64 = AtomicU64::new(1);

/// Append-only shared node store with a unique table (sharing rule), the
/// `lo == hi` elimination rule applied on construction, and a memo cache for
/// the Boolean operations.
#[derive(Debug)]
pub struct NodeStore {
    id: u64,
    num_vars: usize,
    nodes: Vec<Node>,
    unique: HashMap<(u32, Ref, Ref), Ref>,
    cache: HashMap<(u8, Ref, Ref), Ref>,
    node_limit: usize,
}

pub const DEFAULT_NODE_LIMIT: usize = 1 << 26;

impl NodeStore {
    pub fn new(num_vars: usize, node_limit: usize) -> Self {
        let terminal = Node {
            level: num_vars as u32 + 1,
            lo: Ref::ZERO,
            hi: Ref::ONE,
        };
        NodeStore {
            id: STORE_IDS.fetch_add(1, Ordering::Relaxed),
            num_vars,
            // Two placeholders so Ref values index `nodes` directly.
            nodes: vec![terminal, terminal],
            unique: HashMap::new(),
            cache: HashMap::new(),
            node_limit,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn node_limit(&self) -> usize {
        self.node_limit
    }

    /// Number of stored non-terminal nodes.
    pub fn len(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn terminal_level(&self) -> u32 {
        self.num_vars as u32 + 1
    }

    pub fn zero(&self) -> Bdd {
        self.wrap(Ref::ZERO)
    }

    pub fn one(&self) -> Bdd {
        self.wrap(Ref::ONE)
    }

    pub(crate) fn wrap(&self, root: Ref) -> Bdd {
        Bdd {
            store: self.id,
            root,
        }
    }

    pub(crate) fn check(&self, f: &Bdd) -> Result<Ref> {
        if f.store != self.id {
            return Err(Error::StoreMismatch);
        }
        Ok(f.root)
    }

    pub fn level(&self, r: Ref) -> u32 {
        self.nodes[r.0 as usize].level
    }

    pub fn lo(&self, r: Ref) -> Ref {
        self.nodes[r.0 as usize].lo
    }

    pub fn hi(&self, r: Ref) -> Ref {
        self.nodes[r.0 as usize].hi
    }

    /// Canonical node constructor: applies the elimination rule (`lo == hi`)
    /// and the sharing rule (unique table).
    pub fn make_node(&mut self, level: u32, lo: Ref, hi: Ref) -> Result<Ref> {
        if level < 1 || level >= self.level(lo).min(self.level(hi)) {
            return Err(Error::LevelOrder { level });
        }
        if lo == hi {
            return Ok(lo);
        }
        if let Some(&r) = self.unique.get(&(level, lo, hi)) {
            return Ok(r);
        }
        if self.len() >= self.node_limit {
            return Err(Error::NodeLimit(self.node_limit));
        }
        let r = Ref::node(self.nodes.len() - 2);
        self.nodes.push(Node { level, lo, hi });
        self.unique.insert((level, lo, hi), r);
        Ok(r)
    }

    /// Union of the represented families.
    pub fn apply_or(&mut self, f: &Bdd, g: &Bdd) -> Result<Bdd> {
        let (f, g) = (self.check(f)?, self.check(g)?);
        let r = self.or_refs(f, g)?;
        Ok(self.wrap(r))
    }

    /// Intersection of the represented families.
    pub fn apply_and(&mut self, f: &Bdd, g: &Bdd) -> Result<Bdd> {
        let (f, g) = (self.check(f)?, self.check(g)?);
        let r = self.and_refs(f, g)?;
        Ok(self.wrap(r))
    }

    /// Complement with respect to the full variable set.
    pub fn negate(&mut self, f: &Bdd) -> Result<Bdd> {
        let f = self.check(f)?;
        let r = self.not_ref(f)?;
        Ok(self.wrap(r))
    }

    pub(crate) fn or_refs(&mut self, f: Ref, g: Ref) -> Result<Ref> {
        if f == Ref::ONE || g == Ref::ONE {
            return Ok(Ref::ONE);
        }
        if f == Ref::ZERO || f == g {
            return Ok(g);
        }
        if g == Ref::ZERO {
            return Ok(f);
        }
        let (f, g) = if f <= g { (f, g) } else { (g, f) };
        if let Some(&r) = self.cache.get(&(OP_OR, f, g)) {
            return Ok(r);
        }
        let ((f0, f1), (g0, g1), level) = self.cofactors(f, g);
        let lo = self.or_refs(f0, g0)?;
        let hi = self.or_refs(f1, g1)?;
        let r = self.make_node(level, lo, hi)?;
        self.cache.insert((OP_OR, f, g), r);
        Ok(r)
    }

    pub(crate) fn and_refs(&mut self, f: Ref, g: Ref) -> Result<Ref> {
        if f == Ref::ZERO || g == Ref::ZERO {
            return Ok(Ref::ZERO);
        }
        if f == Ref::ONE || f == g {
            return Ok(g);
        }
        if g == Ref::ONE {
            return Ok(f);
        }
        let (f, g) = if f <= g { (f, g) } else { (g, f) };
        if let Some(&r) = self.cache.get(&(OP_AND, f, g)) {
            return Ok(r);
        }
        let ((f0, f1), (g0, g1), level) = self.cofactors(f, g);
        let lo = self.and_refs(f0, g0)?;
        let hi = self.and_refs(f1, g1)?;
        let r = self.make_node(level, lo, hi)?;
        self.cache.insert((OP_AND, f, g), r);
        Ok(r)
    }

    pub(crate) fn not_ref(&mut self, f: Ref) -> Result<Ref> {
        if f == Ref::ZERO {
            return Ok(Ref::ONE);
        }
        if f == Ref::ONE {
            return Ok(Ref::ZERO);
        }
        if let Some(&r) = self.cache.get(&(OP_NOT, f, Ref::ZERO)) {
            return Ok(r);
        }
        let node = self.nodes[f.0 as usize];
        let lo = self.not_ref(node.lo)?;
        let hi = self.not_ref(node.hi)?;
        let r = self.make_node(node.level, lo, hi)?;
        self.cache.insert((OP_NOT, f, Ref::ZERO), r);
        Ok(r)
    }

    fn cofactors(&self, f: Ref, g: Ref) -> ((Ref, Ref), (Ref, Ref), u32) {
        let (lf, lg) = (self.level(f), self.level(g));
        let level = lf.min(lg);
        let fc = if lf == level {
            (self.lo(f), self.hi(f))
        } else {
            (f, f)
        };
        let gc = if lg == level {
            (self.lo(g), self.hi(g))
        } else {
            (g, g)
        };
        (fc, gc, level)
    }

    /// Single bottom-up pass turning an ordered raw diagram into its canonical
    /// reduced form inside this store.
    pub fn reduce(&mut self, raw: &RawDiagram) -> Result<Bdd> {
        let mut by_level: Vec<usize> = (0..raw.nodes.len()).collect();
        by_level.sort_by_key(|&i| std::cmp::Reverse(raw.nodes[i].level));
        let mut mapped: Vec<Option<Ref>> = vec![None; raw.nodes.len()];
        let resolve = |raw: &RawDiagram, mapped: &[Option<Ref>], r: Ref, level: u32| {
            if r.is_terminal() {
                return Ok(r);
            }
            let idx = r.index();
            if idx >= raw.nodes.len() || raw.nodes[idx].level <= level {
                // Arcs must strictly descend; anything else is cyclic or
                // unordered input.
                return Err(Error::UnorderedDiagram);
            }
            mapped[idx].ok_or(Error::UnorderedDiagram)
        };
        for &i in &by_level {
            let node = raw.nodes[i];
            if node.level < 1 || node.level as usize > self.num_vars {
                return Err(Error::LevelOrder { level: node.level });
            }
            let lo = resolve(raw, &mapped, node.lo, node.level)?;
            let hi = resolve(raw, &mapped, node.hi, node.level)?;
            mapped[i] = Some(self.make_node(node.level, lo, hi)?);
        }
        let root = if raw.root.is_terminal() {
            raw.root
        } else {
            mapped[raw.root.index()].ok_or(Error::UnorderedDiagram)?
        };
        Ok(self.wrap(root))
    }

    /// Exact cardinality of the family over the full variable set: every
    /// level skipped along an arc doubles the count of the child below it.
    pub fn count_models(&self, f: &Bdd) -> Result<BigUint> {
        let root = self.check(f)?;
        let mut memo: HashMap<Ref, BigUint> = HashMap::new();
        let count = self.count_ref(root, &mut memo);
        let gap = self.level(root) - 1;
        Ok(count * (BigUint::from(1u8) << gap))
    }

    fn count_ref(&self, r: Ref, memo: &mut HashMap<Ref, BigUint>) -> BigUint {
        if r == Ref::ZERO {
            return BigUint::from(0u8);
        }
        if r == Ref::ONE {
            return BigUint::from(1u8);
        }
        if let Some(c) = memo.get(&r) {
            return c.clone();
        }
        let node = self.nodes[r.0 as usize];
        let lo = self.count_ref(node.lo, memo) << (self.level(node.lo) - node.level - 1);
        let hi = self.count_ref(node.hi, memo) << (self.level(node.hi) - node.level - 1);
        let total = lo + hi;
        memo.insert(r, total.clone());
        total
    }

    /// Membership test. `included[i]` is the decision for the variable at
    /// 0-based position `i`; levels absent from the root-to-terminal path
    /// impose no constraint.
    pub fn contains(&self, f: &Bdd, included: &[bool]) -> Result<bool> {
        let mut cur = self.check(f)?;
        while !cur.is_terminal() {
            let node = self.nodes[cur.0 as usize];
            cur = if included[(node.level - 1) as usize] {
                node.hi
            } else {
                node.lo
            };
        }
        Ok(cur == Ref::ONE)
    }

    /// Non-terminal nodes reachable from the root.
    pub fn size(&self, f: &Bdd) -> Result<usize> {
        let root = self.check(f)?;
        Ok(self.reachable(&[root]).len())
    }

    /// Non-terminal nodes reachable from any of the roots ("shared size").
    pub fn shared_size(&self, roots: &[Bdd]) -> Result<usize> {
        let mut refs = Vec::with_capacity(roots.len());
        for f in roots {
            refs.push(self.check(f)?);
        }
        Ok(self.reachable(&refs).len())
    }

    pub(crate) fn reachable(&self, roots: &[Ref]) -> Vec<Ref> {
        let mut seen: Vec<bool> = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack: Vec<Ref> = roots.iter().rev().copied().collect();
        while let Some(r) = stack.pop() {
            if r.is_terminal() || seen[r.0 as usize] {
                continue;
            }
            seen[r.0 as usize] = true;
            order.push(r);
            let node = self.nodes[r.0 as usize];
            stack.push(node.hi);
            stack.push(node.lo);
        }
        order
    }

    /// Text dump: one `node <id> <level> <lo> <hi>` line per reachable node
    /// followed by one `root <label> <id>` line per root.
    pub fn export(&self, roots: &[(String, Bdd)]) -> Result<String> {
        let mut refs = Vec::new();
        for (_, f) in roots {
            refs.push(self.check(f)?);
        }
        let mut out = String::new();
        for r in self.reachable(&refs) {
            let node = self.nodes[r.0 as usize];
            out.push_str(&format!(
                "node {} {} {} {}\n",
                r.0, node.level, node.lo.0, node.hi.0
            ));
        }
        for (label, f) in roots {
            out.push_str(&format!("root {} {}\n", label, f.root.0));
        }
        Ok(out)
    }
}
