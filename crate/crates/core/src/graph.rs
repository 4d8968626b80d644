//! Directed probabilistic graph: file ingestion, normalization, reachability,
//! and the suffix transitive closures consumed by the frontier search.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::ordering::EdgeOrder;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Directed graph with an activation probability on every edge.
///
/// Vertices carry arbitrary string labels mapped to dense ids in
/// first-appearance order. After normalization there are no self-loops and no
/// duplicate `(tail, head)` pairs, and every probability lies in `[0, 1]`.
/// The structure is immutable except for [`ProbGraph::set_probabilities`],
/// which only replaces the probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbGraph {
    labels: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: Vec<(VertexId, VertexId)>,
    probs: Vec<f64>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl ProbGraph {
    /// Builds a graph from explicit parts, validating every invariant.
    pub fn from_parts(
        labels: Vec<String>,
        edges: Vec<(VertexId, VertexId)>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut index = HashMap::with_capacity(n);
        for (id, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), id).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vertex label '{label}'"
                )));
            }
        }
        if probs.len() != edges.len() {
            return Err(Error::InvalidArgument(
                "edge and probability counts differ".into(),
            ));
        }
        let mut seen = HashMap::new();
        for (eid, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::VertexRange(u.max(v)));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!(
                    "self-loop on vertex '{}'",
                    labels[u]
                )));
            }
            if seen.insert((u, v), eid).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge '{}' -> '{}'",
                    labels[u], labels[v]
                )));
            }
            let p = probs[eid];
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::ProbRange(p));
            }
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (eid, &(u, v)) in edges.iter().enumerate() {
            out_edges[u].push(eid);
            in_edges[v].push(eid);
        }
        Ok(ProbGraph {
            labels,
            index,
            edges,
            probs,
            out_edges,
            in_edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Resolves a label back to its dense id.
    pub fn vertex(&self, label: &str) -> Result<VertexId> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn edge(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn prob(&self, e: EdgeId) -> f64 {
        self.probs[e]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v]
    }

    /// Replaces every activation probability. The graph structure, and hence
    /// any diagram built from it, is unaffected.
    pub fn set_probabilities(&mut self, probs: Vec<f64>) -> Result<()> {
        if probs.len() != self.edges.len() {
            return Err(Error::InvalidArgument(
                "probability vector length does not match the edge count".into(),
            ));
        }
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::ProbRange(p));
            }
        }
        self.probs = probs;
        Ok(())
    }

    /// All vertices reachable from `sources` (the sources themselves
    /// included).
    pub fn reachable_set(&self, sources: &[VertexId]) -> Result<BTreeSet<VertexId>> {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        for &s in sources {
            if s >= n {
                return Err(Error::VertexRange(s));
            }
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            for &e in &self.out_edges[u] {
                let v = self.edges[e].1;
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        Ok(seen
            .iter()
            .enumerate()
            .filter_map(|(v, &r)| r.then_some(v))
            .collect())
    }

    /// Serializes the graph back to the edge-list text format. Loading the
    /// result (directed, no default probability) reproduces the graph
    /// exactly.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (eid, &(u, v)) in self.edges.iter().enumerate() {
            out.push_str(&format!(
                "{} {} {}\n",
                self.labels[u], self.labels[v], self.probs[eid]
            ));
        }
        out
    }
}

/// Options for [`load_graph`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Emit two directed edges per input line.
    pub undirected: bool,
    /// Probability applied to lines that omit the third field.
    pub default_prob: Option<f64>,
}

/// A parsed graph plus the normalization warnings it produced.
#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: ProbGraph,
    pub warnings: Vec<String>,
}

/// Parses edge-list text: one `tail head [prob]` triple per line, `#` starts
/// a comment, fields separated by whitespace. Self-loops are dropped and a
/// duplicate `(tail, head)` pair keeps the probability seen last; both emit a
/// warning.
pub fn load_graph<R: BufRead>(reader: R, options: &LoadOptions) -> Result<LoadedGraph> {
    if let Some(p) = options.default_prob {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::ProbRange(p));
        }
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, VertexId> = HashMap::new();
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut by_pair: HashMap<(VertexId, VertexId), EdgeId> = HashMap::new();
    let mut warnings = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let text = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() > 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 'tail head [prob]', found {} fields", fields.len()),
            });
        }
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: lineno,
                message: "expected 'tail head [prob]'".into(),
            });
        }
        let p = if fields.len() == 3 {
            let p: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid probability '{}'", fields[2]),
            })?;
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::ParseProb {
                    line: lineno,
                    value: p,
                });
            }
            p
        } else {
            options.default_prob.ok_or_else(|| Error::Parse {
                line: lineno,
                message: "line omits the probability and no --default-prob was given".into(),
            })?
        };
        if fields[0] == fields[1] {
            warnings.push(format!("line {lineno}: dropping self-loop on '{}'", fields[0]));
            continue;
        }
        let mut intern = |label: &str| -> VertexId {
            *index.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            })
        };
        let u = intern(fields[0]);
        let v = intern(fields[1]);
        let mut add = |u: VertexId, v: VertexId| {
            if let Some(&eid) = by_pair.get(&(u, v)) {
                warnings.push(format!(
                    "line {lineno}: duplicate edge '{}' -> '{}', keeping latest probability",
                    labels[u], labels[v]
                ));
                probs[eid] = p;
            } else {
                by_pair.insert((u, v), edges.len());
                edges.push((u, v));
                probs.push(p);
            }
        };
        add(u, v);
        if options.undirected {
            add(v, u);
        }
    }

    let graph = ProbGraph::from_parts(labels, edges, probs)?;
    Ok(LoadedGraph { graph, warnings })
}

/// Square bit matrix with one `u64`-packed row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct BitMatrix {
    n: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let stride = n.div_ceil(64).max(1);
        BitMatrix {
            n,
            stride,
            words: vec![0; stride * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::new(n);
        for i in 0..n {
            m.set(i, i);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.words[i * self.stride + j / 64] & (1 << (j % 64)) != 0
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.words[i * self.stride + j / 64] |= 1 << (j % 64);
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    /// Adds arc `u -> v` and restores transitive closure. Requires the matrix
    /// to be reflexive and transitively closed already.
    pub fn add_arc_closed(&mut self, u: usize, v: usize) {
        let vrow = self.row(v).to_vec();
        for w in 0..self.n {
            if self.get(w, u) {
                let base = w * self.stride;
                for (k, &bits) in vrow.iter().enumerate() {
                    self.words[base + k] |= bits;
                }
            }
        }
    }
}

/// Reflexive-transitive closures of the graph restricted to every order
/// suffix: `matrix(j)` covers exactly the edges at positions `j..m` of the
/// shared edge order, so `matrix(m)` is the identity and `matrix(0)` is the
/// closure of the whole graph.
#[derive(Debug, Clone)]
pub struct SuffixClosure {
    matrices: Vec<BitMatrix>,
}

impl SuffixClosure {
    pub fn matrix(&self, j: usize) -> &BitMatrix {
        &self.matrices[j]
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Precomputes all `m + 1` suffix closures for the given order. Storage is
/// `O((m + 1) n^2)` bits; every closure is shared by all source-target pairs.
pub fn suffix_closures(graph: &ProbGraph, order: &EdgeOrder) -> Result<SuffixClosure> {
    let m = graph.num_edges();
    if order.perm().len() != m {
        return Err(Error::BadPermutation);
    }
    let n = graph.num_vertices();
    let mut matrices = vec![BitMatrix::new(0); m + 1];
    matrices[m] = BitMatrix::identity(n);
    for j in (0..m).rev() {
        let mut mat = matrices[j + 1].clone();
        let (u, v) = graph.edge(order.perm()[j]);
        mat.add_arc_closed(u, v);
        matrices[j] = mat;
    }
    Ok(SuffixClosure { matrices })
}
