//! Minimal spanning trees, the subdominant ultrametric and agglomerative
//! hierarchical trees built from a [`DistanceMatrix`].
//!
//! Ties are never resolved by input position. Kruskal orders candidate
//! edges by `(weight, a, b)` with `a < b`; the linkage methods order
//! candidate merges by `(distance, smaller min-leaf, larger min-leaf)`,
//! where the min-leaf of a cluster is its lexicographically first code.
//! Weights are compared exactly. Permuting the input therefore only
//! relabels node indices.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::disjoint_set::DisjointSet;
use crate::error::{Error, Result};
use crate::market_data::CurrencyCode;
use crate::matrix::LabeledMatrix;
use crate::metrics::DistanceMatrix;

/// Undirected weighted link between two currencies, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: CurrencyCode,
    pub b: CurrencyCode,
    pub weight: f64,
}

impl Edge {
    /// Creates an edge in canonical orientation.
    pub fn new(x: CurrencyCode, y: CurrencyCode, weight: f64) -> Self {
        if x <= y {
            Edge { a: x, b: y, weight }
        } else {
            Edge { a: y, b: x, weight }
        }
    }

    pub fn key(&self) -> (CurrencyCode, CurrencyCode) {
        (self.a.clone(), self.b.clone())
    }
}

/// A spanning tree over `nodes`, edges in the order Kruskal accepted them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTree")]
pub struct SpanningTree {
    nodes: Vec<CurrencyCode>,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct RawTree {
    nodes: Vec<CurrencyCode>,
    edges: Vec<Edge>,
}

impl TryFrom<RawTree> for SpanningTree {
    type Error = Error;

    fn try_from(raw: RawTree) -> Result<Self> {
        SpanningTree::new(raw.nodes, raw.edges)
    }
}

impl SpanningTree {
    /// Checks edge count, canonical orientation, weight range, and that the
    /// edges connect all nodes without a cycle.
    pub fn new(nodes: Vec<CurrencyCode>, edges: Vec<Edge>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes(nodes.len()));
        }
        if edges.len() != nodes.len() - 1 {
            return Err(Error::InvalidMatrix(format!(
                "{} edges for {} nodes",
                edges.len(),
                nodes.len()
            )));
        }
        let mut ds = DisjointSet::new(nodes.len());
        for e in &edges {
            if e.a >= e.b || !(0.0..=2.0).contains(&e.weight) {
                return Err(Error::InvalidMatrix(format!(
                    "edge {}-{} is not canonical or has weight {} outside [0, 2]",
                    e.a, e.b, e.weight
                )));
            }
            let ia = position(&nodes, &e.a)?;
            let ib = position(&nodes, &e.b)?;
            if !ds.union(ia, ib) {
                return Err(Error::InvalidMatrix(format!("edge {}-{} closes a cycle", e.a, e.b)));
            }
        }
        Ok(SpanningTree { nodes, edges })
    }

    pub fn nodes(&self) -> &[CurrencyCode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sum of edge weights, accumulated in ascending weight order so that
    /// trees with the same weight multiset give bit-identical totals.
    pub fn total_weight(&self) -> f64 {
        let mut w: Vec<f64> = self.edges.iter().map(|e| e.weight).collect();
        w.sort_by(f64::total_cmp);
        w.iter().sum()
    }

    /// Edges as canonical code pairs.
    pub fn edge_set(&self) -> BTreeSet<(CurrencyCode, CurrencyCode)> {
        self.edges.iter().map(Edge::key).collect()
    }

    /// Edges sorted by `(a, b)`.
    pub fn sorted_edges(&self) -> Vec<&Edge> {
        let mut edges: Vec<&Edge> = self.edges.iter().collect();
        edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        edges
    }

    /// Number of edges incident to each node, in node order.
    pub fn degrees(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .map(|n| self.edges.iter().filter(|e| &e.a == n || &e.b == n).count())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization cannot fail")
    }
}

fn position(nodes: &[CurrencyCode], code: &CurrencyCode) -> Result<usize> {
    nodes
        .iter()
        .position(|c| c == code)
        .ok_or_else(|| Error::InvalidMatrix(format!("edge endpoint {code} is not a node")))
}

/// Kruskal's algorithm: accept edges by ascending `(weight, a, b)` unless
/// they would close a cycle, until `N - 1` are accepted.
pub fn kruskal_mst(dm: &DistanceMatrix) -> Result<SpanningTree> {
    let n = dm.len();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    let codes = dm.currencies();
    let mut candidates: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            // orient by code so the tie-break key is (weight, a, b)
            if codes[i] < codes[j] {
                candidates.push((i, j));
            } else {
                candidates.push((j, i));
            }
        }
    }
    candidates.sort_by(|&(i, j), &(k, l)| {
        dm.get(i, j)
            .total_cmp(&dm.get(k, l))
            .then_with(|| codes[i].cmp(&codes[k]))
            .then_with(|| codes[j].cmp(&codes[l]))
    });

    let mut ds = DisjointSet::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for (i, j) in candidates {
        if ds.union(i, j) {
            edges.push(Edge {
                a: codes[i].clone(),
                b: codes[j].clone(),
                weight: dm.get(i, j),
            });
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(SpanningTree {
        nodes: codes.to_vec(),
        edges,
    })
}

/// Symmetric matrix of ultrametric distances (strong triangle inequality).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabeledMatrix", into = "LabeledMatrix")]
pub struct UltrametricMatrix(LabeledMatrix);

impl UltrametricMatrix {
    /// Checks symmetry, zero diagonal, the `[0, 2]` range and the strong
    /// triangle inequality for every triple.
    pub fn new(matrix: LabeledMatrix) -> Result<Self> {
        matrix.validate(0.0, 0.0, 2.0)?;
        let um = UltrametricMatrix(matrix);
        if let Some((i, j, k)) = um.strong_triangle_violation() {
            let c = um.currencies();
            return Err(Error::InvalidMatrix(format!(
                "d({},{}) exceeds max(d({},{}), d({},{}))",
                c[i], c[j], c[i], c[k], c[k], c[j]
            )));
        }
        Ok(um)
    }

    /// First triple with `d(i,j) > max(d(i,k), d(k,j))`, if any.
    pub fn strong_triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.get(i, j) > self.get(i, k).max(self.get(k, j)) {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    pub fn into_inner(self) -> LabeledMatrix {
        self.0
    }
}

impl Deref for UltrametricMatrix {
    type Target = LabeledMatrix;

    fn deref(&self) -> &LabeledMatrix {
        &self.0
    }
}

impl TryFrom<LabeledMatrix> for UltrametricMatrix {
    type Error = Error;

    fn try_from(m: LabeledMatrix) -> Result<Self> {
        UltrametricMatrix::new(m)
    }
}

impl From<UltrametricMatrix> for LabeledMatrix {
    fn from(m: UltrametricMatrix) -> Self {
        m.0
    }
}

/// Maximum edge weight on the tree path between every pair of nodes.
pub fn subdominant_ultrametric(tree: &SpanningTree) -> UltrametricMatrix {
    let n = tree.nodes.len();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in &tree.edges {
        // SpanningTree::new guarantees both endpoints exist
        let ia = tree.nodes.iter().position(|c| *c == e.a).unwrap();
        let ib = tree.nodes.iter().position(|c| *c == e.b).unwrap();
        adjacency[ia].push((ib, e.weight));
        adjacency[ib].push((ia, e.weight));
    }

    let mut values = vec![0.0; n * n];
    let mut stack = Vec::with_capacity(n);
    for source in 0..n {
        let row = &mut values[source * n..(source + 1) * n];
        let mut seen = vec![false; n];
        seen[source] = true;
        stack.push((source, 0.0_f64));
        while let Some((node, path_max)) = stack.pop() {
            row[node] = path_max;
            for &(next, w) in &adjacency[node] {
                if !seen[next] {
                    seen[next] = true;
                    stack.push((next, path_max.max(w)));
                }
            }
        }
    }
    UltrametricMatrix(LabeledMatrix::new(tree.nodes.clone(), values).expect("square by construction"))
}

/// Agglomeration rule for hierarchical trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    /// Nearest cross pair; reproduces the subdominant ultrametric.
    Single,
    /// Unweighted mean over cross pairs (UPGMA).
    Average,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
        })
    }
}

/// A dendrogram child: an original leaf or an earlier merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRef {
    Leaf(usize),
    Merge(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: NodeRef,
    pub right: NodeRef,
    pub height: f64,
}

/// Linkage-matrix style hierarchical tree: merge `k` joins two earlier
/// nodes at `height`, and the last merge covers every leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDendrogram")]
pub struct Dendrogram {
    leaves: Vec<CurrencyCode>,
    merges: Vec<Merge>,
}

#[derive(Deserialize)]
struct RawDendrogram {
    leaves: Vec<CurrencyCode>,
    merges: Vec<Merge>,
}

impl TryFrom<RawDendrogram> for Dendrogram {
    type Error = Error;

    fn try_from(raw: RawDendrogram) -> Result<Self> {
        Dendrogram::new(raw.leaves, raw.merges)
    }
}

impl Dendrogram {
    pub fn new(leaves: Vec<CurrencyCode>, merges: Vec<Merge>) -> Result<Self> {
        let n = leaves.len();
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        if merges.len() != n - 1 {
            return Err(Error::InvalidMatrix(format!("{} merges for {n} leaves", merges.len())));
        }
        let mut used_leaf = vec![false; n];
        let mut used_merge = vec![false; n - 1];
        let mut prev = 0.0;
        for (k, m) in merges.iter().enumerate() {
            if !(m.height.is_finite() && m.height >= prev) {
                return Err(Error::InvalidMatrix(format!(
                    "merge {k} height {} is negative or below the previous merge",
                    m.height
                )));
            }
            prev = m.height;
            for child in [m.left, m.right] {
                let slot = match child {
                    NodeRef::Leaf(i) if i < n => &mut used_leaf[i],
                    NodeRef::Merge(j) if j < k => &mut used_merge[j],
                    _ => {
                        return Err(Error::InvalidMatrix(format!(
                            "merge {k} references {child:?}, which does not precede it"
                        )))
                    }
                };
                if *slot {
                    return Err(Error::InvalidMatrix(format!("{child:?} is merged twice")));
                }
                *slot = true;
            }
        }
        let mut sorted = leaves.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateCurrency(w[0].clone()));
        }
        Ok(Dendrogram { leaves, merges })
    }

    pub fn leaves(&self) -> &[CurrencyCode] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Leaf indices under each merge, in merge order.
    fn member_indices(&self) -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> = Vec::with_capacity(self.merges.len());
        for m in &self.merges {
            let mut set = Vec::new();
            for child in [m.left, m.right] {
                match child {
                    NodeRef::Leaf(i) => set.push(i),
                    NodeRef::Merge(j) => set.extend_from_slice(&members[j]),
                }
            }
            members.push(set);
        }
        members
    }

    /// Sorted leaf codes under each merge, in merge order.
    pub fn leaf_sets(&self) -> Vec<Vec<CurrencyCode>> {
        self.member_indices()
            .into_iter()
            .map(|idx| {
                let mut codes: Vec<CurrencyCode> = idx.into_iter().map(|i| self.leaves[i].clone()).collect();
                codes.sort();
                codes
            })
            .collect()
    }

    /// Sorted leaf codes under one child reference.
    pub fn node_leaves(&self, node: NodeRef) -> Vec<CurrencyCode> {
        match node {
            NodeRef::Leaf(i) => vec![self.leaves[i].clone()],
            NodeRef::Merge(j) => self.leaf_sets().swap_remove(j),
        }
    }

    /// Matrix of the heights at which each pair of leaves first shares a cluster.
    pub fn cophenetic(&self) -> UltrametricMatrix {
        let n = self.leaves.len();
        let mut values = vec![0.0; n * n];
        let mut members: Vec<Vec<usize>> = Vec::with_capacity(self.merges.len());
        let side = |r: NodeRef, members: &Vec<Vec<usize>>| match r {
            NodeRef::Leaf(i) => vec![i],
            NodeRef::Merge(j) => members[j].clone(),
        };
        for m in &self.merges {
            let left = side(m.left, &members);
            let right = side(m.right, &members);
            for &i in &left {
                for &j in &right {
                    values[i * n + j] = m.height;
                    values[j * n + i] = m.height;
                }
            }
            members.push(left.into_iter().chain(right).collect());
        }
        UltrametricMatrix(LabeledMatrix::new(self.leaves.clone(), values).expect("square by construction"))
    }

    /// Partition left after undoing every merge with `height > threshold`.
    /// Each part is sorted, and parts are ordered by their first code.
    pub fn clusters_at(&self, threshold: f64) -> Vec<Vec<CurrencyCode>> {
        let n = self.leaves.len();
        let members = self.member_indices();
        let mut ds = DisjointSet::new(n);
        for (m, set) in self.merges.iter().zip(&members) {
            if m.height <= threshold {
                for &i in &set[1..] {
                    ds.union(set[0], i);
                }
            }
        }
        let mut parts: Vec<Vec<CurrencyCode>> = Vec::new();
        let mut root_part = vec![usize::MAX; n];
        for i in 0..n {
            let r = ds.find(i);
            if root_part[r] == usize::MAX {
                root_part[r] = parts.len();
                parts.push(Vec::new());
            }
            parts[root_part[r]].push(self.leaves[i].clone());
        }
        for p in &mut parts {
            p.sort();
        }
        parts.sort();
        parts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dendrogram serialization cannot fail")
    }
}

struct Cluster {
    node: NodeRef,
    size: usize,
    min_leaf: CurrencyCode,
}

fn agglomerate(dm: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dm.len();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    let codes = dm.currencies();
    let mut dist: Vec<f64> = dm.values().to_vec();
    let mut clusters: Vec<Option<Cluster>> = (0..n)
        .map(|i| {
            Some(Cluster {
                node: NodeRef::Leaf(i),
                size: 1,
                min_leaf: codes[i].clone(),
            })
        })
        .collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        // (distance, first, second) with first holding the smaller min-leaf
        let mut best: Option<(f64, usize, usize)> = None;
        for p in 0..n {
            let Some(cp) = &clusters[p] else { continue };
            for q in p + 1..n {
                let Some(cq) = &clusters[q] else { continue };
                let (first, second) = if cp.min_leaf < cq.min_leaf { (p, q) } else { (q, p) };
                let d = dist[p * n + q];
                let better = match best {
                    None => true,
                    Some((bd, bf, bs)) => {
                        let leaf = |k: usize| &clusters[k].as_ref().unwrap().min_leaf;
                        d.total_cmp(&bd)
                            .then_with(|| leaf(first).cmp(leaf(bf)))
                            .then_with(|| leaf(second).cmp(leaf(bs)))
                            .is_lt()
                    }
                };
                if better {
                    best = Some((d, first, second));
                }
            }
        }
        let (height, first, second) = best.expect("at least two active clusters");
        let cf = clusters[first].take().unwrap();
        let cs = clusters[second].take().unwrap();
        merges.push(Merge {
            left: cf.node,
            right: cs.node,
            height,
        });

        // the merged cluster lives in slot `first`
        for k in 0..n {
            if k == first || k == second || clusters[k].is_none() {
                continue;
            }
            let (x, y) = (dist[first * n + k], dist[second * n + k]);
            let updated = match linkage {
                Linkage::Single => x.min(y),
                Linkage::Average => {
                    // weighted mean written as lo + (hi - lo) * w_hi, which
                    // never rounds below lo, so merge heights stay monotone
                    let (lo, hi, w_hi) = if x <= y {
                        (x, y, cs.size as f64)
                    } else {
                        (y, x, cf.size as f64)
                    };
                    let total = (cf.size + cs.size) as f64;
                    (lo + (hi - lo) * (w_hi / total)).min(hi)
                }
            };
            dist[first * n + k] = updated;
            dist[k * n + first] = updated;
        }
        clusters[first] = Some(Cluster {
            node: NodeRef::Merge(step),
            size: cf.size + cs.size,
            min_leaf: cf.min_leaf,
        });
    }
    Dendrogram::new(codes.to_vec(), merges)
}

/// Hierarchical tree whose inter-cluster distance is the nearest cross pair.
pub fn single_linkage(dm: &DistanceMatrix) -> Result<Dendrogram> {
    agglomerate(dm, Linkage::Single)
}

/// Hierarchical tree whose inter-cluster distance is the mean over all
/// cross pairs (UPGMA).
pub fn average_linkage(dm: &DistanceMatrix) -> Result<Dendrogram> {
    agglomerate(dm, Linkage::Average)
}

pub fn hierarchical_tree(dm: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    agglomerate(dm, linkage)
}
