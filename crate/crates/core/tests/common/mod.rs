//! Independent reference implementations used as test oracles.
//!
//! Everything here is deliberately naive: no union-find, no incremental
//! updates, plain summation. Shared by the core integration tests and the
//! acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;

use fxtree::market_data::CurrencyCode;
use fxtree::metrics::DistanceMatrix;
use rand::Rng;

/// `AA, AB, ..., AZ, BA, ...`
pub fn codes(n: usize) -> Vec<CurrencyCode> {
    (0..n)
        .map(|i| {
            let s: String = [b'A' + (i / 26) as u8, b'A' + (i % 26) as u8]
                .iter()
                .map(|&c| c as char)
                .collect();
            CurrencyCode::new(s).unwrap()
        })
        .collect()
}

/// Symmetric matrix with zero diagonal and off-diagonal entries drawn by `draw`.
pub fn random_rows(n: usize, mut draw: impl FnMut() -> f64) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, j) in (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))) {
        let w = draw();
        rows[i][j] = w;
        rows[j][i] = w;
    }
    rows
}

/// Continuous weights in `(0, 2)`: ties have probability zero.
pub fn random_distance<R: Rng>(rng: &mut R, n: usize) -> DistanceMatrix {
    let rows = random_rows(n, || rng.random_range(0.01..1.99));
    DistanceMatrix::from_rows(codes(n), &rows).unwrap()
}

/// Weights from a handful of values so that ties are common.
pub fn tied_distance<R: Rng>(rng: &mut R, n: usize) -> DistanceMatrix {
    let rows = random_rows(n, || [0.25, 0.5, 0.75, 1.0, 1.5][rng.random_range(0..5)]);
    DistanceMatrix::from_rows(codes(n), &rows).unwrap()
}

pub fn to_rows(dm: &DistanceMatrix) -> Vec<Vec<f64>> {
    (0..dm.len()).map(|i| dm.row(i).to_vec()).collect()
}

/// Sum of weights in ascending order, matching `SpanningTree::total_weight`.
pub fn ordered_sum(mut weights: Vec<f64>) -> f64 {
    weights.sort_by(f64::total_cmp);
    weights.iter().sum()
}

pub type EdgeList = Vec<(usize, usize)>;

fn canonical(mut edges: EdgeList) -> EdgeList {
    for e in edges.iter_mut() {
        if e.0 > e.1 {
            *e = (e.1, e.0);
        }
    }
    edges.sort();
    edges
}

/// Tree decoded from a Prüfer sequence over `0..n`.
pub fn prufer_decode(seq: &[usize], n: usize) -> EdgeList {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    canonical(edges)
}

/// Minimum total weight over all `n^(n-2)` labelled spanning trees, together
/// with every tree achieving it.
pub fn brute_force_msts(rows: &[Vec<f64>]) -> (f64, Vec<EdgeList>) {
    let n = rows.len();
    if n == 2 {
        return (rows[0][1], vec![vec![(0, 1)]]);
    }
    let mut best = f64::INFINITY;
    let mut winners = Vec::new();
    let mut seq = vec![0usize; n - 2];
    loop {
        let edges = prufer_decode(&seq, n);
        let w = ordered_sum(edges.iter().map(|&(a, b)| rows[a][b]).collect());
        if w < best {
            best = w;
            winners.clear();
        }
        if w == best {
            winners.push(edges);
        }
        // Odometer increment.
        let mut k = 0;
        while k < seq.len() {
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
        if k == seq.len() {
            break;
        }
    }
    (best, winners)
}

/// Dense O(N²) Prim starting from node 0.
pub fn prim(rows: &[Vec<f64>]) -> EdgeList {
    let n = rows.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    best[0] = 0.0;
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&x, &y| best[x].total_cmp(&best[y]))
            .unwrap();
        in_tree[v] = true;
        if parent[v] != usize::MAX {
            edges.push((parent[v], v));
        }
        for u in 0..n {
            if !in_tree[u] && rows[v][u] < best[u] {
                best[u] = rows[v][u];
                parent[u] = v;
            }
        }
    }
    canonical(edges)
}

/// Minimax path distance by Floyd–Warshall over the full graph: the largest
/// step on the best path between each pair.
pub fn minimax(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut m = rows.to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i][k].max(m[k][j]);
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    m
}

/// Plain two-pass sample correlation.
pub fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Naive agglomeration recomputing every cluster distance from leaf pairs.
/// Returns `(sorted leaf set, height)` per merge.
pub fn naive_linkage(rows: &[Vec<f64>], average: bool) -> Vec<(Vec<usize>, f64)> {
    let mut clusters: Vec<Vec<usize>> = (0..rows.len()).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for p in 0..clusters.len() {
            for q in p + 1..clusters.len() {
                let pairs = clusters[p]
                    .iter()
                    .flat_map(|&i| clusters[q].iter().map(move |&j| (i, j)));
                let d = if average {
                    let (sum, count) = pairs.fold((0.0, 0usize), |(s, c), (i, j)| (s + rows[i][j], c + 1));
                    sum / count as f64
                } else {
                    pairs.map(|(i, j)| rows[i][j]).fold(f64::INFINITY, f64::min)
                };
                if d < best.0 {
                    best = (d, p, q);
                }
            }
        }
        let (d, p, q) = best;
        let right = clusters.remove(q);
        let mut merged = clusters.remove(p);
        merged.extend(right);
        merged.sort();
        out.push((merged.clone(), d));
        clusters.push(merged);
    }
    out
}

/// Leaf sets and heights parsed from `((A,B)[h=0.5],C)[h=1.0];`, in the
/// order the closing brackets appear.
pub fn parse_newick(text: &str) -> (BTreeSet<String>, Vec<(BTreeSet<String>, f64)>) {
    let text = text.trim();
    assert!(text.ends_with(';'), "missing terminator: {text}");
    let bytes = text.as_bytes();
    let mut stack: Vec<BTreeSet<String>> = vec![BTreeSet::new()];
    let mut leaves = BTreeSet::new();
    let mut internal = Vec::new();
    let mut i = 0;
    while i < bytes.len() - 1 {
        match bytes[i] {
            b'(' => {
                stack.push(BTreeSet::new());
                i += 1;
            }
            b',' => i += 1,
            b')' => {
                let set = stack.pop().unwrap();
                i += 1;
                let mut height = f64::NAN;
                if bytes.get(i) == Some(&b'[') {
                    let end = i + text[i..].find(']').unwrap();
                    height = text[i + 3..end].parse().unwrap();
                    i = end + 1;
                }
                if bytes.get(i) == Some(&b':') {
                    i += 1 + text[i + 1..].find([',', ')', ';']).unwrap();
                }
                stack.last_mut().unwrap().extend(set.iter().cloned());
                internal.push((set, height));
            }
            _ => {
                let end = i + text[i..].find(|c: char| ",():;[".contains(c)).unwrap();
                let name = text[i..end].to_string();
                leaves.insert(name.clone());
                stack.last_mut().unwrap().insert(name);
                i = end;
                if bytes.get(i) == Some(&b':') {
                    i += 1 + text[i + 1..].find([',', ')', ';']).unwrap();
                }
            }
        }
    }
    (leaves, internal)
}

/// `(a, b, weight, label)` for each edge line of a DOT graph.
pub fn parse_dot_edges(text: &str) -> Vec<(String, String, f64, Option<String>)> {
    text.lines()
        .filter(|l| l.contains(" -- "))
        .map(|l| {
            let quoted: Vec<&str> = l.split('"').collect();
            let a = quoted[1].to_string();
            let b = quoted[3].to_string();
            let attrs = &l[l.find('[').unwrap() + 1..l.rfind(']').unwrap()];
            let mut weight = f64::NAN;
            let mut label = None;
            for part in attrs.split(", ") {
                let (k, v) = part.split_once('=').unwrap();
                match k {
                    "weight" => weight = v.parse().unwrap(),
                    "label" => label = Some(v.trim_matches('"').to_string()),
                    _ => {}
                }
            }
            (a, b, weight, label)
        })
        .collect()
}
