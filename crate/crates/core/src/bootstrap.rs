//! Bootstrap reliability of MST links and hierarchical-tree clusters.
//!
//! Each replica resamples whole days (rows) of the return panel with
//! replacement, rebuilds the MST and the requested dendrograms, and records
//! which reference edges and clusters reappear. Replica `k` draws from its
//! own ChaCha8 stream (`seed`, stream `k`), and hits are merged by counting,
//! so the table is identical for serial and parallel execution.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::market_data::CurrencyCode;
use crate::metrics::{correlation_to_distance, pearson_correlation, DistanceMatrix, ReturnPanel};
use crate::taxonomy::{hierarchical_tree, kruskal_mst, Linkage};

/// Generator used for replicas; echoed in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9); seed_from_u64(seed), stream = replica index";

pub const DEFAULT_REPLICAS: usize = 1000;

/// Redraws allowed per requested replica before giving up.
pub const REDRAW_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicas: usize,
    pub seed: u64,
    /// Run replicas on the rayon pool. Does not change results.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicas: DEFAULT_REPLICAS,
            seed: 0,
            parallel: true,
        }
    }
}

impl BootstrapConfig {
    pub fn new(replicas: usize, seed: u64) -> Result<Self> {
        let cfg = BootstrapConfig {
            replicas,
            seed,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn serial(self) -> Self {
        BootstrapConfig {
            parallel: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidConfig("replicas must be at least 1".into()));
        }
        Ok(())
    }

    /// Generator for replica `index`.
    pub fn replica_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReliability {
    pub a: CurrencyCode,
    pub b: CurrencyCode,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReliability {
    pub linkage: Linkage,
    pub members: Vec<CurrencyCode>,
    pub reliability: f64,
}

/// Bootstrap fractions for the reference MST edges (sorted by code pair)
/// and the reference dendrogram clusters (in merge order, per linkage).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct ReliabilityTable {
    pub replicas: usize,
    pub edges: Vec<EdgeReliability>,
    pub clusters: Vec<ClusterReliability>,
}

#[derive(Deserialize)]
struct RawTable {
    replicas: usize,
    edges: Vec<EdgeReliability>,
    clusters: Vec<ClusterReliability>,
}

impl TryFrom<RawTable> for ReliabilityTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        let fractions = raw
            .edges
            .iter()
            .map(|e| e.reliability)
            .chain(raw.clusters.iter().map(|c| c.reliability));
        for f in fractions {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidReport(format!("reliability {f} outside [0, 1]")));
            }
        }
        if raw.replicas == 0 {
            return Err(Error::InvalidReport("replica count is zero".into()));
        }
        Ok(ReliabilityTable {
            replicas: raw.replicas,
            edges: raw.edges,
            clusters: raw.clusters,
        })
    }
}

impl ReliabilityTable {
    pub fn edge(&self, x: &CurrencyCode, y: &CurrencyCode) -> Option<f64> {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        self.edges
            .iter()
            .find(|e| &e.a == a && &e.b == b)
            .map(|e| e.reliability)
    }

    pub fn cluster(&self, linkage: Linkage, members: &[CurrencyCode]) -> Option<f64> {
        let mut sorted = members.to_vec();
        sorted.sort();
        self.clusters
            .iter()
            .find(|c| c.linkage == linkage && c.members == sorted)
            .map(|c| c.reliability)
    }

    pub fn clusters_for(&self, linkage: Linkage) -> impl Iterator<Item = &ClusterReliability> {
        self.clusters.iter().filter(move |c| c.linkage == linkage)
    }

    /// `a,b,reliability` rows with two-decimal fractions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,reliability\n");
        for e in &self.edges {
            out.push_str(&format!("{},{},{}\n", e.a, e.b, format::reliability(e.reliability)));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serialization cannot fail")
    }
}

/// Mean of the MST edge reliabilities.
pub fn average_bootstrap_value(table: &ReliabilityTable) -> Result<f64> {
    if table.edges.is_empty() {
        return Err(Error::EmptyTable);
    }
    let sum: f64 = table.edges.iter().map(|e| e.reliability).sum();
    Ok(sum / table.edges.len() as f64)
}

/// Draws `R` whole rows uniformly with replacement.
pub fn resample_returns<R: Rng + ?Sized>(rp: &ReturnPanel, rng: &mut R) -> ReturnPanel {
    let n = rp.n_rows();
    let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    rp.select_rows(&picks)
}

fn distances(rp: &ReturnPanel) -> Result<DistanceMatrix> {
    Ok(correlation_to_distance(&pearson_correlation(rp)?))
}

/// Reference structure, expressed as column indices of the return panel.
struct Reference {
    edges: Vec<(usize, usize)>,
    clusters: Vec<(Linkage, Vec<usize>)>,
}

/// Sorted column indices of a sorted code list.
fn indices(codes: &[CurrencyCode], members: &[CurrencyCode]) -> Vec<usize> {
    let mut idx: Vec<usize> = members
        .iter()
        .map(|m| codes.iter().position(|c| c == m).expect("member is a column"))
        .collect();
    idx.sort_unstable();
    idx
}

fn structure(dm: &DistanceMatrix, linkages: &[Linkage]) -> Result<Reference> {
    let codes = dm.currencies();
    let tree = kruskal_mst(dm)?;
    let edges = tree
        .edges()
        .iter()
        .map(|e| {
            let p = indices(codes, &[e.a.clone(), e.b.clone()]);
            (p[0], p[1])
        })
        .collect();
    let mut clusters = Vec::new();
    for &linkage in linkages {
        for set in hierarchical_tree(dm, linkage)?.leaf_sets() {
            clusters.push((linkage, indices(codes, &set)));
        }
    }
    Ok(Reference { edges, clusters })
}

/// Outcome of one replica: hit flags and the number of redraws used.
struct ReplicaHits {
    edges: Vec<bool>,
    clusters: Vec<bool>,
    redraws: usize,
}

fn run_replica(
    rp: &ReturnPanel,
    cfg: &BootstrapConfig,
    index: usize,
    reference: &Reference,
    linkages: &[Linkage],
    budget: usize,
) -> Result<ReplicaHits> {
    let mut rng = cfg.replica_rng(index);
    let mut redraws = 0;
    let replica = loop {
        let candidate = resample_returns(rp, &mut rng);
        if (0..candidate.n_currencies()).all(|i| !candidate.is_constant(i)) {
            break candidate;
        }
        redraws += 1;
        if redraws > budget {
            return Err(Error::DegenerateReplicas { budget });
        }
    };
    let found = structure(&distances(&replica)?, linkages)?;
    let edges = reference.edges.iter().map(|e| found.edges.contains(e)).collect();
    let clusters = reference.clusters.iter().map(|c| found.clusters.contains(c)).collect();
    Ok(ReplicaHits {
        edges,
        clusters,
        redraws,
    })
}

/// Edge reliabilities for the MST of `rp` plus cluster reliabilities for
/// each requested linkage, from one shared set of replicas.
///
/// Replicas with a constant column are redrawn; more than
/// `REDRAW_FACTOR * replicas` redraws in total is an error.
pub fn reliability(rp: &ReturnPanel, cfg: &BootstrapConfig, linkages: &[Linkage]) -> Result<ReliabilityTable> {
    reliability_with_budget(rp, cfg, linkages, REDRAW_FACTOR * cfg.replicas)
}

fn reliability_with_budget(
    rp: &ReturnPanel,
    cfg: &BootstrapConfig,
    linkages: &[Linkage],
    budget: usize,
) -> Result<ReliabilityTable> {
    cfg.validate()?;
    let codes = rp.currencies();
    let reference = structure(&distances(rp)?, linkages)?;

    let work = |k: usize| run_replica(rp, cfg, k, &reference, linkages, budget);
    let outcomes: Vec<Result<ReplicaHits>> = if cfg.parallel {
        (0..cfg.replicas).into_par_iter().map(work).collect()
    } else {
        (0..cfg.replicas).map(work).collect()
    };

    let mut edge_hits = vec![0usize; reference.edges.len()];
    let mut cluster_hits = vec![0usize; reference.clusters.len()];
    let mut redraws = 0usize;
    for outcome in outcomes {
        let hits = outcome?;
        redraws += hits.redraws;
        for (count, hit) in edge_hits.iter_mut().zip(hits.edges) {
            *count += hit as usize;
        }
        for (count, hit) in cluster_hits.iter_mut().zip(hits.clusters) {
            *count += hit as usize;
        }
    }
    if redraws > budget {
        return Err(Error::DegenerateReplicas { budget });
    }

    let fraction = |hits: usize| hits as f64 / cfg.replicas as f64;
    let mut edges: Vec<EdgeReliability> = reference
        .edges
        .iter()
        .zip(&edge_hits)
        .map(|(&(i, j), &hits)| {
            let (a, b) = if codes[i] < codes[j] { (i, j) } else { (j, i) };
            EdgeReliability {
                a: codes[a].clone(),
                b: codes[b].clone(),
                reliability: fraction(hits),
            }
        })
        .collect();
    edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));

    let clusters = reference
        .clusters
        .iter()
        .zip(&cluster_hits)
        .map(|((linkage, idx), &hits)| {
            let mut members: Vec<CurrencyCode> = idx.iter().map(|&i| codes[i].clone()).collect();
            members.sort();
            ClusterReliability {
                linkage: *linkage,
                members,
                reliability: fraction(hits),
            }
        })
        .collect();

    Ok(ReliabilityTable {
        replicas: cfg.replicas,
        edges,
        clusters,
    })
}

/// Edge part only: fraction of replicas whose MST contains each reference edge.
pub fn mst_edge_reliability(rp: &ReturnPanel, cfg: &BootstrapConfig) -> Result<ReliabilityTable> {
    reliability(rp, cfg, &[])
}

/// Cluster part only: fraction of replicas whose dendrogram contains each
/// reference cluster's exact leaf-set.
pub fn cluster_reliability(
    rp: &ReturnPanel,
    cfg: &BootstrapConfig,
    linkage: Linkage,
) -> Result<Vec<ClusterReliability>> {
    Ok(reliability(rp, cfg, &[linkage])?.clusters)
}
