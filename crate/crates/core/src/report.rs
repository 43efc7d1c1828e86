//! Text exporters (DOT, Newick, JSON) and the analysis report document.
//!
//! Every exporter is deterministic: nodes, edges and children are emitted in
//! sorted code order and numbers use fixed precision (distances 6 decimals,
//! reliabilities 2, average bootstrap value 4).

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize, Serializer};

use crate::bootstrap::{average_bootstrap_value, ReliabilityTable};
use crate::error::{Error, Result};
use crate::format;
use crate::market_data::CurrencyCode;
use crate::taxonomy::{Dendrogram, Linkage, NodeRef, SpanningTree};

pub const SCHEMA_VERSION: &str = "fxtree-report/1";

/// The JSON schema the report document conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

/// Renders the tree as an undirected DOT graph.
///
/// ```text
/// graph mst {
///   "CHF";
///   "EUR";
///   "CHF" -- "EUR" [weight=0.300000, label="0.97"];
/// }
/// ```
///
/// `label` is present only when a reliability table is given, and the table
/// must cover exactly the tree's edges.
pub fn export_dot(tree: &SpanningTree, reliability: Option<&ReliabilityTable>) -> Result<String> {
    if let Some(table) = reliability {
        let tree_edges = tree.edge_set();
        let table_edges: std::collections::BTreeSet<_> =
            table.edges.iter().map(|e| (e.a.clone(), e.b.clone())).collect();
        if tree_edges != table_edges {
            let missing: Vec<String> = tree_edges
                .symmetric_difference(&table_edges)
                .map(|(a, b)| format!("{a}-{b}"))
                .collect();
            return Err(Error::ReliabilityMismatch(format!(
                "edges not shared by tree and table: {}",
                missing.join(", ")
            )));
        }
    }
    let mut nodes: Vec<&CurrencyCode> = tree.nodes().iter().collect();
    nodes.sort();

    let mut out = String::from("graph mst {\n");
    for n in nodes {
        out.push_str(&format!("  \"{n}\";\n"));
    }
    for e in tree.sorted_edges() {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [weight={}",
            e.a,
            e.b,
            format::distance(e.weight)
        ));
        if let Some(r) = reliability.and_then(|t| t.edge(&e.a, &e.b)) {
            out.push_str(&format!(", label=\"{}\"", format::reliability(r)));
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    Ok(out)
}

/// How merge heights appear in Newick output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NewickStyle {
    /// `[h=...]` comment after every internal node, no branch lengths.
    #[default]
    HeightTags,
    /// Height tags plus branch lengths from the half-height embedding: a
    /// node at height `h` sits at depth `h / 2`, so a child's branch is
    /// `(h_parent - h_child) / 2` with leaves at height 0.
    BranchLengths,
}

/// Rooted Newick string, e.g. `(A,B)[h=0.500000];`.
///
/// Children of each merge are ordered by their smallest leaf code.
pub fn export_newick(den: &Dendrogram, style: NewickStyle) -> String {
    let merges = den.merges();
    // (text, min leaf, height) per merge, built in merge order
    let mut rendered: Vec<(String, CurrencyCode, f64)> = Vec::with_capacity(merges.len());
    for m in merges {
        let mut children: Vec<(String, CurrencyCode, f64)> = [m.left, m.right]
            .iter()
            .map(|&child| match child {
                NodeRef::Leaf(i) => (den.leaves()[i].to_string(), den.leaves()[i].clone(), 0.0),
                NodeRef::Merge(j) => rendered[j].clone(),
            })
            .collect();
        children.sort_by(|x, y| x.1.cmp(&y.1));
        let body: Vec<String> = children
            .iter()
            .map(|(text, _, h)| match style {
                NewickStyle::HeightTags => text.clone(),
                NewickStyle::BranchLengths => format!("{text}:{:.6}", (m.height - h) / 2.0),
            })
            .collect();
        let text = format!("({})[h={}]", body.join(","), format::distance(m.height));
        let min_leaf = children[0].1.clone();
        rendered.push((text, min_leaf, m.height));
    }
    let mut out = rendered.pop().expect("at least one merge").0;
    out.push(';');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkageMode {
    /// Single-linkage tree only.
    Single,
    /// Single-linkage tree plus an average-linkage tree; cluster
    /// reliabilities are bootstrapped for the average tree.
    Average,
    /// Both trees, cluster reliabilities for both.
    Both,
}

impl LinkageMode {
    /// Linkages whose clusters receive bootstrap reliabilities.
    pub fn bootstrapped(self) -> Vec<Linkage> {
        match self {
            LinkageMode::Single => vec![Linkage::Single],
            LinkageMode::Average => vec![Linkage::Average],
            LinkageMode::Both => vec![Linkage::Single, Linkage::Average],
        }
    }

    pub fn wants_average(self) -> bool {
        self != LinkageMode::Single
    }
}

impl fmt::Display for LinkageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkageMode::Single => "single",
            LinkageMode::Average => "average",
            LinkageMode::Both => "both",
        })
    }
}

impl std::str::FromStr for LinkageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(LinkageMode::Single),
            "average" => Ok(LinkageMode::Average),
            "both" => Ok(LinkageMode::Both),
            other => Err(Error::InvalidConfig(format!("unknown linkage {other:?}"))),
        }
    }
}

/// Every setting that influences the numbers in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub input_base: CurrencyCode,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub missing_data: String,
    pub return_interval: usize,
    pub gap_policy: String,
    pub linkage: LinkageMode,
    pub replicas: usize,
    pub seed: u64,
    pub rng: String,
    pub cluster_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// SHA-256 digests of the CSV forms of the analysis matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDigests {
    pub correlation_sha256: String,
    pub distance_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterListing {
    pub linkage: Linkage,
    pub threshold: f64,
    pub clusters: Vec<Vec<CurrencyCode>>,
}

/// Everything one analysis run produced.
///
/// Serialized with a leading `schema_version` and `avg_bootstrap` as a
/// four-decimal string; loading recomputes the average from the edge
/// reliabilities and rejects a document whose string disagrees.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "ReportDocument")]
pub struct AnalysisReport {
    pub numeraire: CurrencyCode,
    pub window: DateWindow,
    pub n_currencies: usize,
    pub n_days: usize,
    pub settings: AnalysisSettings,
    pub matrices: MatrixDigests,
    pub mst: SpanningTree,
    pub single_ht: Dendrogram,
    pub average_ht: Option<Dendrogram>,
    pub reliability: ReliabilityTable,
    pub avg_bootstrap: f64,
    pub clusters: Option<ClusterListing>,
}

/// Borrowed on-disk form used for writing.
#[derive(Serialize)]
struct ReportView<'a> {
    schema_version: &'static str,
    numeraire: &'a CurrencyCode,
    window: &'a DateWindow,
    n_currencies: usize,
    n_days: usize,
    settings: &'a AnalysisSettings,
    matrices: &'a MatrixDigests,
    mst: &'a SpanningTree,
    single_ht: &'a Dendrogram,
    average_ht: &'a Option<Dendrogram>,
    reliability: &'a ReliabilityTable,
    avg_bootstrap: String,
    clusters: &'a Option<ClusterListing>,
}

impl Serialize for AnalysisReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportView {
            schema_version: SCHEMA_VERSION,
            numeraire: &self.numeraire,
            window: &self.window,
            n_currencies: self.n_currencies,
            n_days: self.n_days,
            settings: &self.settings,
            matrices: &self.matrices,
            mst: &self.mst,
            single_ht: &self.single_ht,
            average_ht: &self.average_ht,
            reliability: &self.reliability,
            avg_bootstrap: format::average(self.avg_bootstrap),
            clusters: &self.clusters,
        }
        .serialize(s)
    }
}

/// On-disk form used for reading.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportDocument {
    schema_version: String,
    numeraire: CurrencyCode,
    window: DateWindow,
    n_currencies: usize,
    n_days: usize,
    settings: AnalysisSettings,
    matrices: MatrixDigests,
    mst: SpanningTree,
    single_ht: Dendrogram,
    average_ht: Option<Dendrogram>,
    reliability: ReliabilityTable,
    avg_bootstrap: String,
    clusters: Option<ClusterListing>,
}

impl TryFrom<ReportDocument> for AnalysisReport {
    type Error = Error;

    fn try_from(doc: ReportDocument) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidReport(format!(
                "schema version {:?}, expected {SCHEMA_VERSION:?}",
                doc.schema_version
            )));
        }
        let avg = average_bootstrap_value(&doc.reliability)?;
        if format::average(avg) != doc.avg_bootstrap {
            return Err(Error::InvalidReport(format!(
                "avg_bootstrap {} does not match the edge reliabilities ({})",
                doc.avg_bootstrap,
                format::average(avg)
            )));
        }
        let report = AnalysisReport {
            numeraire: doc.numeraire,
            window: doc.window,
            n_currencies: doc.n_currencies,
            n_days: doc.n_days,
            settings: doc.settings,
            matrices: doc.matrices,
            mst: doc.mst,
            single_ht: doc.single_ht,
            average_ht: doc.average_ht,
            reliability: doc.reliability,
            avg_bootstrap: avg,
            clusters: doc.clusters,
        };
        report.validate()?;
        Ok(report)
    }
}

impl AnalysisReport {
    /// Cross-field invariants: node counts agree and the reliability table
    /// covers exactly the MST edges.
    pub fn validate(&self) -> Result<()> {
        if self.n_currencies != self.mst.nodes().len() || self.n_currencies != self.single_ht.leaves().len() {
            return Err(Error::InvalidReport(format!(
                "n_currencies {} disagrees with the trees",
                self.n_currencies
            )));
        }
        let table_edges: std::collections::BTreeSet<_> = self
            .reliability
            .edges
            .iter()
            .map(|e| (e.a.clone(), e.b.clone()))
            .collect();
        if table_edges != self.mst.edge_set() {
            return Err(Error::ReliabilityMismatch("table edges differ from the MST".into()));
        }
        if self.avg_bootstrap != average_bootstrap_value(&self.reliability)? {
            return Err(Error::InvalidReport(
                "avg_bootstrap is not the mean edge reliability".into(),
            ));
        }
        Ok(())
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidReport(e.to_string()))
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("numeraire      {}\n", self.numeraire));
        out.push_str(&format!(
            "window         {} .. {}\n",
            self.window.start, self.window.end
        ));
        out.push_str(&format!("currencies (N) {}\n", self.n_currencies));
        out.push_str(&format!("days (T)       {}\n", self.n_days));
        out.push_str(&format!("MST edges      {}\n", self.mst.edges().len()));
        out.push_str(&format!(
            "replicas       {} (seed {})\n",
            self.reliability.replicas, self.settings.seed
        ));
        out.push_str(&format!("avg bootstrap  {}\n", format::average(self.avg_bootstrap)));
        if let Some(listing) = &self.clusters {
            out.push_str(&format!(
                "clusters at {} ({} linkage):\n",
                format::distance(listing.threshold),
                listing.linkage
            ));
            for c in listing.clusters.iter().filter(|c| c.len() > 1) {
                let names: Vec<&str> = c.iter().map(CurrencyCode::as_str).collect();
                out.push_str(&format!("  {}\n", names.join(" ")));
            }
            let singletons = listing.clusters.iter().filter(|c| c.len() == 1).count();
            out.push_str(&format!("  + {singletons} singleton(s)\n"));
        }
        out
    }
}

/// Serializes a report; see [`AnalysisReport::to_json`].
pub fn export_report(report: &AnalysisReport) -> String {
    report.to_json()
}
