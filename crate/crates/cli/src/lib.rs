//! Batch front end: ingestion → metrics → taxonomy → bootstrap → report.
//!
//! [`run_analyze`], [`run_matrix`] and [`run_export`] are what the `fxtree`
//! binary calls; they are exposed so that tests and other tools can drive a
//! run without spawning a process.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use fxtree::bootstrap::{self, average_bootstrap_value, BootstrapConfig, RNG_ALGORITHM};
use fxtree::market_data::{self, CurrencyCode, RatePanel};
use fxtree::metrics::{self, CorrelationMatrix, DistanceMatrix, ReturnPanel, GAP_POLICY, RETURN_INTERVAL};
use fxtree::report::{
    self, AnalysisReport, AnalysisSettings, ClusterListing, DateWindow, LinkageMode, MatrixDigests, NewickStyle,
};
use fxtree::taxonomy::{self, Linkage};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FXTREE_OUT";
pub const DEFAULT_OUT_DIR: &str = "fxtree-out";
pub const DEFAULT_BASE: &str = "USD";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(#[from] fxtree::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
}

impl CliError {
    /// 1 for domain and I/O failures, 2 for usage and configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Dot,
    Newick,
    Json,
    Csv,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Dot, Format::Newick, Format::Json, Format::Csv];
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dot" => Ok(Format::Dot),
            "newick" => Ok(Format::Newick),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Config(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Dot => "dot",
            Format::Newick => "newick",
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// Parses a comma-separated format list such as `dot,json`.
pub fn parse_formats(s: &str) -> Result<BTreeSet<Format>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(Format::from_str)
        .collect()
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    /// Currency the input file is quoted in.
    pub base: CurrencyCode,
    pub numeraire: CurrencyCode,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub linkage: LinkageMode,
    pub replicas: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub formats: BTreeSet<Format>,
    /// Cut height for the cluster listing in the summary and report.
    pub threshold: Option<f64>,
    pub forward_fill: bool,
    /// Bootstrap worker threads; `Some(1)` runs replicas serially.
    pub threads: Option<usize>,
    pub newick_style: NewickStyle,
}

impl RunConfig {
    /// Defaults for everything except the input file and numeraire.
    pub fn new(input: impl Into<PathBuf>, numeraire: CurrencyCode) -> Self {
        RunConfig {
            input: input.into(),
            base: CurrencyCode::new(DEFAULT_BASE).unwrap(),
            numeraire,
            from: None,
            to: None,
            linkage: LinkageMode::Both,
            replicas: bootstrap::DEFAULT_REPLICAS,
            seed: 0,
            out: default_out_dir(),
            formats: Format::ALL.into_iter().collect(),
            threshold: None,
            forward_fill: false,
            threads: None,
            newick_style: NewickStyle::HeightTags,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(CliError::Config("replicas must be at least 1".into()));
        }
        if let (Some(a), Some(b)) = (self.from, self.to) {
            if a > b {
                return Err(CliError::Config(format!("window start {a} is after end {b}")));
            }
        }
        if let Some(t) = self.threshold {
            if t.is_nan() || t < 0.0 {
                return Err(CliError::Config(format!("threshold {t} must be non-negative")));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn bootstrap(&self) -> BootstrapConfig {
        let cfg = BootstrapConfig {
            replicas: self.replicas,
            seed: self.seed,
            parallel: true,
        };
        if self.threads == Some(1) {
            cfg.serial()
        } else {
            cfg
        }
    }

    fn settings(&self) -> AnalysisSettings {
        AnalysisSettings {
            input_base: self.base.clone(),
            from: self.from,
            to: self.to,
            missing_data: if self.forward_fill {
                "forward-fill".into()
            } else {
                "drop-incomplete-dates".into()
            },
            return_interval: RETURN_INTERVAL,
            gap_policy: GAP_POLICY.into(),
            linkage: self.linkage,
            replicas: self.replicas,
            seed: self.seed,
            rng: RNG_ALGORITHM.into(),
            cluster_threshold: self.threshold,
        }
    }
}

/// `$FXTREE_OUT`, or `fxtree-out` when unset.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Optional TOML config file; every key mirrors a command-line flag.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub base: Option<String>,
    pub numeraire: Option<String>,
    #[serde(default, deserialize_with = "toml_date")]
    pub from: Option<NaiveDate>,
    #[serde(default, deserialize_with = "toml_date")]
    pub to: Option<NaiveDate>,
    pub linkage: Option<String>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
    pub threshold: Option<f64>,
    pub forward_fill: Option<bool>,
    pub threads: Option<usize>,
    pub newick_lengths: Option<bool>,
}

/// Accepts a bare TOML date (`2007-01-02`) or a quoted one.
fn toml_date<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<NaiveDate>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Native(toml::value::Datetime),
        Text(String),
    }
    let text = match Raw::deserialize(d)? {
        Raw::Native(dt) => match (dt.date, dt.time) {
            (Some(date), None) => date.to_string(),
            _ => return Err(serde::de::Error::custom(format!("expected a plain date, got {dt}"))),
        },
        Raw::Text(s) => s,
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d")
        .map(Some)
        .map_err(|e| serde::de::Error::custom(format!("{text}: {e}")))
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Layers `flags` over `self`; unset keys fall back to the defaults.
    pub fn resolve(self, flags: FileConfig) -> Result<RunConfig> {
        let input = flags
            .input
            .or(self.input)
            .ok_or_else(|| CliError::Config("--input is required".into()))?;
        let numeraire = flags
            .numeraire
            .or(self.numeraire)
            .ok_or_else(|| CliError::Config("--numeraire is required".into()))?;
        let code = |s: String| CurrencyCode::new(s).map_err(|e| CliError::Config(e.to_string()));
        let mut cfg = RunConfig::new(input, code(numeraire)?);
        if let Some(base) = flags.base.or(self.base) {
            cfg.base = code(base)?;
        }
        cfg.from = flags.from.or(self.from);
        cfg.to = flags.to.or(self.to);
        if let Some(l) = flags.linkage.or(self.linkage) {
            cfg.linkage = l.parse().map_err(|e: fxtree::Error| CliError::Config(e.to_string()))?;
        }
        if let Some(r) = flags.replicas.or(self.replicas) {
            cfg.replicas = r;
        }
        if let Some(s) = flags.seed.or(self.seed) {
            cfg.seed = s;
        }
        if let Some(o) = flags.out.or(self.out) {
            cfg.out = o;
        }
        if let Some(f) = flags.formats.or(self.formats) {
            cfg.formats = f.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        cfg.threshold = flags.threshold.or(self.threshold);
        cfg.forward_fill = flags.forward_fill.or(self.forward_fill).unwrap_or(false);
        cfg.threads = flags.threads.or(self.threads);
        if flags.newick_lengths.or(self.newick_lengths).unwrap_or(false) {
            cfg.newick_style = NewickStyle::BranchLengths;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Windowed, aligned panel in the numeraire, plus its log-returns.
pub struct Prepared {
    pub panel: RatePanel,
    pub returns: ReturnPanel,
}

/// Window → optional forward fill → re-base → align → log-returns.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let raw = market_data::read_panel(&cfg.input, &cfg.base)?;
    let mut panel = market_data::restrict_window(&raw, cfg.from, cfg.to)?;
    if cfg.forward_fill {
        panel = market_data::forward_fill(&panel);
    }
    let panel = market_data::align(&market_data::rebase(&panel, &cfg.numeraire)?)?;
    let returns = metrics::log_returns(&panel)?;
    Ok(Prepared { panel, returns })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Correlation and distance matrices for the configured panel.
pub fn compute_matrices(cfg: &RunConfig) -> Result<(Prepared, CorrelationMatrix, DistanceMatrix)> {
    let prepared = prepare(cfg)?;
    let cm = metrics::pearson_correlation(&prepared.returns)?;
    let dm = metrics::correlation_to_distance(&cm);
    Ok((prepared, cm, dm))
}

/// Runs the full analysis and returns the report without writing anything.
pub fn analyze(cfg: &RunConfig) -> Result<AnalysisReport> {
    cfg.validate()?;
    let (prepared, cm, dm) = compute_matrices(cfg)?;
    let mst = taxonomy::kruskal_mst(&dm)?;
    let single_ht = taxonomy::single_linkage(&dm)?;
    let average_ht = if cfg.linkage.wants_average() {
        Some(taxonomy::average_linkage(&dm)?)
    } else {
        None
    };

    let boot = cfg.bootstrap();
    let linkages = cfg.linkage.bootstrapped();
    let reliability = match cfg.threads {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| bootstrap::reliability(&prepared.returns, &boot, &linkages))?,
        _ => bootstrap::reliability(&prepared.returns, &boot, &linkages)?,
    };
    let avg_bootstrap = average_bootstrap_value(&reliability)?;

    let clusters = cfg.threshold.map(|threshold| ClusterListing {
        linkage: Linkage::Single,
        threshold,
        clusters: single_ht.clusters_at(threshold),
    });
    let (start, end) = prepared.panel.window();
    let report = AnalysisReport {
        numeraire: cfg.numeraire.clone(),
        window: DateWindow { start, end },
        n_currencies: dm.len(),
        n_days: prepared.panel.n_dates(),
        settings: cfg.settings(),
        matrices: MatrixDigests {
            correlation_sha256: cm.content_hash(),
            distance_sha256: dm.content_hash(),
        },
        mst,
        single_ht,
        average_ht,
        reliability,
        avg_bootstrap,
        clusters,
    };
    report.validate()?;
    Ok(report)
}

/// Writes the tree and table artifacts of `report` for the given formats.
pub fn write_artifacts(
    report: &AnalysisReport,
    dir: &Path,
    formats: &BTreeSet<Format>,
    style: NewickStyle,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Dot) {
        let dot = report::export_dot(&report.mst, Some(&report.reliability))?;
        written.push(write(dir, "mst.dot", &dot)?);
    }
    if formats.contains(&Format::Newick) {
        let mut text = report::export_newick(&report.single_ht, style);
        text.push('\n');
        written.push(write(dir, "ht_single.newick", &text)?);
        if let Some(avg) = &report.average_ht {
            let mut text = report::export_newick(avg, style);
            text.push('\n');
            written.push(write(dir, "ht_average.newick", &text)?);
        }
    }
    if formats.contains(&Format::Csv) {
        written.push(write(dir, "reliability.csv", &report.reliability.to_csv())?);
    }
    if formats.contains(&Format::Json) {
        written.push(write(dir, "report.json", &report::export_report(report))?);
    }
    Ok(written)
}

/// `analyze`: full pipeline plus artifacts in `cfg.out`.
pub fn run_analyze(cfg: &RunConfig) -> Result<(AnalysisReport, Vec<PathBuf>)> {
    let report = analyze(cfg)?;
    let written = write_artifacts(&report, &cfg.out, &cfg.formats, cfg.newick_style)?;
    Ok((report, written))
}

/// `matrix`: correlation and distance matrices only.
///
/// Writes `correlation.csv`/`distance.csv` for `csv` and
/// `correlation.json`/`distance.json` for `json`.
pub fn run_matrix(cfg: &RunConfig) -> Result<(CorrelationMatrix, DistanceMatrix, Vec<PathBuf>)> {
    cfg.validate()?;
    let (_, cm, dm) = compute_matrices(cfg)?;
    ensure_dir(&cfg.out)?;
    let mut written = Vec::new();
    if cfg.formats.contains(&Format::Csv) {
        written.push(write(&cfg.out, "correlation.csv", &cm.to_csv())?);
        written.push(write(&cfg.out, "distance.csv", &dm.to_csv())?);
    }
    if cfg.formats.contains(&Format::Json) {
        written.push(write(&cfg.out, "correlation.json", &(cm.to_json() + "\n"))?);
        written.push(write(&cfg.out, "distance.json", &(dm.to_json() + "\n"))?);
    }
    Ok((cm, dm, written))
}

/// `export`: re-renders artifacts from a saved `report.json`.
pub fn run_export(
    report_path: &Path,
    out: &Path,
    formats: &BTreeSet<Format>,
    style: NewickStyle,
) -> Result<(AnalysisReport, Vec<PathBuf>)> {
    let text = fs::read_to_string(report_path).map_err(io_err(report_path))?;
    let report = AnalysisReport::from_json(&text)?;
    let written = write_artifacts(&report, out, formats, style)?;
    Ok((report, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        let f = parse_formats("dot, json").unwrap();
        assert_eq!(f.into_iter().collect::<Vec<_>>(), vec![Format::Dot, Format::Json]);
        assert!(parse_formats("png").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig {
            input: Some("a.csv".into()),
            numeraire: Some("TL".into()),
            replicas: Some(50),
            seed: Some(3),
            ..Default::default()
        };
        let flags = FileConfig {
            seed: Some(9),
            linkage: Some("single".into()),
            ..Default::default()
        };
        let cfg = file.resolve(flags).unwrap();
        assert_eq!(cfg.input, PathBuf::from("a.csv"));
        assert_eq!(cfg.numeraire.as_str(), "TL");
        assert_eq!(cfg.replicas, 50);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.linkage, LinkageMode::Single);
        assert_eq!(cfg.base.as_str(), "USD");
    }

    #[test]
    fn missing_required_and_invalid_values() {
        assert!(matches!(
            FileConfig::default().resolve(FileConfig::default()),
            Err(CliError::Config(_))
        ));
        let bad = FileConfig {
            input: Some("a.csv".into()),
            numeraire: Some("TL".into()),
            replicas: Some(0),
            ..Default::default()
        };
        let err = bad.resolve(FileConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let window = FileConfig {
            input: Some("a.csv".into()),
            numeraire: Some("TL".into()),
            from: NaiveDate::from_ymd_opt(2008, 1, 1),
            to: NaiveDate::from_ymd_opt(2007, 1, 1),
            ..Default::default()
        };
        assert!(window.resolve(FileConfig::default()).is_err());
    }

    #[test]
    fn toml_config() {
        let cfg: FileConfig = toml::from_str(
            "input = \"x.csv\"\nnumeraire = \"USD\"\nfrom = 2007-01-02\nformats = [\"dot\"]\nreplicas = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.from, NaiveDate::from_ymd_opt(2007, 1, 2));
        let run = cfg.resolve(FileConfig::default()).unwrap();
        assert_eq!(run.formats.len(), 1);
        let quoted: FileConfig = toml::from_str("to = \"2008-03-04\"").unwrap();
        assert_eq!(quoted.to, NaiveDate::from_ymd_opt(2008, 3, 4));
        assert!(toml::from_str::<FileConfig>("to = 2008-03-04T10:00:00").is_err());
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
