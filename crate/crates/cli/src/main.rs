use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use fxtree::report::NewickStyle;
use fxtree_cli::{parse_formats, CliError, FileConfig, Format, RunConfig, OUT_DIR_ENV};

/// Currency correlation taxonomies with bootstrap reliability.
#[derive(Debug, Parser)]
#[command(name = "fxtree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimum spanning tree, hierarchical trees and bootstrap reliability.
    Analyze(RunArgs),
    /// Correlation and distance matrices only.
    Matrix(RunArgs),
    /// Re-render artifacts from a saved report.json.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file providing defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rate CSV: a `date` column followed by one column per currency.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Currency the input rates are quoted in [default: USD].
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    numeraire: Option<String>,
    /// First date to keep (YYYY-MM-DD).
    #[arg(long)]
    from: Option<NaiveDate>,
    /// Last date to keep (YYYY-MM-DD).
    #[arg(long)]
    to: Option<NaiveDate>,
    /// single, average or both [default: both].
    #[arg(long)]
    linkage: Option<String>,
    /// Bootstrap replicas [default: 1000].
    #[arg(long)]
    replicas: Option<usize>,
    /// Bootstrap seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: $FXTREE_OUT or fxtree-out].
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Comma-separated subset of dot,newick,json,csv [default: all].
    #[arg(long)]
    formats: Option<String>,
    /// List single-linkage clusters cut at this distance.
    #[arg(long)]
    threshold: Option<f64>,
    /// Carry the last quote forward over missing cells instead of dropping dates.
    #[arg(long)]
    forward_fill: bool,
    /// Bootstrap worker threads; 1 runs serially.
    #[arg(long)]
    threads: Option<usize>,
    /// Write Newick branch lengths instead of merge-height tags.
    #[arg(long)]
    newick_lengths: bool,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Path to a report.json written by `analyze`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, env = OUT_DIR_ENV, default_value = fxtree_cli::DEFAULT_OUT_DIR)]
    out: PathBuf,
    /// Comma-separated subset of dot,newick,csv.
    #[arg(long, default_value = "dot,newick,csv")]
    formats: String,
    #[arg(long)]
    newick_lengths: bool,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let formats = match &self.formats {
            Some(s) => Some(parse_formats(s)?.iter().map(Format::to_string).collect()),
            None => None,
        };
        let flags = FileConfig {
            input: self.input,
            base: self.base,
            numeraire: self.numeraire,
            from: self.from,
            to: self.to,
            linkage: self.linkage,
            replicas: self.replicas,
            seed: self.seed,
            out: self.out,
            formats,
            threshold: self.threshold,
            forward_fill: self.forward_fill.then_some(true),
            threads: self.threads,
            newick_lengths: self.newick_lengths.then_some(true),
        };
        file.resolve(flags)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let cfg = args.resolve()?;
            let (report, written) = fxtree_cli::run_analyze(&cfg)?;
            print!("{}", report.summary());
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Matrix(args) => {
            let cfg = args.resolve()?;
            let (_, dm, written) = fxtree_cli::run_matrix(&cfg)?;
            println!("{} currencies", dm.len());
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Export(args) => {
            let formats = parse_formats(&args.formats)?;
            let style = if args.newick_lengths {
                NewickStyle::BranchLengths
            } else {
                NewickStyle::HeightTags
            };
            let (_, written) = fxtree_cli::run_export(&args.report, &args.out, &formats, style)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
