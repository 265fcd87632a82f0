mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chronoscope::domain::UnknownSldHandling;
use chronoscope::gravity::{DEFAULT_D_MIN_KM, DEFAULT_WINDOW};
use chronoscope::ingest::{YearSelect, DEFAULT_GAP_SECONDS};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Yearly web-domain link graphs: ingest, statistics, centrality,
/// modularity and gravity-law fits.
#[derive(Debug, Parser)]
#[command(name = "chronoscope", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Suffix policy file (ccTLD line, then one SLD per line). Defaults to
    /// uk with ac.uk, co.uk, gov.uk and org.uk.
    #[arg(long, global = true)]
    pub policy: Option<PathBuf>,
    /// Override the policy's handling of unregistered SLDs.
    #[arg(long, global = true, value_parser = parse_unknown_sld)]
    pub unknown_sld: Option<UnknownSldHandling>,
    /// Directory for output files.
    #[arg(long, global = true, env = "CHRONOSCOPE_OUT", default_value = ".")]
    pub out_dir: PathBuf,
    /// Only process this year (for `synth`, the year to stamp; default 2010).
    #[arg(long, global = true)]
    pub year: Option<i32>,
    /// Fail on the first invalid input line instead of counting it.
    #[arg(long, global = true)]
    pub strict: bool,
}

fn parse_unknown_sld(s: &str) -> Result<UnknownSldHandling, String> {
    s.parse::<UnknownSldHandling>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build yearly snapshots from link log files.
    Ingest(IngestArgs),
    /// SLD node counts, within-SLD links per node and SLD flow matrices.
    Stats(StatsArgs),
    /// Ten centrality measures per node.
    Centrality(CentralityArgs),
    /// Spearman correlation of centrality ranks against a league table.
    Correlate(CorrelateArgs),
    /// Directed weighted modularity of a partition.
    Modularity(ModularityArgs),
    /// Internal link density of each partition group.
    Density(DensityArgs),
    /// Distance-strength series and power-law exponent fit.
    Gravity(GravityArgs),
    /// Generate synthetic inputs with known structure.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// GraphML export of snapshots.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Link files (`time<TAB>source_url<TAB>target_url`); read concurrently
    /// and merged.
    #[arg(required = true)]
    pub links: Vec<PathBuf>,
    /// Optional `year<TAB>domain<TAB>pages` node list.
    #[arg(long)]
    pub node_pages: Option<PathBuf>,
    /// Largest gap in seconds between records of one crawl session.
    #[arg(long, default_value_t = DEFAULT_GAP_SECONDS)]
    pub gap_seconds: u64,
    #[arg(long, default_value_t = YearSelect::PerPairMax, value_parser = parse_year_select)]
    pub year_select: YearSelect,
}

fn parse_year_select(s: &str) -> Result<YearSelect, String> {
    s.parse::<YearSelect>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct SnapshotInputs {
    /// Snapshot files.
    #[arg(required = true)]
    pub snapshots: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub inputs: SnapshotInputs,
    /// Count distinct domain pairs instead of summing link weights.
    #[arg(long)]
    pub distinct: bool,
    /// Keep within-SLD totals in the absolute flow column.
    #[arg(long)]
    pub include_self: bool,
}

#[derive(Debug, Args)]
pub struct CentralityOpts {
    /// Restrict to the subgraph induced by these domains (one per line).
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// Use unit edge lengths for path measures instead of 1/weight.
    #[arg(long)]
    pub unit_lengths: bool,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[command(flatten)]
    pub inputs: SnapshotInputs,
    #[command(flatten)]
    pub opts: CentralityOpts,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub inputs: SnapshotInputs,
    #[command(flatten)]
    pub opts: CentralityOpts,
    /// `domain<TAB>rank` league table.
    #[arg(long)]
    pub ranking: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModularityArgs {
    #[command(flatten)]
    pub inputs: SnapshotInputs,
    /// `domain<TAB>group` file; unlisted domains form the unaffiliated group.
    #[arg(long)]
    pub partition: PathBuf,
    /// Restrict to the subgraph induced by these domains.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub inputs: SnapshotInputs,
    #[arg(long)]
    pub partition: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Symmetrize {
    None,
    Mean,
}

#[derive(Debug, Args)]
pub struct GravityArgs {
    #[command(flatten)]
    pub inputs: SnapshotInputs,
    /// `domain<TAB>lat<TAB>lon` coordinates.
    #[arg(long)]
    pub geo: PathBuf,
    /// Restrict to these domains (defaults to every domain in the geo file).
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_D_MIN_KM)]
    pub d_min_km: f64,
    /// Fit the unsmoothed pairs instead of the moving-average series.
    #[arg(long)]
    pub fit_raw: bool,
    #[arg(long, value_enum, default_value_t = Symmetrize::None)]
    pub symmetrize: Symmetrize,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Gravity-law graph plus the coordinates it was drawn on.
    Gravity(SynthGravityArgs),
    /// Planted-partition graph plus its partition file.
    Partition(SynthPartitionArgs),
    /// Raw link log for the ingest command.
    Links(SynthLinksArgs),
}

#[derive(Debug, Args)]
pub struct SynthGravityArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub n_nodes: usize,
    #[arg(long, default_value_t = 0.28)]
    pub exponent: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// Place nodes in the UK bounding box instead of over the whole sphere.
    #[arg(long)]
    pub uk_box: bool,
}

#[derive(Debug, Args)]
pub struct SynthPartitionArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 121)]
    pub n_nodes: usize,
    #[arg(long, default_value_t = 5)]
    pub groups: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p_intra: f64,
    #[arg(long, default_value_t = 0.1)]
    pub p_inter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct SynthLinksArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub lines: usize,
    #[arg(long, default_value_t = 2000)]
    pub domains: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub inputs: SnapshotInputs,
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// Adds a `group` attribute to every node.
    #[arg(long)]
    pub partition: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = commands::error_kind(&err);
            let message = format!("{err:#}").replace(['\n', '\t'], " ");
            eprintln!("error\t{kind}\t{message}");
            ExitCode::from(1)
        }
    }
}
