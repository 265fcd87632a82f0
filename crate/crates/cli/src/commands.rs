use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use chronoscope::domain::SuffixPolicy;
use chronoscope::gravity::{
    distance_strength_series, export_geo_links, fit_gravity_exponent, normalized_strengths, symmetrize_mean,
};
use chronoscope::ingest::{IngestConfig, LinkAccumulator};
use chronoscope::metrics::{
    centrality_suite, group_internal_density, modularity, rank_centrality_vs_league, CentralityOptions, EdgeLength,
    Partition,
};
use chronoscope::snapshot::YearSnapshot;
use chronoscope::stats::{inter_sld_flows, node_counts_by_sld, within_sld_links_per_node, LinkCount};
use chronoscope::synth::{
    gen_geo_box, gen_geo_sphere, gen_gravity_graph, gen_link_lines, gen_partitioned_graph, planted_partition_of,
    LinkLogSpec, PlantedPartition, SynthSpec,
};
use chronoscope::{tables, Error};

use crate::{
    CentralityOpts, Cli, Command, Global, GravityArgs, IngestArgs, SnapshotInputs, StatsArgs, Symmetrize, SynthCommand,
};

const DEFAULT_SYNTH_YEAR: i32 = 2010;

/// Kind tag for the diagnostic line: the library's own classification when
/// available.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return e.kind();
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return "io";
        }
    }
    "input"
}

/// Lifts a library error into the crate-wide [`Error`] so its kind survives.
fn lib<T, E: Into<Error>>(result: Result<T, E>) -> Result<T> {
    result.map_err(|e| anyhow::Error::new(e.into()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).map_err(Error::from).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn read_with<T, E: Into<Error>>(path: &Path, parse: impl FnOnce(BufReader<File>) -> Result<T, E>) -> Result<T> {
    lib(parse(open(path)?)).with_context(|| format!("reading {}", path.display()))
}

struct Output<'a> {
    dir: &'a Path,
}

impl Output<'_> {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(Error::from).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    fn write<E: Into<Error>>(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>) -> Result<()> {
        let mut out = self.create(name)?;
        lib(f(&mut out)).with_context(|| format!("writing {name}"))?;
        lib(out.flush())
    }
}

fn policy(global: &Global) -> Result<SuffixPolicy> {
    let policy = match &global.policy {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(Error::from).with_context(|| format!("reading {}", path.display()))?;
            lib(SuffixPolicy::parse(&text)).with_context(|| format!("policy {}", path.display()))?
        }
        None => SuffixPolicy::uk_default(),
    };
    Ok(match global.unknown_sld {
        Some(handling) => policy.with_unknown_sld(handling),
        None => policy,
    })
}

/// Loads snapshot files, keeping those that pass the `--year` filter.
fn snapshots(global: &Global, inputs: &SnapshotInputs) -> Result<Vec<YearSnapshot>> {
    let mut by_year = BTreeMap::new();
    for path in &inputs.snapshots {
        let snap = lib(YearSnapshot::read_path(path)).with_context(|| format!("reading {}", path.display()))?;
        if global.year.is_some_and(|y| y != snap.year()) {
            continue;
        }
        let year = snap.year();
        if by_year.insert(year, snap).is_some() {
            bail!("more than one snapshot for year {year}");
        }
    }
    if by_year.is_empty() {
        if let Some(year) = global.year {
            bail!("no snapshot for year {year}");
        }
    }
    Ok(by_year.into_values().collect())
}

fn node_filter(path: Option<&PathBuf>, snapshot: &YearSnapshot) -> Result<BTreeSet<String>> {
    match path {
        Some(p) => read_with(p, tables::read_node_list),
        None => Ok(snapshot.nodes().into_iter().map(String::from).collect()),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let global = &cli.global;
    lib(fs::create_dir_all(&global.out_dir)).with_context(|| format!("creating {}", global.out_dir.display()))?;
    let out = Output { dir: &global.out_dir };
    match &cli.command {
        Command::Ingest(args) => ingest(global, args, &out),
        Command::Stats(args) => stats(global, args, &out),
        Command::Centrality(args) => {
            for snap in snapshots(global, &args.inputs)? {
                let nodes = node_filter(args.opts.nodes.as_ref(), &snap)?;
                let table = lib(centrality_suite(&snap, &nodes, &centrality_options(&args.opts)))?;
                out.write(&format!("centrality_{}.csv", snap.year()), |w| tables::write_centrality(&table, w))?;
            }
            Ok(())
        }
        Command::Correlate(args) => {
            let ranking = read_with(&args.ranking, tables::read_ranking)?;
            for snap in snapshots(global, &args.inputs)? {
                let nodes = node_filter(args.opts.nodes.as_ref(), &snap)?;
                let table = lib(centrality_suite(&snap, &nodes, &centrality_options(&args.opts)))?;
                let corr = lib(rank_centrality_vs_league(&table, &ranking))?;
                out.write(&format!("correlations_{}.csv", snap.year()), |w| tables::write_correlations(&corr, w))?;
            }
            Ok(())
        }
        Command::Modularity(args) => {
            let partition = read_with(&args.partition, tables::read_partition)?;
            for snap in snapshots(global, &args.inputs)? {
                let nodes = node_filter(args.nodes.as_ref(), &snap)?;
                let result = lib(modularity(&snap, &partition, &nodes))?;
                out.write(&format!("modularity_{}.csv", snap.year()), |w| tables::write_modularity(&result, w))?;
            }
            Ok(())
        }
        Command::Density(args) => {
            let partition = read_with(&args.partition, tables::read_partition)?;
            let labels: BTreeSet<&str> = partition.iter().map(|(_, l)| l).collect();
            for snap in snapshots(global, &args.inputs)? {
                let rows = labels
                    .iter()
                    .map(|label| {
                        let members = partition.members(label);
                        let d =
                            lib(group_internal_density(&snap, &members)).with_context(|| format!("group {label}"))?;
                        Ok((label.to_string(), members.len(), d))
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.write(&format!("density_{}.csv", snap.year()), |w| tables::write_density(&rows, w))?;
            }
            Ok(())
        }
        Command::Gravity(args) => gravity(global, args, &out),
        Command::Synth(cmd) => synth(global, cmd, &out),
        Command::Export(args) => {
            let partition = args.partition.as_ref().map(|p| read_with(p, tables::read_partition)).transpose()?;
            let nodes = args.nodes.as_ref().map(|p| read_with(p, tables::read_node_list)).transpose()?;
            for snap in snapshots(global, &args.inputs)? {
                out.write(&format!("graph_{}.graphml", snap.year()), |w| {
                    tables::write_graphml(&snap, nodes.as_ref(), partition.as_ref(), w)
                })?;
            }
            Ok(())
        }
    }
}

fn centrality_options(opts: &CentralityOpts) -> CentralityOptions {
    let lengths = if opts.unit_lengths { EdgeLength::Unit } else { EdgeLength::InverseWeight };
    CentralityOptions { lengths, ..Default::default() }
}

fn ingest(global: &Global, args: &IngestArgs, out: &Output) -> Result<()> {
    let policy = policy(global)?;
    let config = IngestConfig { gap_seconds: args.gap_seconds, year_select: args.year_select, strict: global.strict };
    if config.gap_seconds == 0 {
        return lib(Err(chronoscope::ingest::IngestError::ZeroGap));
    }
    // One accumulator per file, merged in argument order.
    let shards: Vec<Result<LinkAccumulator>> = thread::scope(|scope| {
        let handles: Vec<_> = args
            .links
            .iter()
            .map(|path| {
                let policy = policy.clone();
                scope.spawn(move || -> Result<LinkAccumulator> {
                    let mut acc = LinkAccumulator::new(policy, config);
                    lib(acc.read(open(path)?)).with_context(|| format!("reading {}", path.display()))?;
                    Ok(acc)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ingest worker panicked")).collect()
    });
    let mut merged = LinkAccumulator::new(policy, config);
    for shard in shards {
        merged.merge(shard?);
    }
    let mut output = merged.finish();
    if let Some(path) = &args.node_pages {
        output.attach_node_pages(read_with(path, tables::read_node_pages)?);
    }
    for (year, snap) in &output.snapshots {
        if global.year.is_some_and(|y| y != *year) {
            continue;
        }
        out.write(&format!("snapshot_{year}.tsv"), |w| snap.write_to(w))?;
    }
    out.write("ingest_summary.tsv", |w| write!(w, "{}", output.summary))?;
    print!("{}", output.summary);
    Ok(())
}

fn stats(global: &Global, args: &StatsArgs, out: &Output) -> Result<()> {
    let policy = policy(global)?;
    let count = if args.distinct { LinkCount::Distinct } else { LinkCount::Weighted };
    let snaps = snapshots(global, &args.inputs)?;
    let series: Vec<_> = snaps.iter().map(|s| node_counts_by_sld(s, &policy)).collect();
    out.write("sld_series.csv", |w| tables::write_sld_series(&series, w))?;
    let mut within = Vec::new();
    for (snap, row) in snaps.iter().zip(&series) {
        if !row.shares_defined() {
            continue;
        }
        for sld in policy.registered_slds() {
            within.push((snap.year(), sld.clone(), lib(within_sld_links_per_node(snap, &policy, sld, count))?));
        }
    }
    out.write("within_sld.csv", |w| tables::write_within_sld(&within, w))?;
    for snap in &snaps {
        let flows = inter_sld_flows(snap, &policy, args.include_self, count);
        out.write(&format!("flows_{}.csv", snap.year()), |w| tables::write_flows(&flows, w))?;
    }
    Ok(())
}

fn gravity(global: &Global, args: &GravityArgs, out: &Output) -> Result<()> {
    let geo = read_with(&args.geo, tables::read_geo)?;
    let nodes: BTreeSet<String> = match &args.nodes {
        Some(p) => read_with(p, tables::read_node_list)?,
        None => geo.keys().cloned().collect(),
    };
    for snap in snapshots(global, &args.inputs)? {
        let year = snap.year();
        let mut pairs = lib(normalized_strengths(&snap, &nodes, &geo))?.pairs;
        if args.symmetrize == Symmetrize::Mean {
            pairs = symmetrize_mean(&pairs);
        }
        let series = lib(distance_strength_series(&pairs, args.window, args.d_min_km))?;
        let fit = if args.fit_raw {
            lib(fit_gravity_exponent(&lib(distance_strength_series(&pairs, 1, args.d_min_km))?))?
        } else {
            lib(fit_gravity_exponent(&series))?
        };
        let links = lib(export_geo_links(&pairs, &geo))?;
        out.write(&format!("gravity_series_{year}.csv"), |w| tables::write_gravity_series(&series, w))?;
        out.write(&format!("gravity_fit_{year}.csv"), |w| tables::write_gravity_fit(&fit, w))?;
        out.write(&format!("geo_links_{year}.csv"), |w| tables::write_geo_links(&links, w))?;
    }
    Ok(())
}

fn synth(global: &Global, cmd: &SynthCommand, out: &Output) -> Result<()> {
    let year = global.year.unwrap_or(DEFAULT_SYNTH_YEAR);
    match cmd {
        SynthCommand::Gravity(a) => {
            let geo = if a.uk_box {
                lib(gen_geo_box(a.seed, a.n_nodes, (50.5, 55.5), (-4.5, 1.5)))?
            } else {
                gen_geo_sphere(a.seed, a.n_nodes)
            };
            let spec = SynthSpec { year, ..SynthSpec::gravity(a.seed, a.n_nodes, a.exponent, a.noise) };
            let snap = lib(gen_gravity_graph(&spec, &geo))?;
            out.write(&format!("snapshot_{year}.tsv"), |w| snap.write_to(w))?;
            out.write("geo.tsv", |w| tables::write_geo(&geo, w))
        }
        SynthCommand::Partition(a) => {
            let planted = PlantedPartition { groups: a.groups, p_intra: a.p_intra, p_inter: a.p_inter };
            let spec = SynthSpec { year, noise_scale: a.noise, ..SynthSpec::partitioned(a.seed, a.n_nodes, planted) };
            let snap = lib(gen_partitioned_graph(&spec))?;
            let partition: Partition = lib(planted_partition_of(&spec))?;
            out.write(&format!("snapshot_{year}.tsv"), |w| snap.write_to(w))?;
            out.write("partition.tsv", |w| tables::write_partition(&partition, w))
        }
        SynthCommand::Links(a) => {
            let mut spec = LinkLogSpec::new(a.seed, a.lines);
            spec.n_domains = a.domains;
            if let Some(y) = global.year {
                spec.first_year = y;
            }
            out.write("links.tsv", |w| gen_link_lines(&spec, w))
        }
    }
}
