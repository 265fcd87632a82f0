//! Tab-separated input files and the CSV / GraphML artifacts built from
//! analysis results.
//!
//! Inputs skip blank lines and `#` comments. Floats are written in Rust's
//! shortest round-trip form, so equal results give byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::gravity::{GeoLink, GeoPoint, GravityFit, GravitySeries};
use crate::metrics::{CentralityTable, LeagueCorrelation, Measure, ModularityResult, Partition, RankingTable};
use crate::snapshot::YearSnapshot;
use crate::stats::{SldFlowMatrix, SldSeriesRow};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: {key:?} listed twice")]
    Duplicate { line: usize, key: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn parse_err<T>(line: usize, reason: impl Into<String>) -> Result<T, TableError> {
    Err(TableError::Parse { line, reason: reason.into() })
}

/// Yields `(line number, fields)` for every data line.
fn records<R: BufRead>(input: R, arity: usize) -> impl Iterator<Item = Result<(usize, Vec<String>), TableError>> {
    input.lines().enumerate().filter_map(move |(i, line)| {
        let n = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            return None;
        }
        let fields: Vec<String> = trimmed.split('\t').map(|f| f.trim().to_string()).collect();
        if fields.len() != arity {
            return Some(parse_err(n, format!("expected {arity} tab-separated fields, got {}", fields.len())));
        }
        Some(Ok((n, fields)))
    })
}

fn number<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T, TableError> {
    field.parse().or_else(|_| parse_err(line, format!("{what} {field:?} is not valid")))
}

/// `domain<TAB>group_label`
pub fn read_partition<R: BufRead>(input: R) -> Result<Partition, TableError> {
    let mut partition = Partition::new();
    for rec in records(input, 2) {
        let (line, mut f) = rec?;
        let label = f.pop().expect("arity 2");
        let node = f.pop().expect("arity 2").to_ascii_lowercase();
        if partition.insert(node.clone(), label).is_some() {
            return Err(TableError::Duplicate { line, key: node });
        }
    }
    Ok(partition)
}

/// `domain<TAB>rank`, ranks positive; ties allowed.
pub fn read_ranking<R: BufRead>(input: R) -> Result<RankingTable, TableError> {
    let mut ranking = RankingTable::new();
    for rec in records(input, 2) {
        let (line, f) = rec?;
        let rank: u32 = number(line, &f[1], "rank")?;
        if rank == 0 {
            return parse_err(line, "ranks start at 1");
        }
        let node = f[0].to_ascii_lowercase();
        if ranking.insert(node.clone(), rank).is_some() {
            return Err(TableError::Duplicate { line, key: node });
        }
    }
    Ok(ranking)
}

/// `domain<TAB>lat_degrees<TAB>lon_degrees`
pub fn read_geo<R: BufRead>(input: R) -> Result<BTreeMap<String, GeoPoint>, TableError> {
    let mut geo = BTreeMap::new();
    for rec in records(input, 3) {
        let (line, f) = rec?;
        let lat: f64 = number(line, &f[1], "latitude")?;
        let lon: f64 = number(line, &f[2], "longitude")?;
        let point = GeoPoint::new(lat, lon).or_else(|e| parse_err(line, e.to_string()))?;
        let node = f[0].to_ascii_lowercase();
        if geo.insert(node.clone(), point).is_some() {
            return Err(TableError::Duplicate { line, key: node });
        }
    }
    Ok(geo)
}

/// `year<TAB>domain<TAB>page_count`
pub fn read_node_pages<R: BufRead>(input: R) -> Result<Vec<(i32, String, u64)>, TableError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rec in records(input, 3) {
        let (line, f) = rec?;
        let year: i32 = number(line, &f[0], "year")?;
        let pages: u64 = number(line, &f[2], "page count")?;
        let node = f[1].to_ascii_lowercase();
        if !seen.insert((year, node.clone())) {
            return Err(TableError::Duplicate { line, key: node });
        }
        out.push((year, node, pages));
    }
    Ok(out)
}

/// One domain per line; any further tab-separated columns are ignored.
pub fn read_node_list<R: BufRead>(input: R) -> Result<BTreeSet<String>, TableError> {
    let mut nodes = BTreeSet::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let first = line.split('\t').next().unwrap_or("").trim();
        if first.is_empty() || first.starts_with('#') {
            continue;
        }
        if !nodes.insert(first.to_ascii_lowercase()) {
            return Err(TableError::Duplicate { line: i + 1, key: first.to_string() });
        }
    }
    Ok(nodes)
}

pub fn write_geo<W: Write>(geo: &BTreeMap<String, GeoPoint>, mut out: W) -> io::Result<()> {
    for (node, p) in geo {
        writeln!(out, "{node}\t{}\t{}", p.lat(), p.lon())?;
    }
    out.flush()
}

pub fn write_partition<W: Write>(partition: &Partition, mut out: W) -> io::Result<()> {
    for (node, label) in partition.iter() {
        writeln!(out, "{node}\t{label}")?;
    }
    out.flush()
}

fn csv_writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>, TableError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// `year,sld,node_count,share`; years without nodes have no defined shares
/// and are left out.
pub fn write_sld_series<W: Write>(rows: &[SldSeriesRow], out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["year", "sld", "node_count", "share"])?;
    for row in rows.iter().filter(|r| r.shares_defined()) {
        for c in &row.counts {
            w.write_record([row.year.to_string(), c.sld.clone(), c.node_count.to_string(), num(c.share)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `source_sld,target_sld,absolute,normalized`. Diagonal `absolute` is
/// blank when self-flows are excluded.
pub fn write_flows<W: Write>(matrix: &SldFlowMatrix, out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["source_sld", "target_sld", "absolute", "normalized"])?;
    for c in matrix.normalized_view() {
        let absolute = if matrix.include_self || !c.is_diagonal() { c.absolute.to_string() } else { String::new() };
        let normalized = if c.empty_target { String::new() } else { num(c.normalized) };
        w.write_record([c.source_sld.clone(), c.target_sld.clone(), absolute, normalized])?;
    }
    w.flush()?;
    Ok(())
}

/// `year,sld,links_per_node`
pub fn write_within_sld<W: Write>(rows: &[(i32, String, f64)], out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["year", "sld", "links_per_node"])?;
    for (year, sld, v) in rows {
        w.write_record([year.to_string(), sld.clone(), num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_centrality<W: Write>(table: &CentralityTable, out: W) -> Result<(), TableError> {
    let header: Vec<&str> = std::iter::once("node").chain(Measure::ALL.iter().map(|m| m.name())).collect();
    let mut w = csv_writer(out, &header)?;
    for (node, row) in table.iter() {
        let mut rec = vec![node.to_string()];
        rec.extend(row.iter().map(|v| num(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `measure,rho,n_overlap`; `rho` is `NA` when a measure is constant.
pub fn write_correlations<W: Write>(corr: &LeagueCorrelation, out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["measure", "rho", "n_overlap"])?;
    for (m, rho) in &corr.rho {
        w.write_record([m.name().to_string(), rho.map_or_else(|| "NA".to_string(), num), corr.n_overlap.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per group and a closing `all` row carrying Q.
pub fn write_modularity<W: Write>(result: &ModularityResult, out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["scope", "members", "internal_weight", "expected_weight", "q"])?;
    for g in &result.groups {
        w.write_record([
            g.label.clone(),
            g.members.to_string(),
            num(g.internal_weight),
            num(g.expected_weight),
            num(g.q(result.m)),
        ])?;
    }
    let members: usize = result.groups.iter().map(|g| g.members).sum();
    let internal: f64 = result.groups.iter().map(|g| g.internal_weight).sum();
    let expected: f64 = result.groups.iter().map(|g| g.expected_weight).sum();
    w.write_record(["all".to_string(), members.to_string(), num(internal), num(expected), num(result.q)])?;
    w.flush()?;
    Ok(())
}

/// `group,members,density`
pub fn write_density<W: Write>(rows: &[(String, usize, f64)], out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["group", "members", "density"])?;
    for (group, members, d) in rows {
        w.write_record([group.clone(), members.to_string(), num(*d)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gravity_series<W: Write>(series: &GravitySeries, out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["mean_d_km", "mean_sigma"])?;
    for &(d, s) in &series.points {
        w.write_record([num(d), num(s)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gravity_fit<W: Write>(fit: &GravityFit, out: W) -> Result<(), TableError> {
    let mut w = csv_writer(out, &["a", "std_error", "n_points", "window", "d_min_km", "d_max_km", "intercept"])?;
    w.write_record([
        num(fit.a),
        num(fit.std_error),
        fit.n_points.to_string(),
        fit.window.to_string(),
        num(fit.d_min_km),
        num(fit.d_max_km),
        num(fit.intercept),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_geo_links<W: Write>(links: &[GeoLink], out: W) -> Result<(), TableError> {
    let mut w =
        csv_writer(out, &["source", "target", "source_lat", "source_lon", "target_lat", "target_lon", "sigma"])?;
    for l in links {
        w.write_record([
            l.source.clone(),
            l.target.clone(),
            num(l.source_point.lat()),
            num(l.source_point.lon()),
            num(l.target_point.lat()),
            num(l.target_point.lon()),
            num(l.sigma),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Directed GraphML of the subgraph induced by `nodes` (all snapshot nodes
/// when `None`), with `weight` on edges and optional `group` on nodes.
pub fn write_graphml<W: Write>(
    snapshot: &YearSnapshot,
    nodes: Option<&BTreeSet<String>>,
    partition: Option<&Partition>,
    mut out: W,
) -> io::Result<()> {
    let keep: BTreeSet<&str> = match nodes {
        Some(set) => set.iter().map(String::as_str).collect(),
        None => snapshot.nodes(),
    };
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#)?;
    writeln!(out, r#"  <key id="group" for="node" attr.name="group" attr.type="string"/>"#)?;
    writeln!(out, r#"  <key id="weight" for="edge" attr.name="weight" attr.type="long"/>"#)?;
    writeln!(out, r#"  <graph id="y{}" edgedefault="directed">"#, snapshot.year())?;
    for node in &keep {
        let id = xml_escape(node);
        match partition {
            Some(p) => writeln!(
                out,
                r#"    <node id="{id}"><data key="group">{}</data></node>"#,
                xml_escape(p.group_of(node))
            )?,
            None => writeln!(out, r#"    <node id="{id}"/>"#)?,
        }
    }
    for ((s, t), w) in snapshot.edges() {
        if keep.contains(s.as_str()) && keep.contains(t.as_str()) {
            writeln!(
                out,
                r#"    <edge source="{}" target="{}"><data key="weight">{w}</data></edge>"#,
                xml_escape(s),
                xml_escape(t)
            )?;
        }
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")?;
    out.flush()
}
