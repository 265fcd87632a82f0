//! Link-log ingestion: line parsing, crawl sessionization and yearly
//! snapshot selection.
//!
//! A link file holds `crawl_unix_seconds<TAB>source_url<TAB>target_url`
//! lines. Records are grouped per source third-level domain into sessions:
//! a new session starts whenever the gap to the previous record exceeds the
//! gap parameter (1000 s by default, a gap of exactly 1000 s stays in the
//! session). Each session counts hyperlinks per target domain, and each year
//! keeps, for every ordered domain pair, the largest count any session of
//! that year produced.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::ops::Range;
use std::str::FromStr;

use chrono::{DateTime, Datelike};
use thiserror::Error;

use crate::domain::{normalized_host, parse_domain_key, DomainError, DomainKey, SuffixPolicy};
use crate::snapshot::YearSnapshot;

pub const DEFAULT_GAP_SECONDS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("malformed line: {0}")]
    MalformedLine(&'static str),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {source}")]
    Line { line: u64, source: LineError },
    #[error("records are not sorted by crawl time (index {0})")]
    UnsortedInput(usize),
    #[error("records come from more than one source domain")]
    MixedSources,
    #[error("gap must be positive")]
    ZeroGap,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRecord {
    pub crawl_time: u64,
    pub source: DomainKey,
    pub target: DomainKey,
}

fn parse_time(field: &str) -> Result<u64, LineError> {
    let secs: u64 = field.parse().map_err(|_| LineError::MalformedLine("crawl time is not a non-negative integer"))?;
    i64::try_from(secs)
        .ok()
        .and_then(|s| DateTime::from_timestamp(s, 0))
        .ok_or(LineError::MalformedLine("crawl time out of range"))?;
    Ok(secs)
}

fn split_fields(line: &str) -> Result<(&str, &str, &str), LineError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut fields = line.split('\t');
    match (fields.next(), fields.next(), fields.next(), fields.next()) {
        (Some(t), Some(s), Some(d), None) => Ok((t, s, d)),
        _ => Err(LineError::MalformedLine("expected three tab-separated fields")),
    }
}

/// Parses one `time<TAB>source_url<TAB>target_url` line.
pub fn parse_link_line(line: &str, policy: &SuffixPolicy) -> Result<LinkRecord, LineError> {
    let (time, source, target) = split_fields(line)?;
    let crawl_time = parse_time(time)?;
    let source = parse_domain_key(source, policy)?;
    let target = parse_domain_key(target, policy)?;
    if source.third_level() == target.third_level() {
        return Err(LineError::SelfLoop(source.into_third_level()));
    }
    Ok(LinkRecord { crawl_time, source, target })
}

/// UTC calendar year of a unix timestamp.
pub fn year_of(unix_seconds: u64) -> i32 {
    i64::try_from(unix_seconds)
        .ok()
        .and_then(|s| DateTime::from_timestamp(s, 0))
        .map(|t| t.year())
        .expect("timestamps are range-checked on parse")
}

/// Chained grouping of sorted timestamps.
fn session_ranges(times: impl Iterator<Item = u64>, gap: u64) -> Vec<Range<usize>> {
    let mut ranges = Vec::new();
    let mut start = 0;
    let mut prev = None;
    let mut len = 0;
    for (i, t) in times.enumerate() {
        if let Some(p) = prev {
            if t - p > gap {
                ranges.push(start..i);
                start = i;
            }
        }
        prev = Some(t);
        len = i + 1;
    }
    if len > start {
        ranges.push(start..len);
    }
    ranges
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub source_domain: String,
    pub start_time: u64,
    pub end_time: u64,
    pub edge_weights: BTreeMap<String, u64>,
}

impl Session {
    pub fn total_weight(&self) -> u64 {
        self.edge_weights.values().sum()
    }
}

/// Splits one source domain's time-sorted records into crawl sessions.
pub fn sessionize(records: &[LinkRecord], gap_seconds: u64) -> Result<Vec<Session>, IngestError> {
    if gap_seconds == 0 {
        return Err(IngestError::ZeroGap);
    }
    if let Some(i) = records.windows(2).position(|w| w[1].crawl_time < w[0].crawl_time) {
        return Err(IngestError::UnsortedInput(i + 1));
    }
    if records.windows(2).any(|w| w[0].source.third_level() != w[1].source.third_level()) {
        return Err(IngestError::MixedSources);
    }
    let ranges = session_ranges(records.iter().map(|r| r.crawl_time), gap_seconds);
    Ok(ranges
        .into_iter()
        .map(|range| {
            let slice = &records[range];
            let mut edge_weights = BTreeMap::new();
            for r in slice {
                *edge_weights.entry(r.target.third_level().to_string()).or_insert(0) += 1;
            }
            Session {
                source_domain: slice[0].source.third_level().to_string(),
                start_time: slice[0].crawl_time,
                end_time: slice[slice.len() - 1].crawl_time,
                edge_weights,
            }
        })
        .collect())
}

/// How a year's snapshot is chosen among that year's sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YearSelect {
    /// Every ordered pair keeps its largest count over all sessions.
    #[default]
    PerPairMax,
    /// Every source keeps the one session with the most hyperlinks
    /// (earliest on ties).
    BestSession,
}

impl FromStr for YearSelect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-pair-max" => Ok(Self::PerPairMax),
            "best-session" => Ok(Self::BestSession),
            other => Err(format!("unknown year selection {other:?}")),
        }
    }
}

impl fmt::Display for YearSelect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerPairMax => "per-pair-max",
            Self::BestSession => "best-session",
        })
    }
}

/// Total, start time and per-target weights of a source's best session.
type BestSession<K> = (u64, u64, Vec<(K, u64)>);

/// Accumulates the selected edge weights of one year, keyed by any node type.
struct YearSelector<K> {
    mode: YearSelect,
    pairs: BTreeMap<(K, K), u64>,
    best: BTreeMap<K, BestSession<K>>,
}

impl<K: Ord + Clone> YearSelector<K> {
    fn new(mode: YearSelect) -> Self {
        Self { mode, pairs: BTreeMap::new(), best: BTreeMap::new() }
    }

    fn add(&mut self, source: &K, start: u64, weights: Vec<(K, u64)>) {
        match self.mode {
            YearSelect::PerPairMax => {
                for (target, w) in weights {
                    let slot = self.pairs.entry((source.clone(), target)).or_insert(0);
                    *slot = (*slot).max(w);
                }
            }
            YearSelect::BestSession => {
                let total = weights.iter().map(|(_, w)| w).sum();
                match self.best.get(source) {
                    Some((best_total, best_start, _))
                        if (*best_total, std::cmp::Reverse(*best_start)) >= (total, std::cmp::Reverse(start)) => {}
                    _ => {
                        self.best.insert(source.clone(), (total, start, weights));
                    }
                }
            }
        }
    }

    fn finish(self) -> BTreeMap<(K, K), u64> {
        match self.mode {
            YearSelect::PerPairMax => self.pairs,
            YearSelect::BestSession => self
                .best
                .into_iter()
                .flat_map(|(source, (_, _, weights))| weights.into_iter().map(move |(t, w)| ((source.clone(), t), w)))
                .collect(),
        }
    }
}

/// Builds one year's snapshot from the sessions that started in it.
pub fn select_year_snapshot(year: i32, sessions: &[Session], mode: YearSelect) -> YearSnapshot {
    debug_assert!(sessions.iter().all(|s| year_of(s.start_time) == year));
    let mut selector = YearSelector::new(mode);
    for s in sessions {
        let weights = s.edge_weights.iter().map(|(t, w)| (t.clone(), *w)).collect();
        selector.add(&s.source_domain, s.start_time, weights);
    }
    YearSnapshot::from_parts(year, selector.finish(), BTreeMap::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestConfig {
    pub gap_seconds: u64,
    pub year_select: YearSelect,
    pub strict: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { gap_seconds: DEFAULT_GAP_SECONDS, year_select: YearSelect::PerPairMax, strict: false }
    }
}

/// Counts of what happened to every input line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestSummary {
    pub lines: u64,
    pub blank: u64,
    pub records: u64,
    pub self_loops: u64,
    pub malformed_lines: u64,
    pub malformed_urls: u64,
    pub out_of_scope: u64,
    pub unknown_sld: u64,
}

impl IngestSummary {
    pub fn skipped(&self) -> u64 {
        self.self_loops + self.malformed_lines + self.malformed_urls + self.out_of_scope + self.unknown_sld
    }

    fn count(&mut self, err: &LineError) {
        match err {
            LineError::MalformedLine(_) => self.malformed_lines += 1,
            LineError::SelfLoop(_) => self.self_loops += 1,
            LineError::Domain(DomainError::MalformedUrl { .. }) => self.malformed_urls += 1,
            LineError::Domain(DomainError::OutOfScopeTld { .. }) => self.out_of_scope += 1,
            LineError::Domain(DomainError::UnknownSld { .. }) => self.unknown_sld += 1,
        }
    }

    fn add(&mut self, other: &IngestSummary) {
        self.lines += other.lines;
        self.blank += other.blank;
        self.records += other.records;
        self.self_loops += other.self_loops;
        self.malformed_lines += other.malformed_lines;
        self.malformed_urls += other.malformed_urls;
        self.out_of_scope += other.out_of_scope;
        self.unknown_sld += other.unknown_sld;
    }

    pub fn fields(&self) -> [(&'static str, u64); 9] {
        [
            ("lines", self.lines),
            ("records", self.records),
            ("skipped", self.skipped()),
            ("self_loops", self.self_loops),
            ("malformed_lines", self.malformed_lines),
            ("malformed_urls", self.malformed_urls),
            ("out_of_scope", self.out_of_scope),
            ("unknown_sld", self.unknown_sld),
            ("blank", self.blank),
        ]
    }
}

impl fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.fields() {
            writeln!(f, "{name}\t{value}")?;
        }
        Ok(())
    }
}

/// Parsed link records of one input shard, grouped by source domain.
///
/// Shards built from any split of the input lines merge into the same
/// multiset of records, so sessionization after [`LinkAccumulator::merge`]
/// sees exactly what a single pass over the whole input would.
#[derive(Debug, Clone)]
pub struct LinkAccumulator {
    policy: SuffixPolicy,
    config: IngestConfig,
    names: Vec<String>,
    ids: HashMap<String, u32>,
    by_source: Vec<Vec<(u64, u32)>>,
    summary: IngestSummary,
}

impl LinkAccumulator {
    pub fn new(policy: SuffixPolicy, config: IngestConfig) -> Self {
        Self {
            policy,
            config,
            names: Vec::new(),
            ids: HashMap::new(),
            by_source: Vec::new(),
            summary: IngestSummary::default(),
        }
    }

    pub fn summary(&self) -> &IngestSummary {
        &self.summary
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = u32::try_from(self.names.len()).expect("fewer than 2^32 domains");
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        self.by_source.push(Vec::new());
        id
    }

    fn third_level_of(&self, url: &str) -> Result<String, LineError> {
        let host = normalized_host(url)?;
        let (third, _) = self.policy.split_host(&host)?;
        Ok(third.to_string())
    }

    fn parse(&self, line: &str) -> Result<(u64, String, String), LineError> {
        let (time, source, target) = split_fields(line)?;
        let time = parse_time(time)?;
        let source = self.third_level_of(source)?;
        let target = self.third_level_of(target)?;
        if source == target {
            return Err(LineError::SelfLoop(source));
        }
        Ok((time, source, target))
    }

    /// Adds one line. Bad lines are counted; in strict mode they also fail.
    pub fn push_line(&mut self, line: &str) -> Result<(), IngestError> {
        self.summary.lines += 1;
        if line.trim().is_empty() {
            self.summary.blank += 1;
            return Ok(());
        }
        match self.parse(line) {
            Ok((time, source, target)) => {
                let s = self.intern(&source);
                let t = self.intern(&target);
                self.by_source[s as usize].push((time, t));
                self.summary.records += 1;
                Ok(())
            }
            Err(err) => {
                self.summary.count(&err);
                if self.config.strict {
                    Err(IngestError::Line { line: self.summary.lines, source: err })
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn push_record(&mut self, record: &LinkRecord) {
        let s = self.intern(record.source.third_level());
        let t = self.intern(record.target.third_level());
        self.by_source[s as usize].push((record.crawl_time, t));
        self.summary.lines += 1;
        self.summary.records += 1;
    }

    pub fn read<R: BufRead>(&mut self, mut input: R) -> Result<(), IngestError> {
        let mut line = String::new();
        loop {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Ok(());
            }
            self.push_line(line.strip_suffix('\n').unwrap_or(&line))?;
        }
    }

    /// Folds another shard into this one.
    pub fn merge(&mut self, other: LinkAccumulator) {
        let remap: Vec<u32> = other.names.iter().map(|n| self.intern(n)).collect();
        for (src, recs) in other.by_source.into_iter().enumerate() {
            let dst = &mut self.by_source[remap[src] as usize];
            dst.extend(recs.into_iter().map(|(t, target)| (t, remap[target as usize])));
        }
        self.summary.add(&other.summary);
    }

    /// Sessionizes every source and selects one snapshot per year.
    pub fn finish(self) -> IngestOutput {
        let gap = self.config.gap_seconds.max(1);
        let mut years: BTreeMap<i32, YearSelector<u32>> = BTreeMap::new();
        for (src, mut recs) in self.by_source.into_iter().enumerate() {
            if recs.is_empty() {
                continue;
            }
            let src = src as u32;
            recs.sort_unstable();
            for range in session_ranges(recs.iter().map(|r| r.0), gap) {
                let start = recs[range.start].0;
                let mut targets: Vec<u32> = recs[range].iter().map(|r| r.1).collect();
                targets.sort_unstable();
                let mut weights: Vec<(u32, u64)> = Vec::new();
                for t in targets {
                    match weights.last_mut() {
                        Some((last, w)) if *last == t => *w += 1,
                        _ => weights.push((t, 1)),
                    }
                }
                years
                    .entry(year_of(start))
                    .or_insert_with(|| YearSelector::new(self.config.year_select))
                    .add(&src, start, weights);
            }
        }
        let names = self.names;
        let snapshots = years
            .into_iter()
            .map(|(year, selector)| {
                let edges = selector
                    .finish()
                    .into_iter()
                    .map(|((s, t), w)| ((names[s as usize].clone(), names[t as usize].clone()), w))
                    .collect();
                (year, YearSnapshot::from_parts(year, edges, BTreeMap::new()))
            })
            .collect();
        IngestOutput { snapshots, summary: self.summary }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOutput {
    pub snapshots: BTreeMap<i32, YearSnapshot>,
    pub summary: IngestSummary,
}

impl IngestOutput {
    /// Attaches `(year, domain, pages)` node-list entries. Years without
    /// links get a snapshot holding only page counts.
    pub fn attach_node_pages(&mut self, entries: impl IntoIterator<Item = (i32, String, u64)>) {
        let mut by_year: BTreeMap<i32, Vec<(String, u64)>> = BTreeMap::new();
        for (year, name, pages) in entries {
            by_year.entry(year).or_default().push((name, pages));
        }
        for (year, pages) in by_year {
            let snap = self.snapshots.remove(&year).unwrap_or_else(|| YearSnapshot::empty(year));
            self.snapshots.insert(year, snap.with_node_pages(pages));
        }
    }
}

/// Convenience wrapper: ingest a whole reader in one shard.
pub fn ingest_reader<R: BufRead>(
    input: R,
    policy: &SuffixPolicy,
    config: IngestConfig,
) -> Result<IngestOutput, IngestError> {
    let mut acc = LinkAccumulator::new(policy.clone(), config);
    acc.read(input)?;
    Ok(acc.finish())
}
