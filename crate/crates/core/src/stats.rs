//! Second-level-domain statistics of a snapshot: node counts and shares,
//! within-SLD links per node, and SLD-to-SLD flow matrices.
//!
//! A node is any third-level domain that appears as an edge endpoint or in
//! the snapshot's page counts. Names under no registered SLD are grouped in
//! the [`UNREGISTERED_SLD`](crate::domain::UNREGISTERED_SLD) row.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::SuffixPolicy;
use crate::snapshot::YearSnapshot;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("SLD {0:?} is not registered in the policy")]
    UnknownSld(String),
}

/// Whether link totals sum hyperlink weights or count distinct domain pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkCount {
    #[default]
    Weighted,
    Distinct,
}

impl LinkCount {
    fn of(self, weight: u64) -> u64 {
        match self {
            Self::Weighted => weight,
            Self::Distinct => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SldCount {
    pub sld: String,
    pub node_count: u64,
    /// `node_count / total`, or 0 when the snapshot has no nodes.
    pub share: f64,
}

/// One year of the node-count series.
#[derive(Debug, Clone, PartialEq)]
pub struct SldSeriesRow {
    pub year: i32,
    pub total_nodes: u64,
    pub counts: Vec<SldCount>,
}

impl SldSeriesRow {
    /// False when there are no nodes and the shares are placeholders.
    pub fn shares_defined(&self) -> bool {
        self.total_nodes > 0
    }

    pub fn count(&self, sld: &str) -> u64 {
        self.counts.iter().find(|c| c.sld == sld).map_or(0, |c| c.node_count)
    }
}

fn nodes_per_sld(snapshot: &YearSnapshot, policy: &SuffixPolicy) -> BTreeMap<String, u64> {
    let mut counts: BTreeMap<String, u64> = policy.registered_slds().iter().map(|s| (s.clone(), 0)).collect();
    for node in snapshot.nodes() {
        *counts.entry(policy.sld_of_name(node).to_string()).or_insert(0) += 1;
    }
    counts
}

/// Node count and share of every registered SLD (plus the unregistered
/// row when it is non-empty).
pub fn node_counts_by_sld(snapshot: &YearSnapshot, policy: &SuffixPolicy) -> SldSeriesRow {
    let counts = nodes_per_sld(snapshot, policy);
    let total: u64 = counts.values().sum();
    let counts = counts
        .into_iter()
        .map(|(sld, node_count)| SldCount {
            share: if total > 0 { node_count as f64 / total as f64 } else { 0.0 },
            sld,
            node_count,
        })
        .collect();
    SldSeriesRow { year: snapshot.year(), total_nodes: total, counts }
}

/// Links between nodes of `sld`, divided by the SLD's node count.
pub fn within_sld_links_per_node(
    snapshot: &YearSnapshot,
    policy: &SuffixPolicy,
    sld: &str,
    count: LinkCount,
) -> Result<f64, StatsError> {
    if !policy.is_registered(sld) {
        return Err(StatsError::UnknownSld(sld.to_string()));
    }
    let nodes = snapshot.nodes().into_iter().filter(|n| policy.sld_of_name(n) == sld).count();
    if nodes == 0 {
        return Ok(0.0);
    }
    let links: u64 = snapshot
        .edges()
        .iter()
        .filter(|((s, t), _)| policy.sld_of_name(s) == sld && policy.sld_of_name(t) == sld)
        .map(|(_, &w)| count.of(w))
        .sum();
    Ok(links as f64 / nodes as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowCell {
    pub source_sld: String,
    pub target_sld: String,
    pub absolute: u64,
    /// `absolute` divided by the target SLD's node count.
    pub normalized: f64,
    /// Set when the target SLD has no nodes and `normalized` is a placeholder 0.
    pub empty_target: bool,
}

impl FlowCell {
    pub fn is_diagonal(&self) -> bool {
        self.source_sld == self.target_sld
    }
}

/// Link totals between SLDs, sorted by (source, target).
///
/// With `include_self == false` the diagonal is left out of the absolute
/// view but kept in the normalized view.
#[derive(Debug, Clone, PartialEq)]
pub struct SldFlowMatrix {
    pub year: i32,
    pub include_self: bool,
    pub cells: Vec<FlowCell>,
}

impl SldFlowMatrix {
    pub fn absolute_view(&self) -> impl Iterator<Item = &FlowCell> {
        self.cells.iter().filter(move |c| self.include_self || !c.is_diagonal())
    }

    pub fn normalized_view(&self) -> impl Iterator<Item = &FlowCell> {
        self.cells.iter()
    }

    pub fn absolute_total(&self) -> u64 {
        self.absolute_view().map(|c| c.absolute).sum()
    }

    pub fn cell(&self, source: &str, target: &str) -> Option<&FlowCell> {
        self.cells.iter().find(|c| c.source_sld == source && c.target_sld == target)
    }
}

pub fn inter_sld_flows(
    snapshot: &YearSnapshot,
    policy: &SuffixPolicy,
    include_self: bool,
    count: LinkCount,
) -> SldFlowMatrix {
    let nodes = nodes_per_sld(snapshot, policy);
    let mut totals: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for ((s, t), &w) in snapshot.edges() {
        *totals.entry((policy.sld_of_name(s), policy.sld_of_name(t))).or_insert(0) += count.of(w);
    }
    let cells = totals
        .into_iter()
        .map(|((source, target), absolute)| {
            let size = nodes.get(target).copied().unwrap_or(0);
            FlowCell {
                source_sld: source.to_string(),
                target_sld: target.to_string(),
                absolute,
                normalized: if size > 0 { absolute as f64 / size as f64 } else { 0.0 },
                empty_target: size == 0,
            }
        })
        .collect();
    SldFlowMatrix { year: snapshot.year(), include_self, cells }
}
