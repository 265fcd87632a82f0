use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use super::graph::InducedGraph;
use super::spearman::{average_ranks, spearman_rank_correlation};
use super::MetricsError;
use crate::snapshot::YearSnapshot;

/// The ten per-node measures, in table column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    InDegree,
    OutDegree,
    InStrength,
    OutStrength,
    PageRank,
    Betweenness,
    Closeness,
    Harmonic,
    Hub,
    Authority,
}

impl Measure {
    pub const ALL: [Measure; 10] = [
        Measure::InDegree,
        Measure::OutDegree,
        Measure::InStrength,
        Measure::OutStrength,
        Measure::PageRank,
        Measure::Betweenness,
        Measure::Closeness,
        Measure::Harmonic,
        Measure::Hub,
        Measure::Authority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::InDegree => "in_degree",
            Measure::OutDegree => "out_degree",
            Measure::InStrength => "in_strength",
            Measure::OutStrength => "out_strength",
            Measure::PageRank => "pagerank",
            Measure::Betweenness => "betweenness",
            Measure::Closeness => "closeness",
            Measure::Harmonic => "harmonic",
            Measure::Hub => "hub",
            Measure::Authority => "authority",
        }
    }

    fn column(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown measure {s:?}"))
    }
}

/// Path length assigned to an edge for betweenness and closeness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeLength {
    /// `1 / weight`: heavier links are shorter.
    #[default]
    InverseWeight,
    Unit,
}

impl EdgeLength {
    fn of(self, weight: f64) -> f64 {
        match self {
            EdgeLength::InverseWeight => 1.0 / weight,
            EdgeLength::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub damping: f64,
    /// Stop once the L1 change between iterates falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self { damping: 0.85, tolerance: 1e-12, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitsConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for HitsConfig {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CentralityOptions {
    pub lengths: EdgeLength,
    pub pagerank: PageRankConfig,
    pub hits: HitsConfig,
}

/// Ten centrality values for every node of an induced subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable {
    pub year: i32,
    nodes: Vec<String>,
    rows: Vec<[f64; 10]>,
}

impl CentralityTable {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn row(&self, node: &str) -> Option<&[f64; 10]> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(node)).ok().map(|i| &self.rows[i])
    }

    pub fn get(&self, node: &str, measure: Measure) -> Option<f64> {
        self.row(node).map(|r| r[measure.column()])
    }

    pub fn column(&self, measure: Measure) -> Vec<f64> {
        self.rows.iter().map(|r| r[measure.column()]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64; 10])> {
        self.nodes.iter().map(String::as_str).zip(&self.rows)
    }
}

/// Ranks with 1 for the largest value, ties averaged.
pub fn rank_descending(values: &[f64]) -> Vec<f64> {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    average_ranks(&negated)
}

/// Computes all ten measures on the subgraph induced by `node_filter`.
pub fn centrality_suite<S: AsRef<str> + Ord>(
    snapshot: &YearSnapshot,
    node_filter: &BTreeSet<S>,
    options: &CentralityOptions,
) -> Result<CentralityTable, MetricsError> {
    if node_filter.is_empty() {
        return Err(MetricsError::EmptyFilter);
    }
    let graph = InducedGraph::new(snapshot, node_filter);
    let n = graph.len();
    let pagerank = pagerank(&graph, &options.pagerank)?;
    let (hub, authority) = hits(&graph, &options.hits)?;
    let betweenness = betweenness(&graph, options.lengths);
    let (closeness, harmonic) = closeness(&graph, options.lengths);
    let rows = (0..n)
        .map(|i| {
            let mut row = [0.0; 10];
            row[Measure::InDegree.column()] = graph.in_edges(i).len() as f64;
            row[Measure::OutDegree.column()] = graph.out_edges(i).len() as f64;
            row[Measure::InStrength.column()] = graph.in_strength(i);
            row[Measure::OutStrength.column()] = graph.out_strength(i);
            row[Measure::PageRank.column()] = pagerank[i];
            row[Measure::Betweenness.column()] = betweenness[i];
            row[Measure::Closeness.column()] = closeness[i];
            row[Measure::Harmonic.column()] = harmonic[i];
            row[Measure::Hub.column()] = hub[i];
            row[Measure::Authority.column()] = authority[i];
            row
        })
        .collect();
    Ok(CentralityTable { year: snapshot.year(), nodes: graph.names().to_vec(), rows })
}

/// Weighted PageRank. Dangling nodes spread their mass uniformly.
fn pagerank(graph: &InducedGraph, config: &PageRankConfig) -> Result<Vec<f64>, MetricsError> {
    let n = graph.len();
    let uniform = 1.0 / n as f64;
    let out: Vec<f64> = (0..n).map(|i| graph.out_strength(i)).collect();
    // Ratios of exact integers round identically under any common scaling.
    let transitions: Vec<(usize, usize, f64)> = graph.edges().map(|(i, j, w)| (i, j, w / out[i])).collect();
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iterations {
        next.fill(0.0);
        for &(i, j, p) in &transitions {
            next[j] += rank[i] * p;
        }
        let dangling: f64 = (0..n).filter(|&i| out[i] == 0.0).map(|i| rank[i]).sum();
        let base = (1.0 - config.damping) * uniform + config.damping * dangling * uniform;
        let mut delta = 0.0;
        for j in 0..n {
            let value = base + config.damping * next[j];
            delta += (value - rank[j]).abs();
            rank[j] = value;
        }
        if delta < config.tolerance {
            return Ok(rank);
        }
    }
    Err(MetricsError::ConvergenceFailure { measure: "pagerank", iterations: config.max_iterations })
}

/// Weighted HITS with L1-normalized hub and authority vectors.
fn hits(graph: &InducedGraph, config: &HitsConfig) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let n = graph.len();
    let max = graph.max_weight();
    if max == 0.0 {
        return Ok((vec![0.0; n], vec![0.0; n]));
    }
    let edges: Vec<(usize, usize, f64)> = graph.edges().map(|(i, j, w)| (i, j, w / max)).collect();
    let normalize = |v: &mut Vec<f64>| {
        let sum: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= sum);
    };
    let mut hub = vec![1.0 / n as f64; n];
    let mut authority = vec![0.0; n];
    for _ in 0..config.max_iterations {
        let mut next_auth = vec![0.0; n];
        for &(i, j, w) in &edges {
            next_auth[j] += w * hub[i];
        }
        normalize(&mut next_auth);
        hub.fill(0.0);
        for &(i, j, w) in &edges {
            hub[i] += w * next_auth[j];
        }
        normalize(&mut hub);
        let delta: f64 = next_auth.iter().zip(&authority).map(|(a, b)| (a - b).abs()).sum();
        authority = next_auth;
        if delta < config.tolerance {
            return Ok((hub, authority));
        }
    }
    Err(MetricsError::ConvergenceFailure { measure: "hits", iterations: config.max_iterations })
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

struct ShortestPaths {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
    /// Settled nodes in non-decreasing distance order.
    order: Vec<usize>,
}

/// Dijkstra from `source` counting shortest paths. With `reverse` the edges
/// are followed backwards, giving distances *to* `source`.
fn shortest_paths(graph: &InducedGraph, source: usize, lengths: EdgeLength, reverse: bool) -> ShortestPaths {
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0; n];
    let mut preds = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::new();
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(Frontier(0.0, source));
    while let Some(Frontier(d, v)) = heap.pop() {
        if settled[v] || d > dist[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        let edges = if reverse { graph.in_edges(v) } else { graph.out_edges(v) };
        for &(w, weight) in edges {
            if settled[w] {
                continue;
            }
            let alt = d + lengths.of(weight);
            if dist[w].is_infinite() || (alt < dist[w] && !same_length(alt, dist[w])) {
                dist[w] = alt;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(Frontier(alt, w));
            } else if same_length(alt, dist[w]) {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    ShortestPaths { dist, sigma, preds, order }
}

/// Brandes betweenness, normalized by `(n-1)(n-2)` for directed graphs.
pub fn betweenness(graph: &InducedGraph, lengths: EdgeLength) -> Vec<f64> {
    let n = graph.len();
    let mut centrality = vec![0.0; n];
    let mut delta = vec![0.0; n];
    for s in 0..n {
        let paths = shortest_paths(graph, s, lengths, false);
        delta.fill(0.0);
        for &w in paths.order.iter().rev() {
            for &v in &paths.preds[w] {
                delta[v] += paths.sigma[v] / paths.sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    if n > 2 {
        let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
        centrality.iter_mut().for_each(|c| *c *= scale);
    }
    centrality
}

/// Incoming closeness (Wasserman-Faust form for unreachable nodes) and
/// incoming harmonic centrality.
fn closeness(graph: &InducedGraph, lengths: EdgeLength) -> (Vec<f64>, Vec<f64>) {
    let n = graph.len();
    let mut closeness = vec![0.0; n];
    let mut harmonic = vec![0.0; n];
    if n < 2 {
        return (closeness, harmonic);
    }
    let others = (n - 1) as f64;
    for u in 0..n {
        let paths = shortest_paths(graph, u, lengths, true);
        let reached: Vec<f64> = paths.order.iter().filter(|&&v| v != u).map(|&v| paths.dist[v]).collect();
        if reached.is_empty() {
            continue;
        }
        let r = reached.len() as f64;
        let total: f64 = reached.iter().sum();
        closeness[u] = (r / others) * (r / total);
        harmonic[u] = reached.iter().map(|d| 1.0 / d).sum::<f64>() / others;
    }
    (closeness, harmonic)
}

/// League positions, 1 for the best-ranked institution.
pub type RankingTable = BTreeMap<String, u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct LeagueCorrelation {
    pub n_overlap: usize,
    pub dropped_from_table: usize,
    pub dropped_from_ranking: usize,
    /// `None` when the measure is constant over the overlapping nodes.
    pub rho: Vec<(Measure, Option<f64>)>,
}

impl LeagueCorrelation {
    pub fn get(&self, measure: Measure) -> Option<f64> {
        self.rho.iter().find(|(m, _)| *m == measure).and_then(|(_, r)| *r)
    }
}

/// Spearman correlation between centrality rank (1 = most central) and
/// league rank. Positive values mean more central nodes rank better.
pub fn rank_centrality_vs_league(
    table: &CentralityTable,
    ranking: &RankingTable,
) -> Result<LeagueCorrelation, MetricsError> {
    let common: Vec<(&[f64; 10], u32)> =
        table.iter().filter_map(|(node, row)| ranking.get(node).map(|&rank| (row, rank))).collect();
    let n = common.len();
    if n < 2 {
        return Err(MetricsError::InsufficientOverlap(n));
    }
    let league: Vec<f64> = common.iter().map(|c| c.1 as f64).collect();
    let rho = Measure::ALL
        .iter()
        .map(|&m| {
            let values: Vec<f64> = common.iter().map(|c| c.0[m.column()]).collect();
            (m, spearman_rank_correlation(&rank_descending(&values), &league).ok())
        })
        .collect();
    Ok(LeagueCorrelation {
        n_overlap: n,
        dropped_from_table: table.nodes().len() - n,
        dropped_from_ranking: ranking.len() - n,
        rho,
    })
}
