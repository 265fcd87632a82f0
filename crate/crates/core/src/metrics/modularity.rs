use std::collections::{BTreeMap, BTreeSet};

use super::graph::InducedGraph;
use super::MetricsError;
use crate::snapshot::YearSnapshot;

/// Label of the implicit group holding every node the partition leaves out.
pub const UNAFFILIATED: &str = "unaffiliated";

/// Node to group label. Unlisted nodes belong to [`UNAFFILIATED`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    labels: BTreeMap<String, String>,
}

impl Partition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: impl Into<String>, label: impl Into<String>) -> Option<String> {
        self.labels.insert(node.into(), label.into())
    }

    pub fn group_of(&self, node: &str) -> &str {
        self.labels.get(node).map_or(UNAFFILIATED, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.labels.iter().map(|(n, l)| (n.as_str(), l.as_str()))
    }

    /// Explicitly listed members of `label`.
    pub fn members(&self, label: &str) -> BTreeSet<&str> {
        self.iter().filter(|(_, l)| *l == label).map(|(n, _)| n).collect()
    }
}

impl<N: Into<String>, L: Into<String>> FromIterator<(N, L)> for Partition {
    fn from_iter<I: IntoIterator<Item = (N, L)>>(iter: I) -> Self {
        Self { labels: iter.into_iter().map(|(n, l)| (n.into(), l.into())).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupModularity {
    pub label: String,
    pub members: usize,
    /// Weight of edges with both ends in the group.
    pub internal_weight: f64,
    /// `S_out(group) * S_in(group) / m` under the degree-preserving null.
    pub expected_weight: f64,
}

impl GroupModularity {
    /// This group's contribution to Q.
    pub fn q(&self, m: f64) -> f64 {
        (self.internal_weight - self.expected_weight) / m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModularityResult {
    pub q: f64,
    /// Total edge weight of the induced subgraph.
    pub m: f64,
    /// One entry per group with at least one induced node, sorted by label.
    pub groups: Vec<GroupModularity>,
}

/// Directed weighted modularity
/// `Q = (1/m) Σ_ij [A_ij − s_i^out s_j^in / m] δ(c_i, c_j)`
/// on the subgraph induced by `node_filter`.
///
/// ```
/// use std::collections::BTreeSet;
/// use chronoscope::metrics::{modularity, Partition};
/// use chronoscope::snapshot::YearSnapshot;
///
/// let snap = YearSnapshot::from_edges(2005, [("a", "b", 1), ("b", "a", 1)]).unwrap();
/// let nodes: BTreeSet<&str> = ["a", "b"].into();
/// let split: Partition = [("a", "x"), ("b", "y")].into_iter().collect();
/// // Every edge crosses the split and each group expects 1/2 internally.
/// assert_eq!(modularity(&snap, &split, &nodes).unwrap().q, -0.5);
/// ```
pub fn modularity<S: AsRef<str> + Ord>(
    snapshot: &YearSnapshot,
    partition: &Partition,
    node_filter: &BTreeSet<S>,
) -> Result<ModularityResult, MetricsError> {
    let graph = InducedGraph::new(snapshot, node_filter);
    let m = graph.total_weight();
    if m == 0.0 {
        return Err(MetricsError::EmptyGraph);
    }
    let labels: Vec<&str> = graph.names().iter().map(|n| partition.group_of(n)).collect();
    // (members, internal, s_out, s_in)
    let mut acc: BTreeMap<&str, (usize, f64, f64, f64)> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        let entry = acc.entry(label).or_default();
        entry.0 += 1;
        entry.2 += graph.out_strength(i);
        entry.3 += graph.in_strength(i);
    }
    for (i, j, w) in graph.edges() {
        if labels[i] == labels[j] {
            acc.get_mut(labels[i]).expect("label seen above").1 += w;
        }
    }
    let groups: Vec<GroupModularity> = acc
        .into_iter()
        .map(|(label, (members, internal, s_out, s_in))| GroupModularity {
            label: label.to_string(),
            members,
            internal_weight: internal,
            expected_weight: s_out * s_in / m,
        })
        .collect();
    let q = groups.iter().map(|g| g.q(m)).sum();
    Ok(ModularityResult { q, m, groups })
}

/// Fraction of ordered member pairs `(i, j)`, `i != j`, joined by an edge.
/// Weights are ignored.
pub fn group_internal_density<S: AsRef<str> + Ord>(
    snapshot: &YearSnapshot,
    members: &BTreeSet<S>,
) -> Result<f64, MetricsError> {
    let k = members.len();
    if k < 2 {
        return Err(MetricsError::TooFewMembers(k));
    }
    let graph = InducedGraph::new(snapshot, members);
    let linked = graph.edges().filter(|(i, j, _)| i != j).count();
    Ok(linked as f64 / (k * (k - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn snap(edges: &[(String, String, u64)]) -> YearSnapshot {
        YearSnapshot::from_edges(2010, edges.iter().map(|(a, b, w)| (a.as_str(), b.as_str(), *w))).unwrap()
    }

    /// Straight double sum over ordered node pairs.
    fn double_sum(n: usize, adj: &[Vec<f64>], group: &[usize]) -> f64 {
        let s_out: Vec<f64> = (0..n).map(|i| adj[i].iter().sum()).collect();
        let s_in: Vec<f64> = (0..n).map(|j| (0..n).map(|i| adj[i][j]).sum()).collect();
        let m: f64 = s_out.iter().sum();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if group[i] == group[j] {
                    q += adj[i][j] - s_out[i] * s_in[j] / m;
                }
            }
        }
        q / m
    }

    fn name(i: usize) -> String {
        format!("n{i:02}")
    }

    fn all_nodes(n: usize) -> BTreeSet<String> {
        (0..n).map(name).collect()
    }

    #[test]
    fn two_cliques() {
        let mut edges = Vec::new();
        for base in [0, 3] {
            for i in base..base + 3 {
                for j in base..base + 3 {
                    if i != j {
                        edges.push((name(i), name(j), 1));
                    }
                }
            }
        }
        let s = snap(&edges);
        let p: Partition = (0..6).map(|i| (name(i), if i < 3 { "a" } else { "b" })).collect();
        let r = modularity(&s, &p, &all_nodes(6)).unwrap();
        assert!((r.q - 0.5).abs() < 1e-15);
        assert_eq!(r.groups.len(), 2);
        assert_eq!(r.groups[0].internal_weight, 6.0);
        assert_eq!(r.groups[0].expected_weight, 3.0);
    }

    #[test]
    fn unlisted_nodes_share_a_group() {
        let e = |a: &str, b: &str| (a.to_string(), b.to_string(), 2);
        let s = snap(&[e("a", "b"), e("b", "c"), e("c", "a")]);
        let p: Partition = [("a", "g")].into_iter().collect();
        let r = modularity(&s, &p, &all_from(&["a", "b", "c"])).unwrap();
        let labels: Vec<&str> = r.groups.iter().map(|g| g.label.as_str()).collect();
        assert_eq!(labels, ["g", UNAFFILIATED]);
        assert_eq!(r.groups[1].members, 2);
        assert_eq!(r.groups[1].internal_weight, 2.0);
    }

    fn all_from(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_graph() {
        let s = YearSnapshot::empty(2010);
        assert_eq!(modularity(&s, &Partition::new(), &all_nodes(3)), Err(MetricsError::EmptyGraph));
    }

    #[test]
    fn density_examples() {
        let e = |a: &str, b: &str| (a.to_string(), b.to_string(), 5);
        let triad = snap(&[e("a", "b"), e("b", "a"), e("a", "c"), e("c", "a"), e("b", "c"), e("c", "b")]);
        assert_eq!(group_internal_density(&triad, &all_from(&["a", "b", "c"])), Ok(1.0));
        assert_eq!(group_internal_density(&triad, &all_from(&["a", "x", "y"])), Ok(0.0));
        assert_eq!(group_internal_density(&triad, &all_from(&["a"])), Err(MetricsError::TooFewMembers(1)));

        let pairs = [("a", "b"), ("b", "a"), ("a", "c"), ("c", "a"), ("b", "c"), ("c", "d"), ("d", "a"), ("d", "b")];
        let four = snap(&pairs.iter().map(|(a, b)| e(a, b)).collect::<Vec<_>>());
        let d = group_internal_density(&four, &all_from(&["a", "b", "c", "d"])).unwrap();
        assert!((d - 8.0 / 12.0).abs() < 1e-9);
    }

    /// Under uniformly random labels over `k` groups each ordered pair
    /// `i != j` shares a group with probability `1/k`, so
    /// `E[Q] = -(1 - 1/k) Σ_i s_i^out s_i^in / m²` on a loopless graph.
    #[test]
    fn random_labels_match_null_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 60;
        let k = 5;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(0.3) {
                    edges.push((name(i), name(j), rng.random_range(1..=20)));
                }
            }
        }
        let s = snap(&edges);
        let nodes = all_nodes(n);
        let graph = InducedGraph::new(&s, &nodes);
        let m = graph.total_weight();
        let diag: f64 = (0..n).map(|i| graph.out_strength(i) * graph.in_strength(i)).sum();
        let expected = -(1.0 - 1.0 / k as f64) * diag / (m * m);

        let trials = 400;
        let qs: Vec<f64> = (0..trials)
            .map(|_| {
                let p: Partition = (0..n).map(|i| (name(i), format!("g{}", rng.random_range(0..k)))).collect();
                modularity(&s, &p, &nodes).unwrap().q
            })
            .collect();
        let mean = qs.iter().sum::<f64>() / trials as f64;
        let var = qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} expected {expected} se {se}");
    }

    proptest! {
        #[test]
        fn matches_double_sum(
            n in 2usize..20,
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut adj = vec![vec![0.0; n]; n];
            let mut edges = Vec::new();
            for (i, row) in adj.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    if i != j && rng.random_bool(0.4) {
                        let w = rng.random_range(1..100u64);
                        *cell = w as f64;
                        edges.push((name(i), name(j), w));
                    }
                }
            }
            prop_assume!(!edges.is_empty());
            let group: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let p: Partition = (0..n).map(|i| (name(i), format!("g{}", group[i]))).collect();
            let q = modularity(&snap(&edges), &p, &all_nodes(n)).unwrap().q;
            prop_assert!((q - double_sum(n, &adj, &group)).abs() < 1e-12);
        }
    }
}
