use std::collections::{BTreeSet, HashMap};

use crate::snapshot::YearSnapshot;

/// Dense-index view of the subgraph a snapshot induces on a node set.
///
/// Nodes are indexed in sorted name order. Filter members that never occur
/// in the snapshot are kept as isolated nodes.
#[derive(Debug, Clone)]
pub struct InducedGraph {
    names: Vec<String>,
    out: Vec<Vec<(usize, f64)>>,
    inc: Vec<Vec<(usize, f64)>>,
}

impl InducedGraph {
    pub fn new<S: AsRef<str> + Ord>(snapshot: &YearSnapshot, nodes: &BTreeSet<S>) -> Self {
        let names: Vec<String> = nodes.iter().map(|n| n.as_ref().to_string()).collect();
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut out = vec![Vec::new(); names.len()];
        let mut inc = vec![Vec::new(); names.len()];
        for ((s, t), &w) in snapshot.edges() {
            if let (Some(&i), Some(&j)) = (index.get(s.as_str()), index.get(t.as_str())) {
                out[i].push((j, w as f64));
                inc[j].push((i, w as f64));
            }
        }
        Self { names, out, inc }
    }

    /// Induced on every node of the snapshot.
    pub fn whole(snapshot: &YearSnapshot) -> Self {
        Self::new(snapshot, &snapshot.nodes())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn out_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.out[node]
    }

    pub fn in_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.inc[node]
    }

    pub fn out_strength(&self, node: usize) -> f64 {
        self.out[node].iter().map(|e| e.1).sum()
    }

    pub fn in_strength(&self, node: usize) -> f64 {
        self.inc[node].iter().map(|e| e.1).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.out.iter().flatten().map(|e| e.1).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out.iter().enumerate().flat_map(|(i, es)| es.iter().map(move |&(j, w)| (i, j, w)))
    }

    pub(crate) fn max_weight(&self) -> f64 {
        self.edges().map(|e| e.2).fold(0.0, f64::max)
    }
}
