//! Yearly weighted digraphs over third-level domains and their text format.
//!
//! The file format is line oriented:
//!
//! ```text
//! #snapshot v1 year=2010
//! #node<TAB>ox.ac.uk<TAB>1200
//! cam.ac.uk<TAB>ox.ac.uk<TAB>5
//! ```
//!
//! `#node` lines carry the optional page counts and precede the edge lines.
//! Both sections are sorted, so writing is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

pub const FORMAT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("zero weight on {0:?} -> {1:?}")]
    ZeroWeight(String, String),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("unsupported snapshot format version {0:?}")]
    Version(String),
    #[error("year mismatch: cannot merge {0} into {1}")]
    YearMismatch(i32, i32),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One year's link graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct YearSnapshot {
    year: i32,
    edges: BTreeMap<(String, String), u64>,
    node_pages: BTreeMap<String, u64>,
}

impl YearSnapshot {
    pub fn empty(year: i32) -> Self {
        Self { year, ..Self::default() }
    }

    pub fn from_edges<I, S, T>(year: i32, edges: I) -> Result<Self, SnapshotError>
    where
        I: IntoIterator<Item = (S, T, u64)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (source, target, weight) in edges {
            let (source, target) = (source.into(), target.into());
            if source == target {
                return Err(SnapshotError::SelfLoop(source));
            }
            if weight == 0 {
                return Err(SnapshotError::ZeroWeight(source, target));
            }
            *map.entry((source, target)).or_insert(0) += weight;
        }
        Ok(Self { year, edges: map, node_pages: BTreeMap::new() })
    }

    /// Builder-style attachment of page counts from a node list.
    pub fn with_node_pages<I, S>(mut self, pages: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        self.node_pages.extend(pages.into_iter().map(|(name, count)| (name.into(), count)));
        self
    }

    pub(crate) fn from_parts(
        year: i32,
        edges: BTreeMap<(String, String), u64>,
        node_pages: BTreeMap<String, u64>,
    ) -> Self {
        debug_assert!(edges.iter().all(|((s, t), w)| s != t && *w > 0));
        Self { year, edges, node_pages }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn edges(&self) -> &BTreeMap<(String, String), u64> {
        &self.edges
    }

    pub fn node_pages(&self) -> &BTreeMap<String, u64> {
        &self.node_pages
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.node_pages.is_empty()
    }

    pub fn weight(&self, source: &str, target: &str) -> u64 {
        // BTreeMap<(String, String), _> cannot be queried by (&str, &str).
        self.edges.get(&(source.to_string(), target.to_string())).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Edge endpoints together with every node named in the page counts.
    pub fn nodes(&self) -> BTreeSet<&str> {
        let mut nodes: BTreeSet<&str> = self.node_pages.keys().map(String::as_str).collect();
        for (s, t) in self.edges.keys() {
            nodes.insert(s);
            nodes.insert(t);
        }
        nodes
    }

    /// Multiplies every edge weight by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        assert!(factor > 0, "scale factor must be positive");
        let edges = self.edges.iter().map(|(k, w)| (k.clone(), w * factor)).collect();
        Self { year: self.year, edges, node_pages: self.node_pages.clone() }
    }

    /// Per-pair maximum of two snapshots of the same year. Page counts also
    /// take the maximum. The combine is associative, commutative and
    /// idempotent, so source-disjoint partial snapshots merge in any order.
    pub fn merge_max(mut self, other: &YearSnapshot) -> Result<Self, SnapshotError> {
        if self.year != other.year {
            return Err(SnapshotError::YearMismatch(other.year, self.year));
        }
        for (key, &w) in &other.edges {
            let slot = self.edges.entry(key.clone()).or_insert(0);
            *slot = (*slot).max(w);
        }
        for (name, &pages) in &other.node_pages {
            let slot = self.node_pages.entry(name.clone()).or_insert(0);
            *slot = (*slot).max(pages);
        }
        Ok(self)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#snapshot {FORMAT_VERSION} year={}", self.year)?;
        for (name, pages) in &self.node_pages {
            writeln!(out, "#node\t{name}\t{pages}")?;
        }
        for ((s, t), w) in &self.edges {
            writeln!(out, "{s}\t{t}\t{w}")?;
        }
        out.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, SnapshotError> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let year = parse_header(&header)?;
        let mut edges = BTreeMap::new();
        let mut node_pages = BTreeMap::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let lineno = idx + 2;
            let err = |reason: &str| SnapshotError::Format { line: lineno, reason: reason.to_string() };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#node\t") {
                let (name, pages) = rest.split_once('\t').ok_or_else(|| err("expected #node<TAB>name<TAB>pages"))?;
                let pages = pages.parse().map_err(|_| err("page count is not an integer"))?;
                node_pages.insert(name.to_string(), pages);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(s), Some(t), Some(w), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
                return Err(err("expected source<TAB>target<TAB>weight"));
            };
            let w: u64 = w.parse().map_err(|_| err("weight is not an integer"))?;
            if s == t {
                return Err(SnapshotError::SelfLoop(s.to_string()));
            }
            if w == 0 {
                return Err(SnapshotError::ZeroWeight(s.to_string(), t.to_string()));
            }
            if edges.insert((s.to_string(), t.to_string()), w).is_some() {
                return Err(err("duplicate edge"));
            }
        }
        Ok(Self { year, edges, node_pages })
    }

    pub fn read_path(path: &std::path::Path) -> Result<Self, SnapshotError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(io::BufReader::new(file))
    }

    pub fn write_path(&self, path: &std::path::Path) -> Result<(), SnapshotError> {
        let file = std::fs::File::create(path)?;
        self.write_to(io::BufWriter::new(file))?;
        Ok(())
    }
}

fn parse_header(header: &str) -> Result<i32, SnapshotError> {
    let bad = || SnapshotError::Format { line: 1, reason: format!("bad header {header:?}") };
    let mut parts = header.split(' ');
    if parts.next() != Some("#snapshot") {
        return Err(bad());
    }
    let version = parts.next().ok_or_else(bad)?;
    if version != FORMAT_VERSION {
        return Err(SnapshotError::Version(version.to_string()));
    }
    let year = parts.next().and_then(|y| y.strip_prefix("year=")).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    year.parse().map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> YearSnapshot {
        YearSnapshot::from_edges(2005, [("ox.ac.uk", "cam.ac.uk", 5), ("a.co.uk", "ox.ac.uk", 2)]).unwrap()
    }

    #[test]
    fn roundtrip_and_sorted_output() {
        let snap = sample().with_node_pages([("ox.ac.uk", 100u64), ("lonely.gov.uk", 3)]);
        let bytes = snap.to_bytes();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "#snapshot v1 year=2005\n#node\tlonely.gov.uk\t3\n#node\tox.ac.uk\t100\n\
             a.co.uk\tox.ac.uk\t2\nox.ac.uk\tcam.ac.uk\t5\n"
        );
        assert_eq!(YearSnapshot::read_from(bytes.as_slice()).unwrap(), snap);
        assert_eq!(snap.to_bytes(), bytes);
    }

    #[test]
    fn empty_snapshot_is_header_only() {
        let snap = YearSnapshot::empty(1999);
        assert_eq!(snap.to_bytes(), b"#snapshot v1 year=1999\n");
        assert_eq!(YearSnapshot::read_from(&b"#snapshot v1 year=1999\n"[..]).unwrap(), snap);
    }

    #[test]
    fn rejects_bad_files() {
        let version = YearSnapshot::read_from(&b"#snapshot v2 year=1999\n"[..]);
        assert!(matches!(version, Err(SnapshotError::Version(v)) if v == "v2"));
        for text in [
            "",
            "snapshot v1 year=1999\n",
            "#snapshot v1 year=x\n",
            "#snapshot v1 year=2000\na\tb\n",
            "#snapshot v1 year=2000\na\tb\tx\n",
            "#snapshot v1 year=2000\na\tb\t1\na\tb\t2\n",
        ] {
            assert!(YearSnapshot::read_from(text.as_bytes()).is_err(), "{text:?}");
        }
        assert!(matches!(
            YearSnapshot::read_from(&b"#snapshot v1 year=2000\na\ta\t1\n"[..]),
            Err(SnapshotError::SelfLoop(_))
        ));
    }

    #[test]
    fn construction_rejects_loops_and_zero_weights() {
        assert!(matches!(YearSnapshot::from_edges(1, [("a", "a", 1)]), Err(SnapshotError::SelfLoop(_))));
        assert!(matches!(YearSnapshot::from_edges(1, [("a", "b", 0)]), Err(SnapshotError::ZeroWeight(..))));
    }

    #[test]
    fn nodes_union_page_counts() {
        let snap = sample().with_node_pages([("d.gov.uk", 1u64)]);
        let nodes: Vec<_> = snap.nodes().into_iter().collect();
        assert_eq!(nodes, ["a.co.uk", "cam.ac.uk", "d.gov.uk", "ox.ac.uk"]);
    }

    #[test]
    fn merge_max_takes_pairwise_maxima() {
        let a = YearSnapshot::from_edges(2000, [("a", "b", 2), ("a", "c", 1)]).unwrap();
        let b = YearSnapshot::from_edges(2000, [("a", "b", 1), ("b", "c", 4)]).unwrap();
        let merged = a.clone().merge_max(&b).unwrap();
        assert_eq!(merged.weight("a", "b"), 2);
        assert_eq!(merged.weight("a", "c"), 1);
        assert_eq!(merged.weight("b", "c"), 4);
        assert!(a.merge_max(&YearSnapshot::empty(2001)).is_err());
    }

    fn snapshot_strategy() -> impl Strategy<Value = YearSnapshot> {
        let name = prop::sample::select(vec!["a.ac.uk", "b.ac.uk", "c.co.uk", "d.gov.uk", "e.org.uk"]);
        (
            1990i32..2020,
            prop::collection::vec((name.clone(), name.clone(), 1u64..1000), 0..20),
            prop::collection::vec((name, 0u64..50), 0..3),
        )
            .prop_map(|(year, edges, pages)| {
                YearSnapshot::from_edges(year, edges.into_iter().filter(|(s, t, _)| s != t))
                    .unwrap()
                    .with_node_pages(pages)
            })
    }

    proptest! {
        #[test]
        fn write_read_identity(snap in snapshot_strategy()) {
            let bytes = snap.to_bytes();
            let back = YearSnapshot::read_from(bytes.as_slice()).unwrap();
            prop_assert_eq!(&back, &snap);
            prop_assert_eq!(back.to_bytes(), bytes);
        }

        #[test]
        fn merge_max_laws(a in snapshot_strategy(), b in snapshot_strategy(), c in snapshot_strategy()) {
            let (b, c) = (
                YearSnapshot { year: a.year, ..b },
                YearSnapshot { year: a.year, ..c },
            );
            let ab = a.clone().merge_max(&b).unwrap();
            prop_assert_eq!(&ab, &b.clone().merge_max(&a).unwrap());
            prop_assert_eq!(&a.clone().merge_max(&a).unwrap(), &a);
            prop_assert_eq!(
                ab.merge_max(&c).unwrap(),
                a.merge_max(&b.merge_max(&c).unwrap()).unwrap()
            );
        }
    }
}
