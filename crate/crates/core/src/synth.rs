//! Seeded generators for graphs with known structure: gravity-law link
//! strength, planted partitions, and raw link logs for the ingest path.
//!
//! All randomness comes from `ChaCha8Rng`, so outputs are bit-identical
//! across platforms for a given seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::gravity::{haversine_km, GeoPoint};
use crate::metrics::Partition;
use crate::snapshot::YearSnapshot;

const BALANCING_ROUNDS: usize = 200;
const GEO_STREAM: u64 = 1;
const DEFAULT_WEIGHT_SCALE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SynthError> {
    Err(SynthError::InvalidSpec(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedPartition {
    /// Nodes are split into this many contiguous blocks of near-equal size.
    pub groups: usize,
    pub p_intra: f64,
    pub p_inter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_nodes: usize,
    pub planted_exponent: f64,
    pub planted_partition: Option<PlantedPartition>,
    /// Standard deviation of the log-normal multiplicative weight noise.
    pub noise_scale: f64,
    /// Largest gravity-graph weight; the rest are scaled and rounded.
    pub weight_scale: f64,
    pub year: i32,
}

impl SynthSpec {
    pub fn gravity(seed: u64, n_nodes: usize, exponent: f64, noise_scale: f64) -> Self {
        Self {
            seed,
            n_nodes,
            planted_exponent: exponent,
            planted_partition: None,
            noise_scale,
            weight_scale: DEFAULT_WEIGHT_SCALE,
            year: 2010,
        }
    }

    pub fn partitioned(seed: u64, n_nodes: usize, partition: PlantedPartition) -> Self {
        Self { planted_partition: Some(partition), noise_scale: 0.0, ..Self::gravity(seed, n_nodes, 0.0, 0.0) }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n_nodes < 2 {
            return invalid("n_nodes must be at least 2");
        }
        if !(self.planted_exponent.is_finite() && self.planted_exponent >= 0.0) {
            return invalid("planted_exponent must be finite and non-negative");
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return invalid("noise_scale must be finite and non-negative");
        }
        if !(self.weight_scale >= 1.0 && self.weight_scale <= 2f64.powi(40)) {
            return invalid("weight_scale must lie in [1, 2^40]");
        }
        if let Some(p) = &self.planted_partition {
            if p.groups == 0 || p.groups > self.n_nodes {
                return invalid("groups must lie in [1, n_nodes]");
            }
            if !(0.0..=1.0).contains(&p.p_intra) || !(0.0..=1.0).contains(&p.p_inter) {
                return invalid("link probabilities must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Name of synthetic node `i`.
pub fn node_name(i: usize) -> String {
    format!("u{i:04}.ac.uk")
}

fn geo_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GEO_STREAM);
    rng
}

/// `n` points uniform on the whole sphere.
pub fn gen_geo_sphere(seed: u64, n: usize) -> BTreeMap<String, GeoPoint> {
    let mut rng = geo_rng(seed);
    (0..n)
        .map(|i| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let lon: f64 = rng.random_range(-180.0..=180.0);
            let lat = z.asin() * 180.0 / PI;
            (node_name(i), GeoPoint::new(lat, lon).expect("asin stays within ±90°"))
        })
        .collect()
}

/// `n` points uniform in latitude and longitude over a bounding box.
pub fn gen_geo_box(
    seed: u64,
    n: usize,
    lat: (f64, f64),
    lon: (f64, f64),
) -> Result<BTreeMap<String, GeoPoint>, SynthError> {
    if !(lat.0 <= lat.1 && lon.0 <= lon.1) {
        return invalid("bounding box corners out of order");
    }
    GeoPoint::new(lat.0, lon.0).and(GeoPoint::new(lat.1, lon.1)).or_else(|e| invalid(e.to_string()))?;
    let mut rng = geo_rng(seed);
    Ok((0..n)
        .map(|i| {
            let la = rng.random_range(lat.0..=lat.1);
            let lo = rng.random_range(lon.0..=lon.1);
            (node_name(i), GeoPoint::new(la, lo).expect("inside a valid box"))
        })
        .collect())
}

/// Complete digraph on the first `n_nodes` entries of `geo` whose normalized
/// strength follows `d^-a` times log-normal noise.
///
/// Weights are `c_i c_j d_ij^-a · exp(noise · z_ij)`. The node factors `c`
/// are chosen so that every node has (near) equal kernel strength `Σ_j c_j
/// d_ij^-a`; then `S_i^out S_j^in ∝ c_i c_j` and `σ_ij ∝ d_ij^-a` holds
/// pair by pair instead of being distorted by uneven node strengths. Weights
/// are rounded to integers, the largest being `weight_scale`; pairs that
/// round to zero are left out.
pub fn gen_gravity_graph(spec: &SynthSpec, geo: &BTreeMap<String, GeoPoint>) -> Result<YearSnapshot, SynthError> {
    spec.validate()?;
    let n = spec.n_nodes;
    if geo.len() < n {
        return invalid(format!("need {n} coordinates, got {}", geo.len()));
    }
    let nodes: Vec<(&String, GeoPoint)> = geo.iter().take(n).map(|(k, v)| (k, *v)).collect();
    let a = spec.planted_exponent;
    let mut kernel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let d = haversine_km(nodes[i].1, nodes[j].1);
            if i != j && d > 0.0 {
                kernel[i][j] = d.powf(-a);
            }
        }
    }
    let c = balance(&kernel);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut raw = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let z: f64 = rng.sample(StandardNormal);
            raw.push((i, j, c[i] * c[j] * kernel[i][j] * (spec.noise_scale * z).exp()));
        }
    }
    let max = raw.iter().map(|r| r.2).fold(0.0, f64::max);
    if max <= 0.0 {
        return invalid("all nodes share one location");
    }
    let edges = raw.into_iter().filter_map(|(i, j, r)| {
        let w = (r / max * spec.weight_scale).round() as u64;
        (w > 0).then(|| (nodes[i].0.as_str(), nodes[j].0.as_str(), w))
    });
    Ok(YearSnapshot::from_edges(spec.year, edges).expect("no self-loops or zero weights"))
}

/// Multiplicative updates `c ← c · (K1) / (K K c)` driving `K c` towards a
/// constant vector, rescaled so that `max c = 1`.
fn balance(kernel: &[Vec<f64>]) -> Vec<f64> {
    let n = kernel.len();
    let mul =
        |v: &[f64]| -> Vec<f64> { kernel.iter().map(|row| row.iter().zip(v).map(|(k, x)| k * x).sum()).collect() };
    let target = mul(&vec![1.0; n]);
    let mut c = vec![1.0; n];
    for _ in 0..BALANCING_ROUNDS {
        let kkc = mul(&mul(&c));
        for i in 0..n {
            if kkc[i] > 0.0 {
                c[i] *= target[i] / kkc[i];
            }
        }
        let max = c.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            c.iter_mut().for_each(|x| *x /= max);
        }
    }
    c
}

fn group_of(i: usize, n: usize, groups: usize) -> usize {
    i * groups / n
}

/// Independent directed links with probability `p_intra` inside a block and
/// `p_inter` across blocks. Weights are 1, or `max(1, round(10 e^{noise z}))`
/// when `noise_scale > 0`.
pub fn gen_partitioned_graph(spec: &SynthSpec) -> Result<YearSnapshot, SynthError> {
    spec.validate()?;
    let Some(p) = spec.planted_partition else {
        return invalid("planted_partition is required");
    };
    let n = spec.n_nodes;
    let names: Vec<String> = (0..n).map(node_name).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let prob = if group_of(i, n, p.groups) == group_of(j, n, p.groups) { p.p_intra } else { p.p_inter };
            if rng.random_bool(prob) {
                let w = if spec.noise_scale > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    ((10.0 * (spec.noise_scale * z).exp()).round() as u64).max(1)
                } else {
                    1
                };
                edges.push((names[i].as_str(), names[j].as_str(), w));
            }
        }
    }
    Ok(YearSnapshot::from_edges(spec.year, edges).expect("no self-loops or zero weights"))
}

/// The block partition [`gen_partitioned_graph`] plants, labels `g0, g1, ...`.
pub fn planted_partition_of(spec: &SynthSpec) -> Result<Partition, SynthError> {
    spec.validate()?;
    let Some(p) = spec.planted_partition else {
        return invalid("planted_partition is required");
    };
    Ok((0..spec.n_nodes).map(|i| (node_name(i), format!("g{}", group_of(i, spec.n_nodes, p.groups)))).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkLogSpec {
    pub seed: u64,
    pub n_lines: usize,
    pub n_domains: usize,
    pub first_year: i32,
    pub years: u32,
    /// Crawls per source domain and year.
    pub crawls_per_year: u32,
}

impl LinkLogSpec {
    pub fn new(seed: u64, n_lines: usize) -> Self {
        Self { seed, n_lines, n_domains: 2000, first_year: 2005, years: 4, crawls_per_year: 3 }
    }
}

const LOG_SLDS: [&str; 4] = ["ac.uk", "co.uk", "gov.uk", "org.uk"];

fn log_domain(i: usize) -> String {
    format!("d{i}.{}", LOG_SLDS[i % LOG_SLDS.len()])
}

/// Writes a well-formed, unsorted link log: each line picks a source, one of
/// its crawls, a time inside that crawl, and a different target domain.
pub fn gen_link_lines<W: Write>(spec: &LinkLogSpec, mut out: W) -> io::Result<()> {
    const YEAR_SECONDS: u64 = 365 * 86_400;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_domains.max(2);
    let year_start = |year: i32| {
        chrono::NaiveDate::from_ymd_opt(year, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map_or(0, |t| t.and_utc().timestamp().max(0) as u64)
    };
    let crawls = spec.years.max(1) * spec.crawls_per_year.max(1);
    for _ in 0..spec.n_lines {
        let source = rng.random_range(0..n);
        let mut target = rng.random_range(0..n - 1);
        if target >= source {
            target += 1;
        }
        // Crawl starts are a pure function of (source, crawl index).
        let crawl = rng.random_range(0..crawls) as u64;
        let year = crawl / spec.crawls_per_year.max(1) as u64;
        let slot = (source as u64 * 7919 + crawl * 104_729) % (YEAR_SECONDS - 10_000);
        let time = year_start(spec.first_year + year as i32) + slot + rng.random_range(0..2_400);
        let path: u32 = rng.random_range(0..50);
        let www = if rng.random_bool(0.5) { "www." } else { "" };
        writeln!(out, "{time}\thttp://{www}{}/p{path}\thttp://{}/", log_domain(source), log_domain(target))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::{distance_strength_series, fit_gravity_exponent, normalized_strengths};
    use crate::metrics::modularity;
    use std::collections::BTreeSet;

    fn fitted(spec: &SynthSpec, geo: &BTreeMap<String, GeoPoint>) -> f64 {
        let snap = gen_gravity_graph(spec, geo).unwrap();
        let nodes: BTreeSet<&String> = geo.keys().take(spec.n_nodes).collect();
        let pairs = normalized_strengths(&snap, &nodes, geo).unwrap().pairs;
        let series = distance_strength_series(&pairs, 500, 20.0).unwrap();
        fit_gravity_exponent(&series).unwrap().a
    }

    #[test]
    fn noiseless_gravity_recovers_exponent() {
        let geo = gen_geo_sphere(3, 200);
        for a in [0.28, 0.5, 1.0] {
            let a_hat = fitted(&SynthSpec::gravity(3, 200, a, 0.0), &geo);
            assert!((a_hat - a).abs() < 0.01, "planted {a}, fitted {a_hat}");
        }
    }

    #[test]
    fn uk_box_geography() {
        let geo = gen_geo_box(5, 150, (50.5, 55.5), (-4.5, 1.5)).unwrap();
        let a_hat = fitted(&SynthSpec::gravity(5, 150, 0.28, 0.3), &geo);
        assert!((a_hat - 0.28).abs() < 0.05, "fitted {a_hat}");
    }

    #[test]
    fn deterministic() {
        let geo = gen_geo_sphere(9, 30);
        assert_eq!(geo, gen_geo_sphere(9, 30));
        let spec = SynthSpec::gravity(9, 30, 0.5, 0.3);
        assert_eq!(gen_gravity_graph(&spec, &geo).unwrap(), gen_gravity_graph(&spec, &geo).unwrap());
        let part = SynthSpec::partitioned(4, 40, PlantedPartition { groups: 3, p_intra: 0.5, p_inter: 0.1 });
        assert_eq!(gen_partitioned_graph(&part).unwrap(), gen_partitioned_graph(&part).unwrap());
        let (mut x, mut y) = (Vec::new(), Vec::new());
        gen_link_lines(&LinkLogSpec::new(2, 100), &mut x).unwrap();
        gen_link_lines(&LinkLogSpec::new(2, 100), &mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn separated_blocks() {
        let spec = SynthSpec::partitioned(1, 10, PlantedPartition { groups: 2, p_intra: 1.0, p_inter: 0.0 });
        let snap = gen_partitioned_graph(&spec).unwrap();
        assert_eq!(snap.edge_count(), 2 * 5 * 4);
        let part = planted_partition_of(&spec).unwrap();
        let nodes: BTreeSet<String> = (0..10).map(node_name).collect();
        // Two equal disjoint cliques: each group keeps half the weight and
        // expects a quarter.
        let q = modularity(&snap, &part, &nodes).unwrap().q;
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let geo = gen_geo_sphere(1, 3);
        assert!(gen_gravity_graph(&SynthSpec::gravity(1, 1, 0.3, 0.0), &geo).is_err());
        assert!(gen_gravity_graph(&SynthSpec::gravity(1, 5, 0.3, 0.0), &geo).is_err());
        assert!(gen_gravity_graph(&SynthSpec::gravity(1, 3, -1.0, 0.0), &geo).is_err());
        let bad = PlantedPartition { groups: 2, p_intra: 1.5, p_inter: 0.0 };
        assert!(gen_partitioned_graph(&SynthSpec::partitioned(1, 4, bad)).is_err());
        assert!(gen_partitioned_graph(&SynthSpec::gravity(1, 4, 0.3, 0.0)).is_err());
        assert!(gen_geo_box(1, 3, (60.0, 50.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn link_log_is_well_formed() {
        let mut buf = Vec::new();
        gen_link_lines(&LinkLogSpec::new(7, 2000), &mut buf).unwrap();
        let out = crate::ingest::ingest_reader(
            &buf[..],
            &crate::domain::SuffixPolicy::uk_default(),
            crate::ingest::IngestConfig { strict: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(out.summary.records, 2000);
        assert_eq!(out.snapshots.keys().copied().collect::<Vec<_>>(), [2005, 2006, 2007, 2008]);
    }
}
