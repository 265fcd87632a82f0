//! Haversine distances, normalized link strength `σ_ij = S_ij / (S_i^out S_j^in)`,
//! moving-average distance series and the power-law fit `σ ∝ d^-a`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::metrics::InducedGraph;
use crate::snapshot::YearSnapshot;

pub const EARTH_RADIUS_KM: f64 = 6371.0088;
pub const DEFAULT_WINDOW: usize = 500;
pub const DEFAULT_D_MIN_KM: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GravityError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("no coordinates for {0}")]
    MissingCoordinates(String),
    #[error("window must be at least 1")]
    InvalidWindow,
    #[error("minimum distance must be a finite non-negative number, got {0}")]
    InvalidMinDistance(f64),
    #[error("{available} points at or beyond the minimum distance, window needs {needed}")]
    InsufficientData { needed: usize, available: usize },
    #[error("fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive distance or strength reached the log fit")]
    NonPositiveValue,
    #[error("all distances are equal, slope undefined")]
    DegenerateDesign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GravityError> {
        if (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
            Ok(Self { lat, lon })
        } else {
            Err(GravityError::InvalidCoordinate { lat, lon })
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Great-circle distance in km.
///
/// ```
/// use chronoscope::gravity::{haversine_km, GeoPoint};
///
/// let d = haversine_km(GeoPoint::new(0.0, 0.0).unwrap(), GeoPoint::new(0.0, 180.0).unwrap());
/// assert!((d - 20015.1).abs() < 0.1);
/// ```
pub fn haversine_km(p: GeoPoint, q: GeoPoint) -> f64 {
    let (phi1, phi2) = (p.lat.to_radians(), q.lat.to_radians());
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlambda = (q.lon - p.lon).to_radians() / 2.0;
    let h = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.min(1.0).sqrt().asin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrengthPair {
    pub source: String,
    pub target: String,
    /// Raw link weight `S_ij`.
    pub s_ij: f64,
    pub sigma: f64,
    pub distance_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrengthPairs {
    pub pairs: Vec<StrengthPair>,
    /// Ordered node pairs without a link, so without a defined σ.
    pub excluded: usize,
}

/// One [`StrengthPair`] per linked ordered pair of the subgraph induced by
/// `nodes`, in (source, target) name order.
pub fn normalized_strengths<S: AsRef<str> + Ord>(
    snapshot: &YearSnapshot,
    nodes: &BTreeSet<S>,
    geo: &BTreeMap<String, GeoPoint>,
) -> Result<StrengthPairs, GravityError> {
    let graph = InducedGraph::new(snapshot, nodes);
    let points = graph
        .names()
        .iter()
        .map(|n| geo.get(n).copied().ok_or_else(|| GravityError::MissingCoordinates(n.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let s_out: Vec<f64> = (0..graph.len()).map(|i| graph.out_strength(i)).collect();
    let s_in: Vec<f64> = (0..graph.len()).map(|i| graph.in_strength(i)).collect();
    let mut pairs: Vec<StrengthPair> = graph
        .edges()
        .filter(|&(i, j, w)| i != j && w > 0.0)
        .map(|(i, j, w)| StrengthPair {
            source: graph.names()[i].clone(),
            target: graph.names()[j].clone(),
            s_ij: w,
            sigma: w / (s_out[i] * s_in[j]),
            distance_km: haversine_km(points[i], points[j]),
        })
        .collect();
    pairs.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    let n = graph.len();
    Ok(StrengthPairs { excluded: n * n.saturating_sub(1) - pairs.len(), pairs })
}

/// Collapses `i→j` and `j→i` into one pair (source < target) whose σ is the
/// mean over the directions that carry links.
pub fn symmetrize_mean(pairs: &[StrengthPair]) -> Vec<StrengthPair> {
    let mut merged: BTreeMap<(&str, &str), (StrengthPair, usize)> = BTreeMap::new();
    for p in pairs {
        let key = if p.source <= p.target {
            (p.source.as_str(), p.target.as_str())
        } else {
            (p.target.as_str(), p.source.as_str())
        };
        merged
            .entry(key)
            .and_modify(|(acc, count)| {
                acc.s_ij += p.s_ij;
                acc.sigma += p.sigma;
                *count += 1;
            })
            .or_insert_with(|| {
                let pair = StrengthPair { source: key.0.to_string(), target: key.1.to_string(), ..p.clone() };
                (pair, 1)
            });
    }
    merged
        .into_values()
        .map(|(mut p, count)| {
            p.sigma /= count as f64;
            p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravitySeries {
    /// `(mean distance km, mean σ)` per window position.
    pub points: Vec<(f64, f64)>,
    pub window: usize,
    pub d_min_km: f64,
    /// Pairs remaining after the distance cutoff.
    pub filtered: usize,
}

/// Drops pairs closer than `d_min_km`, sorts by distance and averages every
/// run of `window` consecutive pairs (stride 1).
pub fn distance_strength_series(
    pairs: &[StrengthPair],
    window: usize,
    d_min_km: f64,
) -> Result<GravitySeries, GravityError> {
    if window == 0 {
        return Err(GravityError::InvalidWindow);
    }
    if !(d_min_km.is_finite() && d_min_km >= 0.0) {
        return Err(GravityError::InvalidMinDistance(d_min_km));
    }
    let mut kept: Vec<(f64, f64)> =
        pairs.iter().filter(|p| p.distance_km >= d_min_km).map(|p| (p.distance_km, p.sigma)).collect();
    if kept.is_empty() || kept.len() < window {
        return Err(GravityError::InsufficientData { needed: window, available: kept.len() });
    }
    // Stable: equal distances keep their input order.
    kept.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w = window as f64;
    let points = kept
        .windows(window)
        .map(|run| {
            let (d, s) = run.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
            (d / w, s / w)
        })
        .collect();
    Ok(GravitySeries { points, window, d_min_km, filtered: kept.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravityFit {
    /// Decay exponent `a` in `σ ∝ d^-a`.
    pub a: f64,
    pub std_error: f64,
    pub n_points: usize,
    pub window: usize,
    pub d_min_km: f64,
    pub d_max_km: f64,
    /// Intercept of the natural-log fit.
    pub intercept: f64,
    pub rss: f64,
}

/// Ordinary least squares of `ln σ` on `ln d`.
pub fn fit_gravity_exponent(series: &GravitySeries) -> Result<GravityFit, GravityError> {
    let pts = &series.points;
    if pts.len() < 3 {
        return Err(GravityError::TooFewPoints(pts.len()));
    }
    if pts.iter().any(|&(d, s)| !(d > 0.0 && s > 0.0) || !d.is_finite() || !s.is_finite()) {
        return Err(GravityError::NonPositiveValue);
    }
    if pts.iter().all(|p| p.0 == pts[0].0) {
        return Err(GravityError::DegenerateDesign);
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(d, s)| (d.ln(), s.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in &logs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = logs.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(GravityFit {
        a: -slope,
        std_error: (rss / (n - 2.0) / sxx).sqrt(),
        n_points: pts.len(),
        window: series.window,
        d_min_km: series.d_min_km,
        d_max_km: pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        intercept,
        rss,
    })
}

/// Plot-ready row for a map of normalized link strength.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoLink {
    pub source: String,
    pub target: String,
    pub source_point: GeoPoint,
    pub target_point: GeoPoint,
    pub sigma: f64,
}

pub fn export_geo_links(
    pairs: &[StrengthPair],
    geo: &BTreeMap<String, GeoPoint>,
) -> Result<Vec<GeoLink>, GravityError> {
    let lookup = |n: &str| geo.get(n).copied().ok_or_else(|| GravityError::MissingCoordinates(n.to_string()));
    pairs
        .iter()
        .map(|p| {
            Ok(GeoLink {
                source: p.source.clone(),
                target: p.target.clone(),
                source_point: lookup(&p.source)?,
                target_point: lookup(&p.target)?,
                sigma: p.sigma,
            })
        })
        .collect()
}
