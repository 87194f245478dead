//! k-means++ clustering of standardized volatility features and elbow-based
//! selection of the cluster count.

use chrono::NaiveDate;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PriceSeries;
use crate::returns_vol::{volatility, VolatilityKind};

pub const FEATURE_KINDS: [VolatilityKind; 4] = [
    VolatilityKind::Parkinson,
    VolatilityKind::GarmanKlass,
    VolatilityKind::RogersSatchell,
    VolatilityKind::YangZhang,
];

pub const MAX_LLOYD_ITERATIONS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 10;

/// Per-day rows of `[PK, GK, RS, YZ]`, pooled across tickers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityFeatureMatrix {
    pub rows: Vec<[f64; 4]>,
    pub labels: Vec<(String, NaiveDate)>,
}

impl VolatilityFeatureMatrix {
    /// Rolling PK/GK/RS/YZ for every series, aligned on the dates where all
    /// four are defined, stacked ticker after ticker.
    pub fn from_series(series: &[PriceSeries], window: usize) -> Result<Self> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for s in series {
            let rolled: Vec<_> = FEATURE_KINDS
                .iter()
                .map(|&k| volatility(s, k, window))
                .collect::<Result<_>>()?;
            let common = rolled.iter().map(|r| r.values.len()).min().unwrap_or(0);
            // Every rolling vector ends on the last bar; align from the tail.
            for i in 0..common {
                let mut row = [0.0; 4];
                for (c, r) in rolled.iter().enumerate() {
                    row[c] = r.values[r.values.len() - common + i];
                }
                let dates = &rolled[0].dates;
                rows.push(row);
                labels.push((s.ticker.clone(), dates[dates.len() - common + i]));
            }
        }
        Ok(Self { rows, labels })
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.to_vec()).collect()
    }
}

/// Column-wise z-scores with population standard deviation.
pub fn zscore_standardize(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if points.len() < 2 {
        return Err(Error::Size {
            what: "rows to standardize",
            needed: 2,
            got: points.len(),
        });
    }
    let dim = points[0].len();
    check_dims(points, dim)?;
    let n = points.len() as f64;
    let mut out = points.to_vec();
    for c in 0..dim {
        let mean = points.iter().map(|p| p[c]).sum::<f64>() / n;
        let sd = (points.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::Degenerate(format!("column {c} has zero variance")));
        }
        for row in &mut out {
            row[c] = (row[c] - mean) / sd;
        }
    }
    Ok(out)
}

fn check_dims(points: &[Vec<f64>], dim: usize) -> Result<()> {
    match points.iter().find(|p| p.len() != dim) {
        Some(p) => Err(Error::Shape {
            expected: dim,
            got: p.len(),
        }),
        None => Ok(()),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub wss: f64,
    pub iterations: usize,
    /// Total within-cluster sum of squares after each Lloyd step.
    pub wss_trace: Vec<f64>,
}

impl Clustering {
    /// Relabels clusters in order of first appearance in `assignments`.
    pub fn canonical_assignments(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        self.assignments
            .iter()
            .map(|&a| {
                if map[a] == usize::MAX {
                    map[a] = next;
                    next += 1;
                }
                map[a]
            })
            .collect()
    }
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, sq_dist(point, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn kmeanspp_seed(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // All remaining mass is zero (duplicates): any point will do.
            Err(_) => rng.gen_range(0..points.len()),
        };
        centers.push(points[next].clone());
        let c = centers.last().unwrap();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centers
}

/// Lloyd iterations from the given centers until the assignment is a fixpoint.
fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> Clustering {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut wss_trace = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Empty clusters take the point currently farthest from its centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let (far, _) = points
                    .iter()
                    .zip(&assignments)
                    .enumerate()
                    .filter(|(_, (_, &a))| counts[a] > 1)
                    .map(|(i, (p, &a))| (i, sq_dist(p, &centroids[a])))
                    .fold((usize::MAX, -1.0), |b, cur| if cur.1 > b.1 { cur } else { b });
                if far != usize::MAX {
                    counts[assignments[far]] -= 1;
                    assignments[far] = c;
                    counts[c] = 1;
                    centroids[c] = points[far].clone();
                }
            }
        }
        let wss: f64 = points.iter().zip(&assignments).map(|(p, &a)| sq_dist(p, &centroids[a])).sum();
        if let Some(&prev) = wss_trace.last() {
            debug_assert!(wss <= prev * (1.0 + 1e-12) + 1e-12, "Lloyd step increased wss: {prev} -> {wss}");
        }
        wss_trace.push(wss);

        // Assignment step; keep the current label on ties so the fixpoint test is stable.
        let mut changed = false;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (best, d) = nearest(p, &centroids);
            if best != *a && d < sq_dist(p, &centroids[*a]) {
                *a = best;
                changed = true;
            }
        }
        if !changed || iterations >= MAX_LLOYD_ITERATIONS {
            if changed {
                // Out of iterations: make centroids the means of the final assignment.
                recompute_centroids(points, &assignments, &mut centroids);
            }
            let wss = points.iter().zip(&assignments).map(|(p, &a)| sq_dist(p, &centroids[a])).sum();
            return Clustering {
                k,
                centroids,
                assignments,
                wss,
                iterations,
                wss_trace,
            };
        }
    }
}

fn recompute_centroids(points: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    for (c, centroid) in centroids.iter_mut().enumerate() {
        let members: Vec<&Vec<f64>> = points.iter().zip(assignments).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
        if !members.is_empty() {
            *centroid = (0..dim)
                .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64)
                .collect();
        }
    }
}

fn validate_points(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Size {
            what: "points for k clusters",
            needed: k,
            got: points.len(),
        });
    }
    check_dims(points, points[0].len())
}

/// k-means++ seeding followed by Lloyd iterations. Deterministic in `seed`.
pub fn kmeans_pp(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    validate_points(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeanspp_seed(points, k, &mut rng);
    Ok(lloyd(points, centers))
}

/// Best (lowest wss) of `restarts` seeded k-means++ runs, evaluated in parallel.
pub fn kmeans_best_of(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<Clustering> {
    validate_points(points, k)?;
    let runs: Vec<Clustering> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| kmeans_pp(points, k, seed.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15))))
        .collect::<Result<_>>()?;
    Ok(pick_best(runs))
}

fn pick_best(runs: Vec<Clustering>) -> Clustering {
    runs.into_iter()
        .reduce(|best, c| if c.wss < best.wss { c } else { best })
        .expect("at least one run")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowScan {
    pub ks: Vec<usize>,
    pub wss: Vec<f64>,
    /// Cluster count at the maximum discrete second difference (ties: smaller k).
    pub knee: usize,
    /// Cluster count farthest from the chord joining the curve's end points,
    /// on the curve normalized to the unit square.
    pub knee_chord: usize,
    pub best: Vec<Clustering>,
}

/// Runs best-of-`restarts` clustering for every k in `ks` and locates the knee.
///
/// Each k beyond the first also gets a warm-started run seeded with the best
/// centroids for k-1 plus the point farthest from them, which makes the wss
/// curve non-increasing.
pub fn elbow_scan(points: &[Vec<f64>], ks: std::ops::RangeInclusive<usize>, seed: u64, restarts: usize) -> Result<ElbowScan> {
    let ks: Vec<usize> = ks.collect();
    if ks.is_empty() {
        return Err(Error::Argument("empty k range".into()));
    }
    let (lo, hi) = (ks[0], *ks.last().unwrap());
    if lo == 0 || hi > points.len() {
        return Err(Error::Argument(format!("k range {lo}..={hi} outside [1, {}]", points.len())));
    }
    let mut best: Vec<Clustering> = Vec::with_capacity(ks.len());
    for &k in &ks {
        let mut candidate = kmeans_best_of(points, k, seed.wrapping_add(k as u64), restarts)?;
        if let Some(prev) = best.last() {
            if prev.k + 1 == k {
                let mut centers = prev.centroids.clone();
                let far = points
                    .iter()
                    .max_by(|a, b| nearest(a, &centers).1.total_cmp(&nearest(b, &centers).1))
                    .unwrap()
                    .clone();
                centers.push(far);
                let warm = lloyd(points, centers);
                if warm.wss < candidate.wss {
                    candidate = warm;
                }
            }
        }
        best.push(candidate);
    }
    let wss: Vec<f64> = best.iter().map(|c| c.wss).collect();
    Ok(ElbowScan {
        knee: knee_second_difference(&ks, &wss),
        knee_chord: knee_chord_distance(&ks, &wss),
        ks,
        wss,
        best,
    })
}

/// k maximizing `wss[k-1] - 2 wss[k] + wss[k+1]` over interior points.
pub fn knee_second_difference(ks: &[usize], wss: &[f64]) -> usize {
    if ks.len() < 3 {
        return ks[0];
    }
    let mut best = (ks[1], f64::NEG_INFINITY);
    for i in 1..ks.len() - 1 {
        let d2 = wss[i - 1] - 2.0 * wss[i] + wss[i + 1];
        if d2 > best.1 {
            best = (ks[i], d2);
        }
    }
    best.0
}

pub fn knee_chord_distance(ks: &[usize], wss: &[f64]) -> usize {
    if ks.len() < 3 {
        return ks[0];
    }
    let (k0, k1) = (ks[0] as f64, *ks.last().unwrap() as f64);
    let (w_max, w_min) = (crate::stats::max(wss), crate::stats::min(wss));
    let span = if w_max > w_min { w_max - w_min } else { 1.0 };
    let norm: Vec<(f64, f64)> = ks
        .iter()
        .zip(wss)
        .map(|(&k, &w)| ((k as f64 - k0) / (k1 - k0), (w - w_min) / span))
        .collect();
    let (a, b) = (norm[0], *norm.last().unwrap());
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = (dx * dx + dy * dy).sqrt();
    let mut best = (ks[0], f64::NEG_INFINITY);
    for (i, p) in norm.iter().enumerate() {
        let dist = ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs() / len;
        if dist > best.1 {
            best = (ks[i], dist);
        }
    }
    best.0
}
