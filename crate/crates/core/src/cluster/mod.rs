//! Compression of the weak-correlation KPI set.
//!
//! KPIs are chunked by domain attribute; per chunk, a pairwise DTW matrix
//! feeds a KNN curve, the heuristic radius estimator and DBSCAN, and each
//! cluster contributes its medoid as a representative. Noise points stay in
//! the evaluation set as their own representatives — dropping them would
//! silently exclude KPIs from the final score.

mod dbscan;
mod radius;
mod silhouette;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{dtw, DtwConfig, MetricError};
use crate::model::KpiBundle;

pub use dbscan::{dbscan, ClusterLabel};
pub use radius::{estimate_radius, RadiusEstimatorConfig};
pub use silhouette::silhouette;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k = {k} must be smaller than the number of points ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("silhouette undefined for {clusters} cluster(s)")]
    UndefinedScore { clusters: usize },
    #[error("unknown KPI id {id}")]
    UnknownId { id: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Symmetric distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Build from a symmetric distance function (only `i < j` is evaluated).
    pub fn from_fn(n: usize, mut dist: impl FnMut(usize, usize) -> f64) -> Self {
        let mut matrix = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                matrix.set(i, j, dist(i, j));
            }
        }
        matrix
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }
}

/// Pairwise DTW distances; pairs are computed in parallel.
pub fn pairwise_dtw_matrix<S: AsRef<[f64]> + Sync>(
    series: &[S],
    cfg: &DtwConfig,
) -> Result<DistanceMatrix, MetricError> {
    let n = series.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let distances: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(i, j)| dtw(series[i].as_ref(), series[j].as_ref(), cfg).map(|d| ((i, j), d)))
        .collect::<Result<_, _>>()?;
    let mut matrix = DistanceMatrix::zeros(n);
    for ((i, j), d) in distances {
        matrix.set(i, j, d);
    }
    Ok(matrix)
}

/// Distances to each point's k-th nearest neighbour, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnCurve {
    k: usize,
    distances: Vec<f64>,
}

impl KnnCurve {
    /// Sorts `distances` into descending order.
    pub fn new(k: usize, mut distances: Vec<f64>) -> Self {
        distances.sort_by(|a, b| b.partial_cmp(a).expect("finite distances"));
        Self { k, distances }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }
}

/// KNN curve of a distance matrix: for every point the distance to its k-th
/// nearest other point, collected and sorted descending.
pub fn knn_curve(matrix: &DistanceMatrix, k: usize) -> Result<KnnCurve, ClusterError> {
    let n = matrix.len();
    if k >= n {
        return Err(ClusterError::KTooLarge { k, n });
    }
    let mut kth = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| matrix.get(i, j)).collect();
        row.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        kth.push(row[k - 1]);
    }
    Ok(KnnCurve::new(k, kth))
}

/// Medoid of a cluster: the member minimizing the summed distance to all
/// members, ties broken by the lowest index.
pub fn medoid(members: &[usize], matrix: &DistanceMatrix) -> Option<usize> {
    members
        .iter()
        .map(|&candidate| {
            let total: f64 = members.iter().map(|&other| matrix.get(candidate, other)).sum();
            (candidate, total)
        })
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("finite distances"))
        .map(|(candidate, _)| candidate)
}

/// Assign every point to the nearest medoid (by matrix distance). Returns the
/// position of the chosen medoid in `medoids` for each point.
pub fn assign_to_nearest_medoid(matrix: &DistanceMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..matrix.len())
        .map(|point| {
            medoids
                .iter()
                .enumerate()
                .min_by(|(_, &a), (_, &b)| {
                    matrix
                        .get(point, a)
                        .partial_cmp(&matrix.get(point, b))
                        .expect("finite distances")
                })
                .map(|(idx, _)| idx)
                .expect("at least one medoid")
        })
        .collect()
}

/// Clustering parameters of the compression stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    /// DBSCAN core threshold; also the k of the KNN curve.
    pub min_pts: usize,
    pub max_radius: f64,
    pub len_thresh: usize,
    pub slope_thresh: f64,
    pub slope_diff_thresh: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let estimator = RadiusEstimatorConfig::default();
        Self {
            min_pts: 4,
            max_radius: estimator.max_radius,
            len_thresh: estimator.len_thresh,
            slope_thresh: estimator.slope_thresh,
            slope_diff_thresh: estimator.slope_diff_thresh,
        }
    }
}

impl ClusterConfig {
    pub fn estimator(&self) -> RadiusEstimatorConfig {
        RadiusEstimatorConfig {
            max_radius: self.max_radius,
            len_thresh: self.len_thresh,
            slope_thresh: self.slope_thresh,
            slope_diff_thresh: self.slope_diff_thresh,
        }
    }
}

/// Clustering outcome of one domain chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// KPI id to cluster id; -1 marks noise.
    pub labels: BTreeMap<String, i64>,
    pub radius: f64,
    pub min_pts: usize,
    /// Cluster id to the medoid KPI id.
    pub medoid_ids: BTreeMap<usize, String>,
    /// Undefined (None) when the chunk has fewer than two clusters.
    pub silhouette: Option<f64>,
}

/// Compressed weak-correlation set: representative ids plus per-chunk detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressOutput {
    /// Representative KPI ids (cluster medoids plus noise points), catalog order.
    pub kw: Vec<String>,
    /// Per-domain clustering results.
    pub chunks: BTreeMap<String, ClusterResult>,
}

/// Cluster the weak-correlation candidates per domain chunk and extract the
/// representative set.
///
/// Candidates must be preprocessed with standardisation. Chunks with at most
/// `min_pts` members skip the KNN estimate (the curve needs more points) and
/// run DBSCAN at `max_radius` directly.
pub fn compress(
    bundle: &KpiBundle,
    weak_candidates: &[String],
    cluster_cfg: &ClusterConfig,
    dtw_cfg: &DtwConfig,
) -> Result<CompressOutput, ClusterError> {
    let mut chunks: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for id in weak_candidates {
        let entry = bundle
            .catalog()
            .get(id)
            .ok_or_else(|| ClusterError::UnknownId { id: id.clone() })?;
        chunks.entry(entry.attrs.domain.clone()).or_default().push(id.clone());
    }

    let mut results: BTreeMap<String, ClusterResult> = BTreeMap::new();
    let mut representatives: Vec<String> = Vec::new();

    for (domain, ids) in chunks {
        let series: Vec<&[f64]> = ids
            .iter()
            .map(|id| bundle.series(id).expect("validated above").values())
            .collect();
        let matrix = pairwise_dtw_matrix(&series, dtw_cfg)?;

        let radius = if ids.len() > cluster_cfg.min_pts {
            let curve = knn_curve(&matrix, cluster_cfg.min_pts)?;
            estimate_radius(&curve, &cluster_cfg.estimator())
        } else {
            cluster_cfg.max_radius
        };

        let labels = dbscan(&matrix, radius, cluster_cfg.min_pts);

        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, label) in labels.iter().enumerate() {
            if let ClusterLabel::Cluster(c) = label {
                members.entry(*c).or_default().push(idx);
            }
        }
        let mut medoid_ids = BTreeMap::new();
        for (&cluster, member_indices) in &members {
            let m = medoid(member_indices, &matrix).expect("non-empty cluster");
            medoid_ids.insert(cluster, ids[m].clone());
        }

        for (idx, label) in labels.iter().enumerate() {
            match label {
                ClusterLabel::Noise => representatives.push(ids[idx].clone()),
                ClusterLabel::Cluster(c) => {
                    if medoid_ids[c] == ids[idx] {
                        representatives.push(ids[idx].clone());
                    }
                }
            }
        }

        let score = silhouette(&matrix, &labels).ok();
        results.insert(
            domain,
            ClusterResult {
                labels: ids
                    .iter()
                    .zip(&labels)
                    .map(|(id, label)| (id.clone(), label.as_i64()))
                    .collect(),
                radius,
                min_pts: cluster_cfg.min_pts,
                medoid_ids,
                silhouette: score,
            },
        );
    }

    // Catalog order keeps the representative list stable across runs.
    representatives.sort_by_key(|id| bundle.catalog().index_of(id).unwrap_or(usize::MAX));
    Ok(CompressOutput {
        kw: representatives,
        chunks: results,
    })
}
