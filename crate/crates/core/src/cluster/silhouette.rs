//! Silhouette coefficient over a precomputed distance matrix.

use std::collections::BTreeMap;

use super::dbscan::ClusterLabel;
use super::{ClusterError, DistanceMatrix};

/// Mean silhouette over clustered points; noise points are excluded.
///
/// Requires at least two non-empty clusters. Singleton clusters contribute a
/// silhouette of zero, the usual convention.
pub fn silhouette(matrix: &DistanceMatrix, labels: &[ClusterLabel]) -> Result<f64, ClusterError> {
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (point, label) in labels.iter().enumerate() {
        if let ClusterLabel::Cluster(c) = label {
            members.entry(*c).or_default().push(point);
        }
    }
    if members.len() < 2 {
        return Err(ClusterError::UndefinedScore {
            clusters: members.len(),
        });
    }

    let mut total = 0.0;
    let mut count = 0usize;
    for (&cluster, own) in &members {
        for &point in own {
            let score = if own.len() == 1 {
                0.0
            } else {
                let a = own
                    .iter()
                    .filter(|&&q| q != point)
                    .map(|&q| matrix.get(point, q))
                    .sum::<f64>()
                    / (own.len() - 1) as f64;
                let b = members
                    .iter()
                    .filter(|(&other, _)| other != cluster)
                    .map(|(_, theirs)| {
                        theirs.iter().map(|&q| matrix.get(point, q)).sum::<f64>()
                            / theirs.len() as f64
                    })
                    .fold(f64::INFINITY, f64::min);
                let denom = a.max(b);
                if denom == 0.0 {
                    0.0
                } else {
                    (b - a) / denom
                }
            };
            total += score;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::dbscan::dbscan;

    fn matrix_from_points(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), |i, j| (points[i] - points[j]).abs())
    }

    #[test]
    fn well_separated_tight_groups_score_high() {
        let points = [0.0, 0.05, 0.1, 100.0, 100.05, 100.1];
        let matrix = matrix_from_points(&points);
        let labels = dbscan(&matrix, 0.5, 2);
        let s = silhouette(&matrix, &labels).unwrap();
        assert!(s > 0.9, "got {s}");
    }

    #[test]
    fn score_is_always_in_range() {
        let points = [0.0, 1.0, 2.0, 3.0, 10.0, 11.0];
        let matrix = matrix_from_points(&points);
        let labels = dbscan(&matrix, 1.5, 2);
        let s = silhouette(&matrix, &labels).unwrap();
        assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn single_cluster_is_undefined() {
        let matrix = matrix_from_points(&[0.0, 0.1, 0.2]);
        let labels = dbscan(&matrix, 1.0, 2);
        let err = silhouette(&matrix, &labels).unwrap_err();
        assert!(matches!(err, ClusterError::UndefinedScore { clusters: 1 }));
    }

    #[test]
    fn noise_points_are_excluded() {
        let points = [0.0, 0.1, 5.0, 5.1, 50.0];
        let matrix = matrix_from_points(&points);
        let labels = dbscan(&matrix, 0.5, 2);
        assert!(labels[4].is_noise());
        let s = silhouette(&matrix, &labels).unwrap();
        assert!(s > 0.9, "got {s}");
    }
}
