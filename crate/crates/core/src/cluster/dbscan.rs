//! Density-based clustering over a precomputed distance matrix.

use super::DistanceMatrix;

/// Cluster assignment of one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn is_noise(&self) -> bool {
        matches!(self, ClusterLabel::Noise)
    }

    /// Integer form used in serialized artifacts: cluster id, or -1 for noise.
    pub fn as_i64(&self) -> i64 {
        match self {
            ClusterLabel::Cluster(c) => *c as i64,
            ClusterLabel::Noise => -1,
        }
    }
}

/// Classic DBSCAN over a precomputed matrix.
///
/// The neighborhood of a point contains every point within `radius`
/// (inclusive), itself included; a point is core when the neighborhood has at
/// least `min_pts` members. Points are visited in index order, so labels are
/// deterministic.
pub fn dbscan(matrix: &DistanceMatrix, radius: f64, min_pts: usize) -> Vec<ClusterLabel> {
    let n = matrix.len();
    let neighbors = |p: usize| -> Vec<usize> {
        (0..n).filter(|&q| matrix.get(p, q) <= radius).collect()
    };

    let mut labels = vec![ClusterLabel::Noise; n];
    let mut visited = vec![false; n];
    let mut next_cluster = 0usize;

    for point in 0..n {
        if visited[point] {
            continue;
        }
        visited[point] = true;
        let seed_neighbors = neighbors(point);
        if seed_neighbors.len() < min_pts {
            continue; // stays noise unless a later cluster reaches it
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[point] = ClusterLabel::Cluster(cluster);

        let mut queue: Vec<usize> = seed_neighbors;
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            if labels[q].is_noise() {
                labels[q] = ClusterLabel::Cluster(cluster);
            }
            if !visited[q] {
                visited[q] = true;
                let q_neighbors = neighbors(q);
                if q_neighbors.len() >= min_pts {
                    queue.extend(q_neighbors);
                }
            }
        }
    }
    labels
}
