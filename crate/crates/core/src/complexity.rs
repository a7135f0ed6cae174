//! Fraction of borderline points (N1) from a Euclidean minimum spanning tree.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// Fraction of vertices incident to at least one cross-class MST edge.
    pub n1: f64,
    pub mst_edge_count: usize,
    pub cross_class_edges: usize,
    pub mst_weight: f64,
}

/// MST edges `(u, v, length)` by Prim's algorithm on the complete graph.
///
/// Ties are resolved toward the lowest vertex index.
pub fn euclidean_mst<F: Scalar>(dataset: &Dataset<F>) -> Vec<(usize, usize, f64)> {
    let n = dataset.len();
    if n < 2 {
        return Vec::new();
    }
    let x = &dataset.features;
    let dist = |i: usize, j: usize| -> f64 {
        x.row(i)
            .iter()
            .zip(x.row(j))
            .map(|(&a, &b)| {
                let d = (a - b).as_f64();
                d * d
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for j in 1..n {
        best[j] = dist(0, j);
    }
    for _ in 1..n {
        let mut next = None;
        for j in 0..n {
            if !in_tree[j] && next.is_none_or(|k: usize| best[j] < best[k]) {
                next = Some(j);
            }
        }
        let v = next.expect("graph is complete");
        in_tree[v] = true;
        edges.push((parent[v].min(v), parent[v].max(v), best[v]));
        for j in 0..n {
            if !in_tree[j] {
                let d = dist(v, j);
                if d < best[j] {
                    best[j] = d;
                    parent[j] = v;
                }
            }
        }
    }
    edges
}

/// N1 complexity of `dataset`, measured on its features as given.
///
/// Callers that want scale-free values should standardize first.
pub fn fraction_borderline<F: Scalar>(dataset: &Dataset<F>, distance: Distance) -> ComplexityReport {
    let Distance::Euclidean = distance;
    let n = dataset.len();
    let edges = euclidean_mst(dataset);
    let mut borderline = vec![false; n];
    let mut cross = 0;
    for &(u, v, _) in &edges {
        if dataset.labels[u] != dataset.labels[v] {
            cross += 1;
            borderline[u] = true;
            borderline[v] = true;
        }
    }
    let count = borderline.iter().filter(|&&b| b).count();
    ComplexityReport {
        n1: if n == 0 { 0.0 } else { count as f64 / n as f64 },
        mst_edge_count: edges.len(),
        cross_class_edges: cross,
        mst_weight: edges.iter().map(|e| e.2).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_path() {
        let d = Dataset::<f64>::from_rows(&[[0.0], [1.0], [2.0], [3.0]], vec![1, 1, -1, -1]).unwrap();
        let r = fraction_borderline(&d, Distance::Euclidean);
        assert_eq!(r.mst_edge_count, 3);
        assert_eq!(r.cross_class_edges, 1);
        assert_eq!(r.n1, 0.5);
        assert_eq!(r.mst_weight, 3.0);
    }

    #[test]
    fn two_points_of_different_class() {
        let d = Dataset::<f64>::from_rows(&[[0.0, 0.0], [4.0, 1.0]], vec![1, -1]).unwrap();
        assert_eq!(fraction_borderline(&d, Distance::Euclidean).n1, 1.0);
    }

    #[test]
    fn separated_clusters_have_one_crossing() {
        let rows = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]];
        let d = Dataset::<f64>::from_rows(&rows, vec![1, 1, 1, -1, -1, -1]).unwrap();
        let r = fraction_borderline(&d, Distance::Euclidean);
        assert_eq!(r.cross_class_edges, 1);
        assert!((r.n1 - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn single_class_is_zero() {
        let d = Dataset::<f64>::from_rows(&[[0.0], [1.0], [5.0]], vec![1, 1, 1]).unwrap();
        assert_eq!(fraction_borderline(&d, Distance::Euclidean).n1, 0.0);
    }
}
