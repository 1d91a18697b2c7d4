//! Coarsening as clustering: supernode assignments scored against ground-truth labels.

use crate::error::{Error, Result};
use crate::fgc::fgc_solve;
use crate::graph::GraphData;
use crate::solver::{Projection, SolverConfig};

/// Largest class count for which every label permutation is tried.
pub const EXHAUSTIVE_CLASSES: usize = 6;

/// Solver settings for clustering with GMRF-style features.
///
/// The row-scaled projection keeps every row of the loading matrix on the unit sphere,
/// so every node stays attached to some supernode.
pub fn cluster_config(seed: u64) -> SolverConfig {
    SolverConfig {
        gamma: 10.0,
        alpha: 500.0,
        lambda: 10.0,
        outer_iters: 50,
        inner_iters: 100,
        projection: Projection::RowScaled,
        seed,
        ..SolverConfig::default()
    }
}

/// Assigns every node to one of `classes` groups by running FGC with `k = classes`.
pub fn cluster(graph: &GraphData, classes: usize, config: &SolverConfig) -> Result<Vec<usize>> {
    let p = graph.p();
    if classes == 0 || classes >= p {
        return Err(Error::InvalidParameter(format!(
            "class count must satisfy 1 <= C < p, got C = {classes}, p = {p}"
        )));
    }
    if classes == 1 {
        return Ok(vec![0; p]);
    }
    let config = SolverConfig { supernodes: Some(classes), ..config.clone() };
    let result = fgc_solve(graph, &config)?;
    Ok(result.coarsened.loading().assignment().expect("rounded loading is binary").to_vec())
}

/// Misclassified nodes under the best one-to-one matching of predicted to true labels.
///
/// Matching is exhaustive up to [`EXHAUSTIVE_CLASSES`] classes and greedy beyond.
pub fn misclassification_count(predicted: &[usize], truth: &[usize]) -> Result<usize> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Ok(0);
    }
    let size = predicted.iter().chain(truth).max().unwrap() + 1;
    let mut table = vec![vec![0usize; size]; size];
    for (&a, &b) in predicted.iter().zip(truth) {
        table[a][b] += 1;
    }
    let matched = if size <= EXHAUSTIVE_CLASSES {
        best_permutation(&table)
    } else {
        greedy_matching(&table)
    };
    Ok(predicted.len() - matched)
}

fn best_permutation(table: &[Vec<usize>]) -> usize {
    fn search(row: usize, table: &[Vec<usize>], used: &mut [bool], acc: usize, best: &mut usize) {
        if row == table.len() {
            *best = (*best).max(acc);
            return;
        }
        for col in 0..table.len() {
            if !used[col] {
                used[col] = true;
                search(row + 1, table, used, acc + table[row][col], best);
                used[col] = false;
            }
        }
    }
    let mut best = 0;
    search(0, table, &mut vec![false; table.len()], 0, &mut best);
    best
}

fn greedy_matching(table: &[Vec<usize>]) -> usize {
    let n = table.len();
    let mut cells: Vec<(usize, usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (table[i][j], i, j))).collect();
    cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut rows, mut cols) = (vec![false; n], vec![false; n]);
    let mut total = 0;
    for (count, i, j) in cells {
        if !rows[i] && !cols[j] {
            rows[i] = true;
            cols[j] = true;
            total += count;
        }
    }
    total
}

/// Zachary's karate club edges (unweighted, 0-indexed).
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11), (0, 12),
    (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13), (1, 17),
    (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28),
    (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16), (6, 16),
    (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32), (15, 33),
    (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33), (23, 25), (23, 27),
    (23, 29), (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33),
    (27, 33), (28, 31), (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33),
    (32, 33),
];

/// Faction of each karate club member after the split (0 follows the instructor).
pub const KARATE_LABELS: [usize; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1,
    1, 1, 1,
];

/// The karate club graph without features.
pub fn karate_club() -> GraphData {
    let edges: Vec<_> = KARATE_EDGES.iter().map(|&(i, j)| (i, j, 1.0)).collect();
    GraphData::from_edges("karate", 34, &edges, None).expect("karate club is connected")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_invariance() {
        let truth = [0, 0, 1, 1, 2, 2];
        assert_eq!(misclassification_count(&[2, 2, 0, 0, 1, 1], &truth).unwrap(), 0);
        assert_eq!(misclassification_count(&[1, 1, 0, 0, 2, 0], &truth).unwrap(), 1);
        assert_eq!(misclassification_count(&[0, 0, 0, 0, 0, 0], &truth).unwrap(), 4);
    }

    #[test]
    fn single_class_against_constant_labels() {
        assert_eq!(misclassification_count(&[0; 5], &[3; 5]).unwrap(), 0);
        assert_eq!(misclassification_count(&[0; 4], &[0, 0, 1, 1]).unwrap(), 2);
    }

    #[test]
    fn greedy_beyond_exhaustive_limit() {
        let truth: Vec<usize> = (0..16).map(|i| i / 2).collect();
        let predicted: Vec<usize> = truth.iter().map(|&t| (t + 3) % 8).collect();
        assert_eq!(misclassification_count(&predicted, &truth).unwrap(), 0);
    }

    #[test]
    fn karate_shape() {
        let g = karate_club();
        assert_eq!(g.p(), 34);
        assert_eq!(g.laplacian().num_edges(), 78);
        assert_eq!(KARATE_LABELS.iter().filter(|&&l| l == 0).count(), 17);
    }

    #[test]
    fn one_class_is_trivial() {
        let g = karate_club();
        let labels = cluster(&g, 1, &SolverConfig::default()).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
        assert!(cluster(&g, 34, &SolverConfig::default()).is_err());
    }
}
