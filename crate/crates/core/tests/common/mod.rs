#![allow(dead_code)]

use coarsenkit::datagen::{generate_graph, sample_gmrf_features, GraphModel};
use coarsenkit::{GraphData, LoadingMatrix, SolverConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(lo..hi))
}

/// Connected Erdős–Rényi graph with weights in `[1, 10)` and GMRF features.
pub fn er_graph(p: usize, prob: f64, n: usize, seed: u64) -> GraphData {
    let g = generate_graph(&GraphModel::ErdosRenyi { p, prob }, (1.0, 10.0), seed).unwrap();
    let x = sample_gmrf_features(g.laplacian(), n, seed).unwrap();
    g.with_features(Some(x)).unwrap()
}

/// Binary loading matrix with every one of the `k` supernodes nonempty.
pub fn random_assignment(p: usize, k: usize, rng: &mut ChaCha8Rng) -> LoadingMatrix {
    let mut labels: Vec<usize> = (0..p).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    for i in (1..p).rev() {
        labels.swap(i, rng.random_range(0..=i));
    }
    LoadingMatrix::from_assignment(&labels, k).unwrap()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference<F: FnMut(&Array2<f64>) -> f64>(mut f: F, x: &Array2<f64>, h: f64) -> Array2<f64> {
    let mut grad = Array2::zeros(x.dim());
    let mut probe = x.clone();
    for idx in ndarray::indices(x.dim()) {
        let orig = probe[idx];
        probe[idx] = orig + h;
        let up = f(&probe);
        probe[idx] = orig - h;
        let down = f(&probe);
        probe[idx] = orig;
        grad[idx] = (up - down) / (2.0 * h);
    }
    grad
}

/// `max |a − b| / max |b|`.
pub fn relative_max_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let diff = (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Well-conditioned weights and a generous budget, used for convergence checks.
pub fn converging_config(seed: u64) -> SolverConfig {
    SolverConfig {
        gamma: 100.0,
        alpha: 10.0,
        lambda: 1.0,
        ratio: 0.5,
        reduction_ratio: Some(0.5),
        outer_iters: 200,
        inner_iters: 20,
        tol: 1e-10,
        seed,
        ..SolverConfig::default()
    }
}
