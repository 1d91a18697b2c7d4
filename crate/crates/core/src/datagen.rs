//! Synthetic graphs, Gaussian Markov random field features, and random edge perturbation.

use std::collections::HashSet;

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphData, RANK_TOL};
use crate::linalg::{eigh, Laplacian};

/// Resampling budget for models whose draws may be disconnected.
pub const CONNECT_RETRIES: usize = 100;

/// Random graph families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum GraphModel {
    /// Every pair is an edge independently with probability `prob`.
    ErdosRenyi { p: usize, prob: f64 },
    /// Preferential attachment, each new node linking to `m_attach` existing nodes.
    BarabasiAlbert { p: usize, m_attach: usize },
    /// Ring lattice of degree `k_ring` with each edge rewired with probability `rewire_prob`.
    WattsStrogatz { p: usize, k_ring: usize, rewire_prob: f64 },
    /// Uniform points in the unit square joined when closer than `radius`.
    RandomGeometric { p: usize, radius: f64 },
    /// Blocks of the given sizes with in-block and cross-block edge probabilities.
    PlantedPartition { sizes: Vec<usize>, p_in: f64, p_out: f64 },
}

impl GraphModel {
    /// Node count of the model.
    pub fn nodes(&self) -> usize {
        match self {
            GraphModel::ErdosRenyi { p, .. }
            | GraphModel::BarabasiAlbert { p, .. }
            | GraphModel::WattsStrogatz { p, .. }
            | GraphModel::RandomGeometric { p, .. } => *p,
            GraphModel::PlantedPartition { sizes, .. } => sizes.iter().sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        let prob_ok = |q: f64| (0.0..=1.0).contains(&q);
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            GraphModel::ErdosRenyi { p, prob } if p < 2 || !prob_ok(prob) => {
                bad(format!("ER needs p >= 2 and prob in [0, 1], got p = {p}, prob = {prob}"))
            }
            GraphModel::BarabasiAlbert { p, m_attach } if m_attach == 0 || m_attach >= p => {
                bad(format!("BA needs 1 <= m < p, got m = {m_attach}, p = {p}"))
            }
            GraphModel::WattsStrogatz { p, k_ring, rewire_prob }
                if k_ring < 2 || k_ring % 2 == 1 || k_ring >= p || !prob_ok(rewire_prob) =>
            {
                bad(format!(
                    "WS needs an even ring degree 2 <= k < p and rewire prob in [0, 1], got k = {k_ring}, p = {p}"
                ))
            }
            GraphModel::RandomGeometric { p, radius } if p < 2 || radius.is_nan() || radius <= 0.0 => {
                bad(format!("RGG needs p >= 2 and a positive radius, got p = {p}, r = {radius}"))
            }
            GraphModel::PlantedPartition { ref sizes, p_in, p_out }
                if sizes.is_empty()
                    || sizes.contains(&0)
                    || sizes.iter().sum::<usize>() < 2
                    || !prob_ok(p_in)
                    || !prob_ok(p_out) =>
            {
                bad("planted partition needs nonempty blocks and probabilities in [0, 1]".into())
            }
            _ => Ok(()),
        }
    }
}

/// Edges of an Erdős–Rényi draw.
pub fn erdos_renyi_edges(p: usize, prob: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Edges of a Barabási–Albert draw seeded by `m_attach` isolated nodes.
pub fn barabasi_albert_edges(p: usize, m_attach: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut repeated: Vec<usize> = Vec::new();
    let mut targets: Vec<usize> = (0..m_attach).collect();
    for source in m_attach..p {
        for &t in &targets {
            edges.push((t, source));
        }
        repeated.extend(&targets);
        repeated.extend(std::iter::repeat_n(source, m_attach));
        let mut chosen = HashSet::with_capacity(m_attach);
        while chosen.len() < m_attach {
            chosen.insert(repeated[rng.random_range(0..repeated.len())]);
        }
        targets = chosen.into_iter().collect();
        targets.sort_unstable();
    }
    edges
}

/// Edges of a Watts–Strogatz draw.
pub fn watts_strogatz_edges(
    p: usize,
    k_ring: usize,
    rewire_prob: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); p];
    for j in 1..=k_ring / 2 {
        for u in 0..p {
            let v = (u + j) % p;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k_ring / 2 {
        for u in 0..p {
            let v = (u + j) % p;
            if rng.random::<f64>() >= rewire_prob || !adj[u].contains(&v) || adj[u].len() >= p - 1 {
                continue;
            }
            let mut w = rng.random_range(0..p);
            while w == u || adj[u].contains(&w) {
                w = rng.random_range(0..p);
            }
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut edges: Vec<(usize, usize)> = adj
        .iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect();
    edges.sort_unstable();
    edges
}

/// Edges and node positions of a random geometric draw in the unit square.
pub fn random_geometric_edges(
    p: usize,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<(usize, usize)>, Vec<[f64; 2]>) {
    let points: Vec<[f64; 2]> = (0..p).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            if dx.hypot(dy) <= radius {
                edges.push((i, j));
            }
        }
    }
    (edges, points)
}

/// Edges of a planted-partition draw; nodes are numbered block by block.
pub fn planted_partition_edges(
    sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    let p = block.len();
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let q = if block[i] == block[j] { p_in } else { p_out };
            if rng.random::<f64>() < q {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Block label of every node of a planted-partition model.
pub fn planted_labels(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect()
}

fn connected(p: usize, edges: &[(usize, usize)]) -> bool {
    let weighted: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
    Laplacian::from_edges(p, &weighted).map(|l| l.component_count() == 1).unwrap_or(false)
}

/// Draws a connected weighted graph with weights uniform in `weight_range`.
pub fn generate_graph(model: &GraphModel, weight_range: (f64, f64), seed: u64) -> Result<GraphData> {
    model.validate()?;
    let (lo, hi) = weight_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight range must satisfy 0 < lo <= hi, got ({lo}, {hi})")));
    }
    let p = model.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..CONNECT_RETRIES {
        let edges = match *model {
            GraphModel::ErdosRenyi { p, prob } => erdos_renyi_edges(p, prob, &mut rng),
            GraphModel::BarabasiAlbert { p, m_attach } => barabasi_albert_edges(p, m_attach, &mut rng),
            GraphModel::WattsStrogatz { p, k_ring, rewire_prob } => {
                watts_strogatz_edges(p, k_ring, rewire_prob, &mut rng)
            }
            GraphModel::RandomGeometric { p, radius } => random_geometric_edges(p, radius, &mut rng).0,
            GraphModel::PlantedPartition { ref sizes, p_in, p_out } => {
                planted_partition_edges(sizes, p_in, p_out, &mut rng)
            }
        };
        if !connected(p, &edges) {
            continue;
        }
        let weighted: Vec<_> = edges
            .iter()
            .map(|&(i, j)| (i, j, if lo == hi { lo } else { rng.random_range(lo..=hi) }))
            .collect();
        return GraphData::from_edges(model_name(model), p, &weighted, None);
    }
    Err(Error::InvalidParameter(format!(
        "no connected draw within {CONNECT_RETRIES} attempts"
    )))
}

fn model_name(model: &GraphModel) -> String {
    match model {
        GraphModel::ErdosRenyi { p, prob } => format!("er_{p}_{prob}"),
        GraphModel::BarabasiAlbert { p, m_attach } => format!("ba_{p}_{m_attach}"),
        GraphModel::WattsStrogatz { p, k_ring, rewire_prob } => format!("ws_{p}_{k_ring}_{rewire_prob}"),
        GraphModel::RandomGeometric { p, radius } => format!("rgg_{p}_{radius}"),
        GraphModel::PlantedPartition { sizes, .. } => format!("planted_{}", sizes.len()),
    }
}

/// `n` independent draws from `N(0, Θ†)` as the columns of a `p × n` matrix.
pub fn sample_gmrf_features(theta: &Laplacian, n: usize, seed: u64) -> Result<Array2<f64>> {
    let components = theta.component_count();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    let (values, vectors) = eigh(&theta.to_dense())?;
    let lmax = values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > RANK_TOL * lmax).collect();
    let mut basis = vectors.select(Axis(1), &keep);
    for (col, &i) in basis.axis_iter_mut(Axis(1)).zip(&keep) {
        let scale = 1.0 / values[i].sqrt();
        let mut col = col;
        col *= scale;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array2::from_shape_simple_fn((keep.len(), n), || rng.sample::<f64, _>(StandardNormal));
    Ok(basis.dot(&noise))
}

/// Adds `round(rate · m)` uniformly chosen absent edges of weight one.
pub fn perturb_edges(graph: &GraphData, rate: f64, seed: u64) -> Result<GraphData> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("perturbation rate must be positive, got {rate}")));
    }
    let theta = graph.laplacian();
    let p = theta.dim();
    let m = theta.num_edges();
    let add = (rate * m as f64).round() as usize;
    if add == 0 {
        return Ok(graph.clone());
    }
    let absent = p * (p - 1) / 2 - m;
    if absent == 0 {
        return Err(Error::InvalidParameter("graph is already complete".into()));
    }
    if add > absent {
        return Err(Error::InvalidParameter(format!(
            "cannot add {add} edges, only {absent} pairs are absent"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added: HashSet<(usize, usize)> = HashSet::with_capacity(add);
    if add * 2 <= absent {
        while added.len() < add {
            let i = rng.random_range(0..p);
            let j = rng.random_range(0..p);
            let e = (i.min(j), i.max(j));
            if i != j && !theta.has_edge(e.0, e.1) {
                added.insert(e);
            }
        }
    } else {
        let pool: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .filter(|&(i, j)| !theta.has_edge(i, j))
            .collect();
        added.extend(sample(&mut rng, pool.len(), add).into_iter().map(|idx| pool[idx]));
    }
    let mut new_edges: Vec<(usize, usize)> = added.into_iter().collect();
    new_edges.sort_unstable();
    let mut edges = theta.edges();
    edges.extend(new_edges.into_iter().map(|(i, j)| (i, j, 1.0)));
    GraphData::from_edges(
        format!("{}_perturbed", graph.name()),
        p,
        &edges,
        graph.features().cloned(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_lattice_without_rewiring() {
        let g = generate_graph(&GraphModel::WattsStrogatz { p: 10, k_ring: 4, rewire_prob: 0.0 }, (1.0, 1.0), 3)
            .unwrap();
        let theta = g.laplacian();
        for i in 0..10 {
            assert_eq!(theta.neighbors(i).count(), 4);
            assert!(theta.has_edge(i, (i + 1) % 10) && theta.has_edge(i, (i + 2) % 10));
        }
    }

    #[test]
    fn geometric_edges_respect_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (edges, pts) = random_geometric_edges(200, 0.1, &mut rng);
        assert!(!edges.is_empty());
        for (i, j) in edges {
            let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            assert!(d <= 0.1);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let model = GraphModel::BarabasiAlbert { p: 60, m_attach: 3 };
        let a = generate_graph(&model, (1.0, 10.0), 11).unwrap();
        let b = generate_graph(&model, (1.0, 10.0), 11).unwrap();
        assert_eq!(a.laplacian(), b.laplacian());
        assert_eq!(a.laplacian().num_edges(), 3 * 57);
    }

    #[test]
    fn weights_within_range() {
        let g = generate_graph(&GraphModel::ErdosRenyi { p: 40, prob: 0.3 }, (1.0, 10.0), 2).unwrap();
        assert!(g.laplacian().edges().iter().all(|&(_, _, w)| (1.0..=10.0).contains(&w)));
    }

    #[test]
    fn sparse_er_fails_to_connect() {
        let err = generate_graph(&GraphModel::ErdosRenyi { p: 50, prob: 0.001 }, (1.0, 2.0), 0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn gmrf_columns_sum_to_zero() {
        let g = generate_graph(&GraphModel::ErdosRenyi { p: 30, prob: 0.3 }, (1.0, 10.0), 1).unwrap();
        let x = sample_gmrf_features(g.laplacian(), 20, 4).unwrap();
        for col in x.columns() {
            assert!(col.sum().abs() < 1e-9);
        }
    }

    #[test]
    fn perturbation_counts() {
        let g = generate_graph(&GraphModel::ErdosRenyi { p: 60, prob: 0.2 }, (1.0, 10.0), 8).unwrap();
        let m = g.laplacian().num_edges();
        let perturbed = perturb_edges(&g, 0.1, 9).unwrap();
        let expected = m + (0.1 * m as f64).round() as usize;
        assert_eq!(perturbed.laplacian().num_edges(), expected);
        for (i, j, w) in g.laplacian().edges() {
            assert!(perturbed.laplacian().neighbors(i).any(|(v, x)| v == j && x == w));
        }
        let tiny = perturb_edges(&g, 1e-6, 9).unwrap();
        assert_eq!(tiny.laplacian(), g.laplacian());
        let complete = generate_graph(&GraphModel::ErdosRenyi { p: 6, prob: 1.0 }, (1.0, 1.0), 0).unwrap();
        assert!(perturb_edges(&complete, 0.5, 0).is_err());
    }
}
