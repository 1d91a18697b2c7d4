//! Published dataset sizes and hyperparameters for the benchmark graphs.

use crate::solver::SolverConfig;

/// Size and hyperparameters of one benchmark dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetPreset {
    pub name: &'static str,
    pub p: usize,
    /// Edge count, when published.
    pub m: Option<usize>,
    /// Feature dimension, when published.
    pub n: Option<usize>,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Dirichlet energy of the original graph data.
    pub dirichlet_energy: f64,
}

impl DatasetPreset {
    /// Solver configuration with this preset's weights at coarsening ratio `ratio`.
    pub fn config(&self, ratio: f64, seed: u64) -> SolverConfig {
        SolverConfig {
            gamma: self.gamma,
            alpha: self.alpha,
            lambda: self.lambda,
            ratio,
            seed,
            ..SolverConfig::default()
        }
    }
}

const fn preset(
    name: &'static str,
    p: usize,
    m: Option<usize>,
    n: Option<usize>,
    (lambda, alpha, gamma): (f64, f64, f64),
    dirichlet_energy: f64,
) -> DatasetPreset {
    DatasetPreset { name, p, m, n, lambda, alpha, gamma, dirichlet_energy }
}

/// All known presets.
pub const PRESETS: [DatasetPreset; 11] = [
    preset("cora", 2708, Some(5278), Some(1433), (500.0, 500.0, 716.5), 160963.0),
    preset("citeseer", 3312, Some(4536), Some(3703), (500.0, 500.0, 1851.5), 238074.0),
    preset("polblogs", 1490, Some(16715), Some(5000), (500.0, 500.0, 2500.0), 6113760.0),
    preset("acm", 3025, Some(13128), Some(1870), (500.0, 500.0, 935.0), 1654444.0),
    preset("bunny", 2503, Some(78292), Some(5000), (450.0, 500.0, 2500.0), 12512526.0),
    preset("minnesota", 2642, Some(3304), Some(5000), (500.0, 550.0, 2500.0), 13207844.0),
    preset("airfoil", 4253, Some(12289), Some(5000), (2000.0, 600.0, 2500.0), 21269451.0),
    preset("er", 1000, None, None, (500.0, 500.0, 10.0), 4995707.0),
    preset("ba", 1000, None, None, (500.0, 500.0, 1000.0), 4989862.0),
    preset("ws", 1000, None, None, (500.0, 500.0, 1000.0), 4997509.0),
    preset("rgg", 1000, None, None, (500.0, 500.0, 1000.0), 4989722.0),
];

/// Looks up a preset by case-insensitive name.
pub fn find_preset(name: &str) -> Option<&'static DatasetPreset> {
    PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name))
}
