mod common;

use coarsenkit::solver::{
    grad_c_fgc, grad_c_fgcr, grad_c_gc, grad_h_fgcr, grad_w_fgcr, grad_xtilde_fgc, objective_fgc,
    objective_fgcr, objective_gc, Problem,
};
use coarsenkit::GraphData;
use common::{finite_difference, relative_max_error, rng, uniform};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const INSTANCES: u64 = 20;
const STEP: f64 = 1e-6;
const TOLERANCE: f64 = 1e-5;

struct Instance {
    graph: GraphData,
    c: Array2<f64>,
    x_tilde: Array2<f64>,
    w: Array2<f64>,
    h: Array2<f64>,
    weights: (f64, f64, f64),
}

fn instance(seed: u64) -> Instance {
    let mut r: ChaCha8Rng = rng(seed + 500);
    let p = r.random_range(4..=15);
    let k = r.random_range(2..p);
    let n = r.random_range(1..6);
    let d = r.random_range(1..=n);
    let graph = common::er_graph(p, 0.5, n, seed);
    let weights = (r.random_range(0.5..5.0), r.random_range(0.5..5.0), r.random_range(0.5..5.0));
    Instance {
        graph,
        c: uniform(p, k, 0.1, 1.0, &mut r),
        x_tilde: uniform(k, n, -1.0, 1.0, &mut r),
        w: uniform(k, d, -1.0, 1.0, &mut r),
        h: uniform(d, n, -1.0, 1.0, &mut r),
        weights,
    }
}

fn problem(inst: &Instance) -> Problem<'_> {
    let (gamma, alpha, lambda) = inst.weights;
    Problem::new(inst.graph.laplacian(), inst.graph.features().map(|x| x.view()), gamma, alpha, lambda)
}

fn check(name: &str, seed: u64, analytic: &Array2<f64>, numeric: &Array2<f64>) {
    let err = relative_max_error(analytic, numeric);
    assert!(err < TOLERANCE, "{name}, instance {seed}: relative error {err:.3e}");
}

#[test]
fn fgc_loading_gradient() {
    for seed in 0..INSTANCES {
        let inst = instance(seed);
        let pr = problem(&inst);
        let analytic = grad_c_fgc(&pr, &inst.c, inst.x_tilde.view()).unwrap();
        let numeric =
            finite_difference(|c| objective_fgc(&pr, c, inst.x_tilde.view()).unwrap(), &inst.c, STEP);
        check("FGC loading", seed, &analytic, &numeric);
    }
}

#[test]
fn fgc_feature_gradient() {
    for seed in 0..INSTANCES {
        let inst = instance(seed);
        let pr = problem(&inst);
        let analytic = grad_xtilde_fgc(&pr, &inst.c, inst.x_tilde.view()).unwrap();
        let numeric =
            finite_difference(|xt| objective_fgc(&pr, &inst.c, xt.view()).unwrap(), &inst.x_tilde, STEP);
        check("FGC features", seed, &analytic, &numeric);
    }
}

#[test]
fn gc_loading_gradient() {
    for seed in 0..INSTANCES {
        let inst = instance(seed);
        let pr = problem(&inst);
        let analytic = grad_c_gc(&pr, &inst.c).unwrap();
        let numeric = finite_difference(|c| objective_gc(&pr, c).unwrap(), &inst.c, STEP);
        check("GC loading", seed, &analytic, &numeric);
    }
}

#[test]
fn fgcr_loading_gradient() {
    for seed in 0..INSTANCES {
        let inst = instance(seed);
        let pr = problem(&inst);
        let (w, h) = (inst.w.view(), inst.h.view());
        let analytic = grad_c_fgcr(&pr, &inst.c, w, h).unwrap();
        let numeric = finite_difference(|c| objective_fgcr(&pr, c, w, h).unwrap(), &inst.c, STEP);
        check("FGCR loading", seed, &analytic, &numeric);
    }
}

#[test]
fn fgcr_w_gradient() {
    for seed in 0..INSTANCES {
        let inst = instance(seed);
        let pr = problem(&inst);
        let analytic = grad_w_fgcr(&pr, &inst.c, inst.w.view(), inst.h.view()).unwrap();
        let numeric = finite_difference(
            |w| objective_fgcr(&pr, &inst.c, w.view(), inst.h.view()).unwrap(),
            &inst.w,
            STEP,
        );
        check("FGCR W", seed, &analytic, &numeric);
    }
}

#[test]
fn fgcr_h_gradient() {
    for seed in 0..INSTANCES {
        let inst = instance(seed);
        let pr = problem(&inst);
        let analytic = grad_h_fgcr(&pr, &inst.c, inst.w.view(), inst.h.view()).unwrap();
        let numeric = finite_difference(
            |h| objective_fgcr(&pr, &inst.c, inst.w.view(), h.view()).unwrap(),
            &inst.h,
            STEP,
        );
        check("FGCR H", seed, &analytic, &numeric);
    }
}

#[test]
fn fgcr_with_full_rank_factor_equals_fgc() {
    for seed in 0..5 {
        let inst = instance(seed);
        let pr = problem(&inst);
        let n = inst.x_tilde.ncols();
        let identity = Array2::<f64>::eye(n);
        let a = objective_fgcr(&pr, &inst.c, inst.x_tilde.view(), identity.view()).unwrap();
        let b = objective_fgc(&pr, &inst.c, inst.x_tilde.view()).unwrap();
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "instance {seed}: {a} vs {b}");
    }
}
