"""Smoke test for the `coarsenkit` Python extension.

Build and run from the repository root:

    cargo build --release -p coarsenkit-py --features extension-module
    cp target/release/libcoarsenkit_py.so python/coarsenkit.so
    PYTHONPATH=python python3 python/smoke_test.py
"""

import math
import os
import tempfile

import coarsenkit as ck


def check_toy_graph():
    g = ck.Graph(3, [(0, 1, 1.0), (1, 2, 2.0)], features=[[1.0], [2.0], [3.0]], name="path")
    assert (g.p, g.num_edges) == (3, 2)
    theta = g.laplacian()
    assert theta[1] == [-1.0, 3.0, -2.0]
    assert all(abs(sum(row)) < 1e-12 for row in theta)
    assert g.features() == [[1.0], [2.0], [3.0]]


def check_generators():
    g = ck.generate("er", 60, prob=0.2, seed=3)
    again = ck.generate("er", 60, prob=0.2, seed=3)
    assert g.edges() == again.edges()
    x = ck.sample_gmrf(g, 25, seed=4)
    assert len(x) == 60 and len(x[0]) == 25
    for j in range(25):
        assert abs(sum(row[j] for row in x)) < 1e-8
    noisy = ck.perturb(g, 0.1, seed=5)
    assert noisy.num_edges == g.num_edges + round(0.1 * g.num_edges)
    return g.with_features(x)


def check_coarsening(g):
    for algo in ("fgc", "two-stage", "fgcr"):
        res = ck.coarsen(
            g, algo, 0.5, reduction_ratio=0.5 if algo == "fgcr" else None,
            gamma=100.0, alpha=10.0, lambda_=1.0, outer=30, inner=20, seed=1,
        )
        assert res.k == 30
        assert sorted(set(res.assignment)) == list(range(30))
        obj = res.objective
        assert all(b <= a + 1e-8 * abs(a) for a, b in zip(obj, obj[1:])), algo
        m = res.metrics
        assert 0.0 <= m.epsilon <= 1.0
        assert m.de_coarsened <= m.de_original * (1 + 1e-9)
        assert all(math.isfinite(v) for v in (m.ree, m.he, m.re))
        assert len(res.laplacian()) == 30
        assert len(res.relaxed_loading()) == 60
        again = ck.metrics(g, res.assignment)
        assert abs(again.ree - m.ree) < 1e-9
    gc = ck.coarsen(g.with_features(None), "gc", 0.5, gamma=100.0, lambda_=1.0, outer=30, seed=1)
    assert gc.features() is None


def check_errors(g):
    try:
        ck.coarsen(g, "fgc", 1.5)
    except ck.CoarsenError as e:
        assert "invalid_parameter" in str(e)
    else:
        raise AssertionError("ratio 1.5 was accepted")
    try:
        ck.coarsen(g, "nope", 0.5)
    except ck.CoarsenError:
        pass
    else:
        raise AssertionError("unknown algorithm was accepted")
    try:
        ck.Graph(4, [(0, 1, 1.0), (2, 3, 1.0)])
    except ck.CoarsenError as e:
        assert "disconnected" in str(e).lower()
    else:
        raise AssertionError("disconnected graph was accepted")


def check_io(g):
    with tempfile.TemporaryDirectory() as d:
        edges, feats = os.path.join(d, "edges.txt"), os.path.join(d, "features.csv")
        g.save(edges, feats)
        back = ck.Graph.load(edges, feats)
        assert back.edges() == g.edges()
        assert back.features() == g.features()


def check_clustering():
    karate = ck.karate_club()
    labels = ck.cluster(karate, 2, seed=0)
    errors = ck.misclassified(labels, ck.KARATE_LABELS)
    assert errors <= 8, errors
    return errors


def main():
    check_toy_graph()
    g = check_generators()
    check_coarsening(g)
    check_errors(g)
    check_io(g)
    errors = check_clustering()
    print(f"python smoke test passed (karate misclassified: {errors})")


if __name__ == "__main__":
    main()
