import json

import numpy as np
import pytest

from conftest import make_synth, random_orthonormal
from mpac import MpacConfig, evaluate_objective, initialize, run, score
from mpac.dataset import MultiViewDataset, ViewMatrix
from mpac.errors import InvalidInputError
from mpac.graph import build_factorization, build_laplacian
from mpac.solver import MpacState, ViewState, grid_sweep
from mpac.alignment import update_indicator


def one_hot(assign, c):
    y = np.zeros((len(assign), c))
    y[np.arange(len(assign)), assign] = 1.0
    return y


def manual_state(rng, n=12, c=2, v=2, alpha=1.0, zero_graph=True):
    views = []
    for i in range(v):
        x = rng.normal(size=(3, n))
        fact = build_factorization(x, alpha)
        if zero_graph:
            s = np.zeros((n, n))
        else:
            s = rng.normal(size=(n, n)) * 0.1
            np.fill_diagonal(s, 0.0)
        w_sym, lap = build_laplacian(s)
        from mpac.graph import SimilarityGraph

        views.append(
            ViewState(
                x=x,
                fact=fact,
                graph=SimilarityGraph(s=s, w_sym=w_sym, laplacian=lap),
                f=random_orthonormal(rng, n, c),
                r=random_orthonormal(rng, c, c),
            )
        )
    y = one_hot(rng.integers(0, c, size=n), c)
    w = np.full(v, 1.0 / v)
    return MpacState(views=views, y=y, w=w)


class TestConfig:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            MpacConfig(c=1)
        with pytest.raises(InvalidInputError):
            MpacConfig(c=3, alpha=0.0)
        with pytest.raises(InvalidInputError):
            MpacConfig(c=3, init="kmeans")


class TestInitialize:
    @pytest.mark.parametrize("mode", ["random", "spectral"])
    def test_deterministic(self, mode):
        ds = make_synth(seed=4, n_per_cluster=15)
        cfg = MpacConfig(c=3, seed=9, init=mode)
        s1 = initialize(ds, cfg)
        s2 = initialize(ds, cfg)
        np.testing.assert_array_equal(s1.y, s2.y)
        for a, b in zip(s1.views, s2.views):
            np.testing.assert_array_equal(a.f, b.f)
            np.testing.assert_array_equal(a.graph.s, b.graph.s)

    @pytest.mark.parametrize("mode", ["random", "spectral"])
    def test_embeddings_orthonormal(self, mode):
        ds = make_synth(seed=4, n_per_cluster=15)
        state = initialize(ds, MpacConfig(c=3, seed=0, init=mode))
        for vs in state.views:
            assert np.linalg.norm(vs.f.T @ vs.f - np.eye(3)) <= 1e-10
            np.testing.assert_array_equal(vs.r, np.eye(3))
        np.testing.assert_allclose(state.w, 1.0 / ds.n_views)

    def test_spectral_init_separates_clean_components(self):
        ds = make_synth(seed=1, n_per_cluster=20, c=3, v=2, noise=0.0)
        state = initialize(ds, MpacConfig(c=3, seed=1))
        for vs in state.views:
            for k in range(3):
                ind = (ds.labels == k).astype(float)
                ind /= np.linalg.norm(ind)
                resid = np.linalg.norm(ind - vs.f @ (vs.f.T @ ind))
                assert resid <= 1e-8
        assert score(ds.labels, np.argmax(state.y, axis=1)).ari == 1.0

    def test_c_larger_than_n_rejected(self):
        ds = make_synth(seed=0, n_per_cluster=2, c=2, v=1)
        with pytest.raises(InvalidInputError):
            initialize(ds, MpacConfig(c=5))


class TestObjective:
    def test_zero_coefficient_reduction(self, rng):
        state = manual_state(rng, zero_graph=True)
        cfg = MpacConfig(c=2, beta=0.0, gamma=0.0)
        terms = evaluate_objective(state, cfg)
        expected = sum(np.linalg.norm(vs.x) ** 2 for vs in state.views)
        assert terms.total == pytest.approx(expected, rel=1e-12)
        assert terms.regularizer == 0.0
        assert terms.spectral == 0.0
        assert terms.alignment == 0.0

    def test_gamma_zero_decouples_alignment_blocks(self, rng):
        state = manual_state(rng, zero_graph=False)
        cfg = MpacConfig(c=2, gamma=0.0)
        before = evaluate_objective(state, cfg).total
        state.y = one_hot(rng.integers(0, 2, size=state.y.shape[0]), 2)
        state.w = np.array([0.9, 0.1])
        for vs in state.views:
            vs.r = random_orthonormal(rng, 2, 2)
        assert evaluate_objective(state, cfg).total == pytest.approx(
            before, rel=1e-12
        )

    def test_matches_independent_recomputation(self, rng):
        state = manual_state(rng, zero_graph=False)
        cfg = MpacConfig(c=2, alpha=0.8, beta=1.7, gamma=0.4)
        terms = evaluate_objective(state, cfg)
        se = reg = spec = align = 0.0
        for vs, wi in zip(state.views, state.w):
            se += np.sum((vs.x - vs.x @ vs.graph.s) ** 2)
            reg += cfg.alpha * np.sum(vs.graph.s**2)
            spec += cfg.beta * np.trace(vs.f.T @ vs.graph.laplacian @ vs.f)
            align += cfg.gamma / wi * np.sum((state.y - vs.f @ vs.r) ** 2)
        assert terms.self_expression == pytest.approx(se, abs=1e-10)
        assert terms.regularizer == pytest.approx(reg, abs=1e-10)
        assert terms.spectral == pytest.approx(spec, abs=1e-10)
        assert terms.alignment == pytest.approx(align, abs=1e-10)
        assert terms.total == pytest.approx(se + reg + spec + align, abs=1e-10)


class TestRun:
    def test_single_view_weight_stays_one(self):
        ds = make_synth(seed=2, n_per_cluster=15, v=1)
        res = run(ds, MpacConfig(c=3, seed=2))
        np.testing.assert_array_equal(res.w, [1.0])

    def test_dominant_gamma_final_y_is_score_argmax(self):
        # with one view the weight is 1 throughout, so the final consensus
        # must equal the indicator update computed from the final state
        ds = make_synth(seed=5, n_per_cluster=10, v=1)
        captured = {}

        def keep_last(state, sweep):
            captured["f"] = state.views[0].f.copy()
            captured["r"] = state.views[0].r.copy()

        res = run(
            ds, MpacConfig(c=3, gamma=1e6, seed=5), sweep_callback=keep_last
        )
        expected = update_indicator(
            [captured["f"]], [captured["r"]], np.array([1.0])
        )
        np.testing.assert_array_equal(res.y, expected)

    def test_labels_consistent_and_discrete(self):
        ds = make_synth(seed=6, n_per_cluster=10)
        res = run(ds, MpacConfig(c=3, seed=6))
        assert set(np.unique(res.y)) <= {0.0, 1.0}
        assert np.all(res.y.sum(axis=1) == 1.0)
        np.testing.assert_array_equal(res.labels, np.argmax(res.y, axis=1))

    def test_deterministic_across_thread_counts(self):
        ds = make_synth(seed=7, n_per_cluster=15, v=3)
        cfg = MpacConfig(c=3, seed=7)
        res1 = run(ds, cfg, threads=1)
        res4 = run(ds, cfg, threads=4)
        res1b = run(ds, cfg, threads=1)
        np.testing.assert_array_equal(res1.labels, res4.labels)
        np.testing.assert_array_equal(res1.labels, res1b.labels)
        np.testing.assert_array_equal(res1.y, res4.y)
        np.testing.assert_allclose(res1.w, res4.w, atol=0)

    def test_permutation_equivariance_of_partition(self):
        base = make_synth(seed=3, n_per_cluster=10, c=2)
        rng = np.random.default_rng(0)
        perm = rng.permutation(base.n_samples)
        views_p = tuple(
            ViewMatrix(v.data[:, perm], v.view_index) for v in base.views
        )
        ds_p = MultiViewDataset(views=views_p, labels=base.labels[perm])
        cfg = MpacConfig(c=2, seed=3)
        r1 = run(base, cfg)
        r2 = run(ds_p, cfg)
        # cluster ids may swap (eigenvector sign convention); the induced
        # partition must match exactly
        assert score(r1.labels[perm], r2.labels).ari == 1.0

    def test_objective_trace_monotone_small(self):
        ds = make_synth(seed=8, n_per_cluster=10, v=2, noise=0.1)
        res = run(ds, MpacConfig(c=3, seed=8))
        totals = [t.total for t in res.objective_trace]
        for a, b in zip(totals, totals[1:]):
            assert b <= a + 1e-8 * max(abs(a), 1.0)

    def test_trace_file_and_callback(self, tmp_path):
        ds = make_synth(seed=9, n_per_cluster=8)
        trace = tmp_path / "trace.jsonl"
        seen = []
        res = run(
            ds,
            MpacConfig(c=3, seed=9),
            trace_file=trace,
            sweep_callback=lambda state, sweep: seen.append(sweep),
        )
        lines = [json.loads(l) for l in trace.read_text().splitlines()]
        assert len(lines) == res.iterations_run == len(seen)
        assert {"sweep", "total", "y_changed", "weights"} <= set(lines[0])

    def test_connectivity_reported_per_view(self):
        ds = make_synth(seed=10, n_per_cluster=8, v=2)
        res = run(ds, MpacConfig(c=3, seed=10))
        assert len(res.connectivity) == 2
        for count, eigvals in res.connectivity:
            assert 0 <= count <= 3
            assert eigvals.shape == (3,)


class TestGridSweep:
    def test_single_cell_equals_single_run(self):
        ds = make_synth(seed=11, n_per_cluster=8)
        cfg = MpacConfig(c=3, seed=11)
        rows = grid_sweep(ds, cfg, [1.0], [1.0], [1.0])
        single = run(ds, cfg)
        assert len(rows) == 1
        assert rows[0]["status"] == "ok"
        assert rows[0]["objective"] == pytest.approx(
            single.objective_trace[-1].total, rel=1e-12
        )
        assert rows[0]["metrics"].ari == score(ds.labels, single.labels).ari

    def test_full_grid_bookkeeping(self):
        ds = make_synth(seed=12, n_per_cluster=6)
        rows = grid_sweep(
            ds, MpacConfig(c=3, seed=12), [0.5, 1.0], [0.5, 1.0], [0.5, 1.0]
        )
        assert len(rows) == 8
        assert all(np.isfinite(r["objective"]) for r in rows)

    def test_failing_cell_recorded(self):
        ds = make_synth(seed=13, n_per_cluster=6)
        rows = grid_sweep(ds, MpacConfig(c=3, seed=13), [-1.0, 1.0], [1.0], [1.0])
        statuses = [r["status"] for r in rows]
        assert statuses[0].startswith("error")
        assert statuses[1] == "ok"

    def test_gamma_grid_reports_metrics(self):
        ds = make_synth(seed=14, n_per_cluster=8)
        rows = grid_sweep(ds, MpacConfig(c=3, seed=14), [1.0], [1.0], [1e-6, 1e-3])
        assert len(rows) == 2
        for r in rows:
            assert r["metrics"] is not None
            assert -1.0 <= r["metrics"].ari <= 1.0
