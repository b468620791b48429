"""Regularization path: grid exactness, sweep mechanics, scoring."""

import math

import numpy as np
import pytest

from covclust import Dataset, SolverConfig
from covclust.errors import DomainError, FitError, SolverError
from covclust.path import PathRecord, nu_grid, run_path, score_path
from covclust.synth import make_ground_truth, make_similarity, sample
from covclust.data import SimilarityGraph
from conftest import make_dataset, make_graph


def planted_problem(n=120, d=4, K=2, c=2, seed=0, mode="agree"):
    truth = make_ground_truth(d=d, c=c, K=K)
    truth = truth.with_similarity(make_similarity(truth, mode))
    data = sample(truth, n, seed=seed)
    graph = SimilarityGraph.from_dense(truth.S * (1 - np.eye(d)))
    return truth, data, graph


class TestNuGrid:
    def test_shape_and_descent(self):
        g = nu_grid(100, a_max=25)
        assert len(g) == 26
        assert g[0] == 100.0
        assert all(x > y for x, y in zip(g, g[1:]))

    def test_decade_ratio_is_exactly_two(self):
        g = nu_grid(977, a_max=99)
        for a in range(len(g) - 10):
            assert g[a] == 2.0 * g[a + 10]  # bitwise, not approximate

    def test_matches_direct_formula(self):
        g = nu_grid(50, a_max=40)
        want = [50 * 2 ** (-a / 10) for a in range(41)]
        np.testing.assert_allclose(g, want, rtol=1e-14)

    def test_validation(self):
        with pytest.raises(DomainError):
            nu_grid(0)
        with pytest.raises(DomainError):
            nu_grid(10, a_max=-1)


class TestRunPath:
    def test_sweeps_descending_with_warm_starts(self):
        _, data, graph = planted_problem()
        cfg = SolverConfig(nu=0.0)
        grid = [8.0, 0.5, 64.0, 2.0]
        records = run_path(data, graph, cfg, grid)
        assert [r.nu for r in records] == [64.0, 8.0, 2.0, 0.5]
        assert all(r.converged for r in records)
        assert all(not r.failed for r in records)

    def test_extremes_bracket_the_path(self):
        # The agreeing similarity graph has no cross-block edges, so
        # overwhelming fusion collapses exactly onto the planted blocks
        # (fusion can never cross graph components); nu = 0 splits all.
        truth, data, graph = planted_problem()
        cfg = SolverConfig(nu=0.0)
        records = run_path(data, graph, cfg, [1e5, 0.0])
        assert records[0].clustering.key() == truth.clustering.key()
        assert records[-1].clustering.m == graph.d  # no fusion at nu = 0

    def test_duplicate_flagging(self):
        _, data, graph = planted_problem()
        cfg = SolverConfig(nu=0.0)
        records = run_path(data, graph, cfg, [1e5, 9e4, 0.0])
        assert not records[0].duplicate_of_prev
        assert records[1].duplicate_of_prev  # still everything fused
        assert not records[2].duplicate_of_prev

    def test_early_exit_stops_after_full_split(self):
        _, data, graph = planted_problem()
        cfg = SolverConfig(nu=0.0)
        grid = [50.0, 0.001, 0.0005, 0.0001]
        records = run_path(data, graph, cfg, grid, early_exit=True)
        ms = [r.clustering.m for r in records]
        assert graph.d in ms
        assert len(records) < len(grid)
        assert ms.index(graph.d) == len(records) - 1

    def test_callback_sees_every_record(self):
        _, data, graph = planted_problem()
        seen = []
        records = run_path(data, graph, SolverConfig(nu=0.0), [4.0, 1.0],
                           callback=lambda rec, st: seen.append(
                               (rec.nu, st is not None)))
        assert seen == [(4.0, True), (1.0, True)]

    def test_failure_marks_record_and_restarts_cold(self, monkeypatch):
        _, data, graph = planted_problem()
        import covclust.path as pm
        real_solve = pm.solve
        calls = []

        def flaky(data_, graph_, cfg, warm_start=None, callback=None):
            calls.append((cfg.nu, warm_start is not None))
            if cfg.nu == pytest.approx(2.0):
                raise SolverError("injected", diagnostics={"k": 3})
            return real_solve(data_, graph_, cfg, warm_start=warm_start,
                              callback=callback)

        monkeypatch.setattr(pm, "solve", flaky)
        with pytest.warns(UserWarning, match="nu=2"):
            records = pm.run_path(data, graph, SolverConfig(nu=0.0),
                                  [4.0, 2.0, 1.0])
        assert [r.failed for r in records] == [False, True, False]
        assert records[1].iterations == 3
        assert records[1].clustering is None
        assert not records[1].converged
        # the nu=1 solve after the failure must not reuse a warm state
        assert calls == [(4.0, False), (2.0, True), (1.0, False)]

    def test_warm_and_cold_paths_agree_on_clusterings(self):
        _, data, graph = planted_problem(n=80)
        cfg = SolverConfig(nu=0.0, eps=1e-6, max_iter=2000)
        grid = nu_grid(data.n, a_max=49)[::10]
        warm = run_path(data, graph, cfg, grid, warm_start=True)
        cold = run_path(data, graph, cfg, grid, warm_start=False)
        for a, b in zip(warm, cold):
            assert a.converged and b.converged
            assert a.clustering.key() == b.clustering.key()

    def test_initial_state_seeds_first_solve(self):
        _, data, graph = planted_problem()
        cfg = SolverConfig(nu=0.0)
        first = run_path(data, graph, cfg, [4.0])
        from covclust.admm import init_state, solve as solve_fn
        state, _ = solve_fn(data, graph,
                            SolverConfig(nu=4.0))
        resumed = run_path(data, graph, cfg, [2.0], initial_state=state)
        cold = run_path(data, graph, cfg, [2.0])
        assert resumed[0].clustering.key() == cold[0].clustering.key()
        assert resumed[0].iterations <= cold[0].iterations

    def test_grid_validation(self):
        _, data, graph = planted_problem()
        cfg = SolverConfig(nu=0.0)
        with pytest.raises(DomainError):
            run_path(data, graph, cfg, [])
        with pytest.raises(DomainError):
            run_path(data, graph, cfg, [1.0, -0.5])


class TestScorePath:
    def test_shared_scores_for_identical_clusterings(self):
        truth, data, graph = planted_problem()
        cfg = SolverConfig(nu=0.0)
        records = run_path(data, graph, cfg, [1e5, 9e4, 0.0])
        out = score_path(data, records, sigma=1.0)
        assert out is records
        assert records[0].score is records[1].score  # same object, one fit
        assert records[0].score is not records[2].score
        assert records[0].score.m == truth.clustering.m
        assert records[2].score.m == graph.d

    def test_best_marking_prefers_evidence_then_m_then_nu(self):
        _, data, graph = planted_problem(n=400)
        cfg = SolverConfig(nu=0.0)
        grid = nu_grid(data.n, a_max=99)[::10]
        records = score_path(data, run_path(data, graph, cfg, grid),
                             sigma=1.0)
        scored = [r for r in records if r.score is not None]
        best = [r for r in scored if r.is_best]
        assert best, "some record must be marked best"
        top = max(s.score.log_marginal for s in scored)
        assert all(r.score.log_marginal == top for r in best)
        keys = {r.clustering.key() for r in best}
        assert len(keys) == 1

    def test_failed_records_left_unscored(self):
        _, data, graph = planted_problem()
        records = [PathRecord(nu=5.0, clustering=None, converged=False,
                              iterations=0, seconds=0.0, failed=True,
                              error="boom")]
        out = score_path(data, records, sigma=1.0)
        assert out[0].score is None and not out[0].is_best

    def test_scoring_failure_warns_and_skips(self, monkeypatch):
        _, data, graph = planted_problem()
        records = run_path(data, graph, SolverConfig(nu=0.0), [1e5, 0.0])
        import covclust.path as pm

        def explode(data_, clustering, sigma, nu_origin=math.nan):
            raise FitError("forced")

        monkeypatch.setattr(pm, "log_marginal", explode)
        with pytest.warns(UserWarning, match="scoring failed"):
            out = pm.score_path(data, records, sigma=1.0)
        assert all(r.score is None for r in out)
        assert all(not r.is_best for r in out)

    def test_jsonable_round_trippable_fields(self):
        _, data, graph = planted_problem()
        records = score_path(
            data, run_path(data, graph, SolverConfig(nu=0.0), [2.0]),
            sigma=1.0)
        obj = records[0].to_jsonable()
        assert obj["nu"] == 2.0
        assert "seconds" not in obj  # wall time stays out of artifacts
        assert obj["m"] == records[0].clustering.m
        assert "score" in obj and "log_marginal" in obj["score"]
        slim = records[0].to_jsonable(include_score=False)
        assert "score" not in slim


class TestPathRecoversPlantedStructure:
    def test_agreeing_similarity_finds_truth_on_path(self):
        truth, data, graph = planted_problem(n=240, d=6, K=3, seed=1)
        cfg = SolverConfig(nu=0.0)
        grid = nu_grid(data.n, a_max=149)[::10]
        records = run_path(data, graph, cfg, grid, early_exit=True)
        keys = {r.clustering.key() for r in records if r.converged}
        assert truth.clustering.key() in keys
