"""Consensus solver: subproblem oracles, limits, and determinism."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize

from covclust import (Dataset, ModelParams, SimilarityGraph, SolverConfig,
                      extract_clustering, solve)
from covclust.admm import (AdmmState, aux_update, compute_aggregates,
                           dual_update, init_state, primal_objective_g,
                           primal_update, residuals, stop_threshold)
from covclust.errors import InputError, SolverError
from covclust.kernels import available_backends
from covclust.likelihood import full_objective, penalized_nll
from conftest import make_dataset, make_graph

BOTH_BACKENDS = len(available_backends()) >= 2


def small_problem(rng, n=40, d=4, c=2, p=0.7):
    data = make_dataset(rng, n, d, c)
    graph = make_graph(rng, d, p=p)
    return data, graph


def direct_ridge_fit(data, lam, tol=1e-10):
    """Penalized MLE by generic scipy optimization (oracle for nu = 0)."""
    c, d = data.c, data.d

    def fun(flat):
        p = ModelParams(flat[: c * d].reshape(c, d), flat[c * d:])
        from covclust.likelihood import nll_value_grad
        v, gB, g0 = nll_value_grad(p, data, lam)
        return v, np.concatenate([gB.ravel(), g0])

    res = minimize(fun, np.zeros(c * d + c), jac=True, method="L-BFGS-B",
                   options={"maxiter": 2000, "gtol": tol, "ftol": 1e-16})
    return ModelParams(res.x[: c * d].reshape(c, d), res.x[c * d:])


class TestStateAndThreshold:
    def test_threshold_formula(self):
        assert stop_threshold(3, 4, 5, 1e-5) == math.sqrt(3 * (4 + 10)) * 1e-5

    def test_cold_start_layout(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=1.0)
        state = init_state(data, graph, cfg)
        assert state.z.shape == (2 * graph.l, data.c)
        np.testing.assert_array_equal(state.u, 0.0)
        np.testing.assert_array_equal(state.z, state.bt[state.tails])
        assert state.k == 0 and not state.converged

    def test_random_init_is_seeded(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=1.0, init="random", seed=5)
        s1 = init_state(data, graph, cfg)
        s2 = init_state(data, graph, cfg)
        np.testing.assert_array_equal(s1.params.B, s2.params.B)
        assert not np.all(s1.params.B == 0)

    def test_warm_start_must_match_shapes(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=1.0)
        other_graph = make_graph(rng, data.d, p=0.3)
        state = init_state(data, graph, cfg)
        if not np.array_equal(other_graph.edges, graph.edges):
            with pytest.raises(InputError):
                init_state(data, other_graph, cfg, warm_start=state)

    def test_state_graph_mismatch_rejected(self, rng):
        data, graph = small_problem(rng, d=5, p=0.9)
        cfg = SolverConfig(nu=1.0)
        state = init_state(data, graph, cfg)
        smaller = SimilarityGraph(graph.edges[:1], graph.weights[:1], graph.d)
        with pytest.raises(InputError):
            compute_aggregates(state, smaller)


class TestSubproblems:
    def test_primal_objective_matches_naive(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=2.0, rho=1.7)
        state = init_state(data, graph, cfg)
        state.z = rng.normal(size=state.z.shape)
        state.u = rng.normal(size=state.u.shape)
        agg = compute_aggregates(state, graph)
        got = primal_objective_g(state.params, data, agg, cfg.lam, cfg.rho)
        want = penalized_nll(state.params, data, cfg.lam)
        bt = state.bt
        for r, t in enumerate(state.tails):
            dv = state.z[r] - bt[t] + state.u[r]
            want += 0.5 * cfg.rho * float(dv @ dv)
        np.testing.assert_allclose(got, want, rtol=1e-10)

    def test_primal_update_reaches_stationarity(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=1.0, rho=1.3, primal_gtol=1e-9)
        state = init_state(data, graph, cfg)
        state.z = rng.normal(size=state.z.shape) * 0.1
        state.u = rng.normal(size=state.u.shape) * 0.1
        params = primal_update(state, data, graph, cfg)
        agg = compute_aggregates(state, graph)

        # finite differences of g at the reported minimizer
        base = primal_objective_g(params, data, agg, cfg.lam, cfg.rho)
        h = 1e-6
        for (s, i) in [(0, 0), (1, 2), (0, 3)]:
            Bp = params.B.copy()
            Bp[s, i] += h
            up = primal_objective_g(ModelParams(Bp, params.beta0), data,
                                    agg, cfg.lam, cfg.rho)
            Bm = params.B.copy()
            Bm[s, i] -= h
            dn = primal_objective_g(ModelParams(Bm, params.beta0), data,
                                    agg, cfg.lam, cfg.rho)
            assert abs((up - dn) / (2 * h)) < 1e-4
            assert up >= base - 1e-9 and dn >= base - 1e-9

    def test_aux_then_dual_match_manual_round(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=0.8, rho=1.1)
        state = init_state(data, graph, cfg)
        state.u = rng.normal(size=state.u.shape) * 0.2
        z_new, theta = aux_update(state, graph, cfg, with_theta=True)
        assert np.all(theta >= 0.5) and np.all(theta <= 1.0)
        state.z = z_new
        u_new = dual_update(state)
        np.testing.assert_allclose(
            u_new, state.u + state.z - state.bt[state.tails], rtol=1e-12,
            atol=1e-15)

    def test_residuals_oracle(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=0.8, rho=2.0)
        state = init_state(data, graph, cfg)
        z_prev = state.z.copy()
        state.z = state.z + rng.normal(size=state.z.shape) * 0.1
        r, s = residuals(z_prev, state)
        want_r = np.linalg.norm(state.z - state.bt[state.tails])
        want_s = math.sqrt(cfg.rho) * np.linalg.norm(state.z - z_prev)
        np.testing.assert_allclose(r, want_r, rtol=1e-12)
        np.testing.assert_allclose(s, want_s, rtol=1e-12)


class TestSolve:
    def test_matches_direct_fit_when_nu_zero(self, rng):
        data, graph = small_problem(rng, n=60, d=3, c=2)
        cfg = SolverConfig(nu=0.0, eps=1e-8, max_iter=2000,
                           primal_gtol=1e-10)
        state, diags = solve(data, graph, cfg)
        assert state.converged
        direct = direct_ridge_fit(data, cfg.lam)
        f_admm = full_objective(state.params, data, graph, cfg.lam, 0.0)
        f_direct = full_objective(direct, data, graph, cfg.lam, 0.0)
        assert abs(f_admm - f_direct) < 1e-7
        np.testing.assert_allclose(state.params.B, direct.B, atol=1e-4)

    def test_heavy_penalty_fuses_everything(self, rng):
        data, graph = small_problem(rng, n=50, d=4, c=3, p=1.0)
        cfg = SolverConfig(nu=1e4, eps=1e-6, max_iter=2000)
        state, _ = solve(data, graph, cfg)
        assert state.converged
        clustering = extract_clustering(state, graph)
        assert clustering.m == 1

        # With every column tied to a single vector v, scores reduce to
        # v * sum(x) and the ridge term to lam * d * ||v||^2, i.e. a
        # one-covariate fit on the pooled feature.  The fusion term is
        # zero on a fully fused solution, so compare plain objectives.
        pooled = Dataset(data.X.sum(axis=1, keepdims=True), data.y, data.c)
        direct = direct_ridge_fit(pooled, cfg.lam * data.d)
        f_full = full_objective(state.params, data, graph, cfg.lam, 0.0)
        f_ref = penalized_nll(direct, pooled, cfg.lam * data.d)
        assert abs(f_full - f_ref) < 1e-2

    def test_convex_solution_unique_across_inits(self, rng):
        data, graph = small_problem(rng, n=50, d=4, c=2)
        base = dict(nu=1.5, eps=1e-7, max_iter=3000, primal_gtol=1e-9)
        s_zero, _ = solve(data, graph, SolverConfig(init="zeros", **base))
        s_rand, _ = solve(data, graph,
                          SolverConfig(init="random", seed=99, **base))
        assert s_zero.converged and s_rand.converged
        np.testing.assert_allclose(s_zero.params.B, s_rand.params.B,
                                   atol=2e-4)
        c0 = extract_clustering(s_zero, graph)
        c1 = extract_clustering(s_rand, graph)
        assert c0.assignment.tolist() == c1.assignment.tolist()

    def test_diagnostics_and_callback(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=1.0)
        seen = []
        state, diags = solve(data, graph, cfg, callback=seen.append)
        assert len(seen) == len(diags) == state.k
        rec = diags[-1]
        assert set(rec) >= {"k", "primal", "dual", "threshold", "g_value",
                            "inner_iters"}
        assert rec["primal"] < rec["threshold"]
        assert rec["dual"] < rec["threshold"]
        assert state.converged

    def test_iteration_cap_leaves_unconverged(self, rng):
        data, graph = small_problem(rng)
        state, diags = solve(data, graph, SolverConfig(nu=1.0, max_iter=2))
        assert not state.converged and state.k == 2 and len(diags) == 2

    def test_poisoned_warm_start_raises_with_diagnostics(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=1.0)
        bad = init_state(data, graph, cfg)
        bad.params = ModelParams(bad.params.B, bad.params.beta0)
        bad.u = bad.u + np.inf
        with pytest.raises(SolverError) as info:
            solve(data, graph, cfg, warm_start=bad)
        assert "last_good" in info.value.diagnostics

    def test_empty_dataset_rejected(self, rng):
        graph = make_graph(rng, 3, p=1.0)
        empty = Dataset(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), 2)
        with pytest.raises(InputError):
            solve(empty, graph, SolverConfig(nu=1.0))

    def test_same_run_twice_is_bitwise_identical(self, rng):
        data, graph = small_problem(rng)
        cfg = SolverConfig(nu=2.0)
        s1, d1 = solve(data, graph, cfg)
        s2, d2 = solve(data, graph, cfg)
        np.testing.assert_array_equal(s1.params.B, s2.params.B)
        np.testing.assert_array_equal(s1.z, s2.z)
        np.testing.assert_array_equal(s1.u, s2.u)
        assert [r["primal"] for r in d1] == [r["primal"] for r in d2]

    @pytest.mark.skipif(not BOTH_BACKENDS,
                        reason="compiled backend unavailable")
    def test_backends_produce_identical_trajectories(self, rng):
        data, graph = small_problem(rng, n=45, d=5, c=3, p=0.8)
        out = {}
        for name in ("numpy", "compiled"):
            cfg = SolverConfig(nu=3.0, kernels=name)
            out[name] = solve(data, graph, cfg)
        s_np, d_np = out["numpy"]
        s_cy, d_cy = out["compiled"]
        assert s_np.k == s_cy.k
        np.testing.assert_array_equal(s_np.params.B, s_cy.params.B)
        np.testing.assert_array_equal(s_np.z, s_cy.z)
        np.testing.assert_array_equal(s_np.u, s_cy.u)
        assert [r["primal"] for r in d_np] == [r["primal"] for r in d_cy]
        c1 = extract_clustering(s_np, graph)
        c2 = extract_clustering(s_cy, graph)
        assert c1.assignment.tolist() == c2.assignment.tolist()

    def test_warm_start_reconverges_quickly(self, rng):
        data, graph = small_problem(rng, n=50, d=4, c=2)
        cfg = SolverConfig(nu=1.0)
        state, diags = solve(data, graph, cfg)
        warm, diags2 = solve(data, graph, cfg, warm_start=state)
        assert warm.converged
        assert warm.k <= max(3, state.k // 4)
