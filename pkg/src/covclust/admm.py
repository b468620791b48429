"""Specialized ADMM for the fused multinomial logistic objective.

Each undirected similarity edge {i, j} gets two auxiliary vectors z_(i->j),
z_(j->i) in R^c constrained to equal the owning columns b_i, b_j of B, plus
scaled duals u of the same shape.  One iteration is:

  1. primal: quasi-Newton minimization of the smooth part
       g(B, beta0) = penalized NLL + (rho/2) sum ||z - b_tail + u||^2,
     where the quadratic is evaluated through O(d) edge aggregates so its
     cost does not grow with the edge count;
  2. auxiliary: independent closed-form updates per edge (see kernels);
  3. dual: u += z - b_tail.

The loop stops when both residual norms fall below sqrt(c (d + 2 l)) * eps
or after ``max_iter`` iterations.  rho is fixed; exactness of the primal
step is bounded by its own gradient tolerance and iteration cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels_py, kernels
from .data import Dataset, ModelParams, SimilarityGraph
from .errors import DomainError, InputError, SolverError
from .likelihood import penalized_nll
from .optim import minimize_lbfgs

__all__ = [
    "SolverConfig",
    "EdgeAggregates",
    "AdmmState",
    "stop_threshold",
    "init_state",
    "compute_aggregates",
    "primal_objective_g",
    "primal_update",
    "aux_update",
    "dual_update",
    "residuals",
    "solve",
]


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    primal_gtol ``None`` resolves to 1e-6 * sqrt(c * d) at solve time;
    ``init`` selects the cold start ('zeros' or 'random' with ``seed``);
    ``kernels`` picks the edge backend ('auto', 'compiled', 'numpy').
    """

    nu: float = 0.0
    lam: float = 0.1
    rho: float = 1.0
    eps: float = 1e-5
    max_iter: int = 1000
    primal_max_iter: int = 200
    primal_gtol: float | None = None
    lbfgs_memory: int = 10
    init: str = "zeros"
    seed: int = 0
    kernels: str = "auto"

    def __post_init__(self):
        if self.nu < 0:
            raise DomainError(f"nu must be >= 0, got {self.nu}")
        if self.lam < 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if self.rho <= 0:
            raise DomainError(f"rho must be > 0, got {self.rho}")
        if self.eps <= 0:
            raise DomainError(f"eps must be > 0, got {self.eps}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.primal_max_iter < 1:
            raise DomainError("primal_max_iter must be >= 1")
        if self.init not in ("zeros", "random"):
            raise InputError(f"init must be 'zeros' or 'random', got {self.init!r}")

    def resolve_primal_gtol(self, c: int, d: int) -> float:
        if self.primal_gtol is not None:
            return self.primal_gtol
        return 1e-6 * math.sqrt(c * d)


@dataclass(frozen=True)
class EdgeAggregates:
    """O(d) summary of the quadratic coupling term for q = z + u.

    q_all   : scalar sum of squared entries of q.
    q_up    : (d, c), row i sums q over directed rows owned by covariate i.
    degrees : (d,) edge count per covariate.
    """

    q_all: float
    q_up: np.ndarray
    degrees: np.ndarray


@dataclass
class AdmmState:
    """Mutable solver state tied to one (dataset, graph) pair.

    z and u follow the directed-row layout documented in the kernels:
    row k < l is edge k in the forward (i -> j) direction, row l + k the
    backward one.  ``edges`` keeps the 1-based undirected pairs so that
    consistency with the graph can be checked cheaply.
    """

    params: ModelParams
    z: np.ndarray
    u: np.ndarray
    rho: float
    k: int = 0
    converged: bool = False
    theta: np.ndarray | None = None
    residual_history: list = field(default_factory=list)
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), np.int64))
    _tails: np.ndarray = field(default=None, repr=False)
    _edge_index: dict = field(default=None, repr=False)

    @property
    def l(self) -> int:
        return self.edges.shape[0]

    @property
    def bt(self) -> np.ndarray:
        """Model weights as (d, c), the layout the kernels consume."""
        return np.ascontiguousarray(self.params.B.T)

    @property
    def tails(self) -> np.ndarray:
        if self._tails is None:
            ei = self.edges[:, 0] - 1
            ej = self.edges[:, 1] - 1
            self._tails = np.ascontiguousarray(
                np.concatenate([ei, ej]).astype(np.int64))
        return self._tails

    def z_dir(self, i: int, j: int) -> np.ndarray:
        """Auxiliary vector of the directed edge i -> j (1-based ids)."""
        if self._edge_index is None:
            self._edge_index = {
                (int(a), int(b)): k for k, (a, b) in enumerate(self.edges)}
        key = (min(i, j), max(i, j))
        if key not in self._edge_index:
            raise InputError(f"no edge between covariates {i} and {j}")
        k = self._edge_index[key]
        return self.z[k if i < j else self.l + k]


def stop_threshold(c: int, d: int, l: int, eps: float) -> float:
    """Residual-norm threshold sqrt(c * (d + 2 l)) * eps."""
    return math.sqrt(c * (d + 2 * l)) * eps


def init_state(data: Dataset, graph: SimilarityGraph, config: SolverConfig,
               warm_start: AdmmState | None = None) -> AdmmState:
    """Fresh or warm-started state for one solve.

    Warm starts reuse parameters, auxiliaries and duals from a previous
    solve on the same problem shape; iteration counters and histories
    reset.  Cold starts put z in consensus with B (zero primal residual)
    and u at zero.
    """
    if data.d != graph.d:
        raise InputError(
            f"data has {data.d} covariates but graph covers {graph.d}")
    l, c = graph.l, data.c
    if warm_start is not None:
        if (warm_start.z.shape != (2 * l, c)
                or warm_start.params.B.shape != (c, data.d)
                or not np.array_equal(warm_start.edges, graph.edges)):
            raise InputError("warm start does not match this problem")
        return AdmmState(params=warm_start.params,
                         z=warm_start.z.copy(), u=warm_start.u.copy(),
                         rho=config.rho, edges=graph.edges.copy())
    if config.init == "random":
        params = ModelParams.random(c, data.d, seed=config.seed)
    else:
        params = ModelParams.zeros(c, data.d)
    bt = np.ascontiguousarray(params.B.T)
    ei, ej, tails, _ = graph.edge_arrays()
    z = np.ascontiguousarray(bt[tails]) if l else np.zeros((0, c))
    u = np.zeros((2 * l, c))
    return AdmmState(params=params, z=z, u=u, rho=config.rho,
                     edges=graph.edges.copy())


def _check_state_graph(state: AdmmState, graph: SimilarityGraph) -> None:
    if not np.array_equal(state.edges, graph.edges):
        raise InputError("solver state does not belong to this graph")


def compute_aggregates(state: AdmmState,
                       graph: SimilarityGraph) -> EdgeAggregates:
    """Edge aggregates of q = z + u for the current state.

    Always computed with the numpy reductions so that objective values
    and stopping decisions do not depend on the selected edge backend
    (summation order differs between vectorized and sequential loops).
    """
    _check_state_graph(state, graph)
    q_all, q_up = _kernels_py.edge_aggregates(state.z, state.u,
                                              state.tails, graph.d)
    return EdgeAggregates(q_all=q_all, q_up=q_up, degrees=graph.degrees)


def _quad_value_grad_bt(bt, agg, rho):
    """Value and (d, c) gradient of the aggregated quadratic
    (rho/2) * sum_rows ||z - b_tail + u||^2 as a function of bt."""
    deg = agg.degrees.astype(np.float64)
    cross = float(np.einsum("ic,ic->", bt, agg.q_up))
    sq = float(np.einsum("i,ic,ic->", deg, bt, bt))
    value = 0.5 * rho * (agg.q_all - 2.0 * cross + sq)
    grad = rho * (deg[:, None] * bt - agg.q_up)
    return value, grad


def primal_objective_g(params: ModelParams, data: Dataset,
                       agg: EdgeAggregates, lam: float, rho: float) -> float:
    """The primal subproblem objective g(B, beta0) at the given point."""
    bt = np.ascontiguousarray(params.B.T)
    quad, _ = _quad_value_grad_bt(bt, agg, rho)
    return penalized_nll(params, data, lam) + quad


def primal_update(state: AdmmState, data: Dataset, graph: SimilarityGraph,
                  config: SolverConfig) -> ModelParams:
    """Inexact minimizer of g(B, beta0) warm-started at the current params."""
    agg = compute_aggregates(state, graph)
    gtol = config.resolve_primal_gtol(data.c, data.d)
    params, _ = _primal_step(state, data, agg, config, gtol)
    return params


def aux_update(state: AdmmState, graph: SimilarityGraph,
               config: SolverConfig, with_theta: bool = False):
    """Closed-form auxiliary update; returns the new z (2l, c).

    With ``with_theta`` also returns the per-edge mixing weight theta in
    [1/2, 1]; theta = 1/2 marks an exactly fused edge.
    """
    _check_state_graph(state, graph)
    kb = kernels.get_backend(config.kernels)
    l, c = graph.l, state.params.c
    z_new = np.empty((2 * l, c))
    theta = np.empty(l)
    ei, ej, _, w = graph.edge_arrays()
    kb.aux_update(state.bt, state.u, ei, ej, w,
                  config.nu, config.rho, z_new, theta)
    return (z_new, theta) if with_theta else z_new


def dual_update(state: AdmmState, backend=None) -> np.ndarray:
    """Scaled dual ascent u + z - b_tail; returns the new u (2l, c)."""
    kb = backend if backend is not None else kernels.default_backend()
    u_new = state.u.copy()
    kb.dual_update(u_new, state.z, state.bt, state.tails)
    return u_new


def residuals(z_prev: np.ndarray, state: AdmmState) -> tuple[float, float]:
    """Primal and dual residual norms after an iteration.

    primal^2 = sum over directed rows of ||z - b_tail||^2;
    dual^2   = rho * sum over directed rows of ||z - z_prev||^2.

    Uses the numpy reductions regardless of the configured backend so
    the stopping decision is identical for every install.
    """
    r_sq = _kernels_py.primal_residual_sq(state.z, state.bt, state.tails)
    s_sq = state.rho * _kernels_py.diff_sq(state.z, z_prev)
    return math.sqrt(r_sq), math.sqrt(s_sq)


def _primal_step(state, data, agg, config, gtol):
    """Run the quasi-Newton primal minimization; returns (params, OptResult)."""
    from .likelihood import _nll_value_grad_raw

    c, d = data.c, data.d
    rho = config.rho
    lam = config.lam
    X, y0, n = data.X, data.y0, data.n

    def value_grad(x):
        B = x[: c * d].reshape(c, d)
        beta0 = x[c * d:]
        nll, g_B, g_b0 = _nll_value_grad_raw(B, beta0, X, y0, n, lam)
        bt = np.ascontiguousarray(B.T)
        quad, g_bt = _quad_value_grad_bt(bt, agg, rho)
        g_B = g_B + g_bt.T
        return nll + quad, np.concatenate([g_B.ravel(), g_b0])

    x0 = np.concatenate([state.params.B.ravel(), state.params.beta0])
    opt = minimize_lbfgs(value_grad, x0, gtol=gtol,
                         max_iter=config.primal_max_iter,
                         memory=config.lbfgs_memory)
    if not (np.all(np.isfinite(opt.x)) and np.isfinite(opt.fun)):
        raise SolverError(
            "primal subproblem diverged to a non-finite point",
            diagnostics={"k": state.k, "g_value": opt.fun,
                         "message": opt.message})
    params = ModelParams(opt.x[: c * d].reshape(c, d).copy(),
                         opt.x[c * d:].copy())
    return params, opt


def solve(data: Dataset, graph: SimilarityGraph, config: SolverConfig,
          warm_start: AdmmState | None = None, callback=None):
    """Run ADMM to convergence or the iteration cap.

    Returns (state, diagnostics) where diagnostics holds one dict per
    iteration: k, primal and dual residual norms, threshold, primal
    objective value and inner quasi-Newton iteration count.  Raises
    SolverError when a non-finite objective or residual appears; the
    exception carries the last completed iteration record.
    """
    if data.n == 0:
        raise InputError("cannot solve with an empty dataset")
    backend = kernels.get_backend(config.kernels)
    state = init_state(data, graph, config, warm_start)
    thr = stop_threshold(data.c, graph.d, graph.l, config.eps)
    gtol = config.resolve_primal_gtol(data.c, data.d)
    ei, ej, _, w = graph.edge_arrays()
    diagnostics: list[dict] = []
    last_good: dict = {}
    for k in range(1, config.max_iter + 1):
        state.k = k
        q_all, q_up = _kernels_py.edge_aggregates(state.z, state.u,
                                                  state.tails, graph.d)
        agg = EdgeAggregates(q_all=q_all, q_up=q_up, degrees=graph.degrees)
        try:
            params, opt = _primal_step(state, data, agg, config, gtol)
        except SolverError as exc:
            exc.diagnostics.setdefault("last_good", last_good)
            raise
        state.params = params
        bt = state.bt
        z_prev = state.z
        l, c = graph.l, data.c
        z_new = np.empty((2 * l, c))
        theta = np.empty(l)
        backend.aux_update(bt, state.u, ei, ej, w, config.nu, config.rho,
                           z_new, theta)
        state.z = z_new
        state.theta = theta
        backend.dual_update(state.u, state.z, bt, state.tails)
        r_norm = math.sqrt(_kernels_py.primal_residual_sq(state.z, bt,
                                                          state.tails))
        s_norm = math.sqrt(state.rho * _kernels_py.diff_sq(state.z, z_prev))
        record = {"k": k, "primal": r_norm, "dual": s_norm,
                  "threshold": thr, "g_value": opt.fun,
                  "inner_iters": opt.nit}
        if not (math.isfinite(r_norm) and math.isfinite(s_norm)):
            raise SolverError(
                f"non-finite residuals at iteration {k}",
                diagnostics={**record, "last_good": last_good})
        state.residual_history.append((r_norm, s_norm))
        diagnostics.append(record)
        last_good = record
        if callback is not None:
            callback(record)
        if r_norm < thr and s_norm < thr:
            state.converged = True
            break
    return state, diagnostics
