"""Regularization-path sweep over the fusion strength nu.

The grid is nu = n * 2^(-a/10) for a = 0..a_max, solved in descending
order so each solution warm-starts the next (fused solutions relax
gracefully as nu shrinks).  Every grid point yields one record: the
extracted clustering, convergence data, and later a marginal-likelihood
score shared among records with identical clusterings.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

from .admm import AdmmState, SolverConfig, solve
from .clusters import Clustering, extract_clustering
from .data import Dataset, SimilarityGraph
from .errors import DomainError, FitError, NumericError, SolverError
from .modelselect import ModelScore, log_marginal

__all__ = ["PathRecord", "nu_grid", "run_path", "score_path"]


@dataclass
class PathRecord:
    """Outcome of one grid point.

    ``seconds`` is wall time and is excluded from deterministic outputs;
    ``duplicate_of_prev`` flags a clustering identical to the previous
    converged record's; ``is_best`` is set by score_path on the records
    carrying the top-scoring clustering.
    """

    nu: float
    clustering: Clustering | None
    converged: bool
    iterations: int
    seconds: float
    failed: bool = False
    error: str = ""
    duplicate_of_prev: bool = False
    score: ModelScore | None = None
    is_best: bool = False

    def to_jsonable(self, include_score: bool = True) -> dict:
        out = {
            "nu": self.nu,
            "converged": self.converged,
            "iterations": self.iterations,
            "failed": self.failed,
            "duplicate_of_prev": self.duplicate_of_prev,
            "is_best": self.is_best,
        }
        if self.failed:
            out["error"] = self.error
        if self.clustering is not None:
            out["m"] = self.clustering.m
            out["assignment"] = self.clustering.assignment.tolist()
        if include_score and self.score is not None:
            out["score"] = self.score.to_jsonable(include_params=False)
        return out


def nu_grid(n: int, a_max: int = 299) -> list[float]:
    """[n * 2^(-a/10) for a = 0..a_max], descending.

    Factored as n * 2^(-(a mod 10)/10) * 2^(-(a div 10)) so that the
    ratio nu_a / nu_(a+10) is exactly 2 in floating point.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if a_max < 0:
        raise DomainError(f"a_max must be >= 0, got {a_max}")
    return [n * 2.0 ** (-(a % 10) / 10.0) * 2.0 ** (-(a // 10))
            for a in range(a_max + 1)]


def run_path(data: Dataset, graph: SimilarityGraph, config: SolverConfig,
             grid, warm_start: bool = True, early_exit: bool = False,
             callback=None,
             initial_state: AdmmState | None = None) -> list[PathRecord]:
    """Solve every grid point, descending, and extract clusterings.

    A solve failure marks its record failed and the sweep continues from
    a cold start.  ``early_exit`` stops once fusion is fully gone
    (m = d), after which weaker penalties cannot regroup anything.
    ``callback(record, state)`` runs after each grid point (the
    checkpointing hook); ``initial_state`` seeds the first warm start
    when resuming a partially finished sweep.
    """
    grid = sorted((float(v) for v in grid), reverse=True)
    if not grid:
        raise DomainError("empty nu grid")
    if any(v < 0 for v in grid):
        raise DomainError("nu values must be >= 0")
    records: list[PathRecord] = []
    carry: AdmmState | None = initial_state
    prev_key = None
    for nu in grid:
        cfg = replace(config, nu=nu)
        start = time.perf_counter()
        try:
            state, diags = solve(data, graph, cfg,
                                 warm_start=carry if warm_start else None)
        except SolverError as exc:
            elapsed = time.perf_counter() - start
            warnings.warn(f"solve failed at nu={nu:.6g}: {exc}")
            record = PathRecord(nu=nu, clustering=None, converged=False,
                                iterations=int(exc.diagnostics.get("k", 0)),
                                seconds=elapsed, failed=True, error=str(exc))
            records.append(record)
            carry = None
            prev_key = None
            if callback is not None:
                callback(record, None)
            continue
        elapsed = time.perf_counter() - start
        clustering = extract_clustering(state, graph)
        record = PathRecord(nu=nu, clustering=clustering,
                            converged=state.converged,
                            iterations=state.k, seconds=elapsed,
                            duplicate_of_prev=clustering.key() == prev_key)
        records.append(record)
        carry = state
        prev_key = clustering.key()
        if callback is not None:
            callback(record, state)
        # descending nu: once every column is its own cluster, weaker
        # fusion cannot change the clustering any further
        if early_exit and clustering.m == graph.d:
            break
    return records


def score_path(data: Dataset, records: list[PathRecord],
               sigma: float) -> list[PathRecord]:
    """Attach marginal-likelihood scores, fitting each distinct
    clustering once; records with identical assignments share the same
    ModelScore object.  The best score (ties: fewer clusters, then
    smaller nu) marks its records via ``is_best``."""
    cache: dict[tuple, ModelScore | None] = {}
    for rec in records:
        if rec.failed or rec.clustering is None:
            continue
        key = rec.clustering.key()
        if key not in cache:
            try:
                cache[key] = log_marginal(data, rec.clustering, sigma,
                                          nu_origin=rec.nu)
            except (FitError, NumericError) as exc:
                cache[key] = None
                warnings.warn(
                    f"scoring failed for m={rec.clustering.m} at "
                    f"nu={rec.nu:.6g}: {exc}")
        if cache[key] is not None:
            rec.score = cache[key]
    scored = [r for r in records if r.score is not None]
    if scored:
        best = min(scored, key=lambda r: (-r.score.log_marginal,
                                          r.score.m, r.nu))
        best_key = best.clustering.key()
        for rec in scored:
            rec.is_best = rec.clustering.key() == best_key
    return records
