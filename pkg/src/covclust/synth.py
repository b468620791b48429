"""Synthetic data generation and similarity estimation.

Ground truth: covariates 1..d split into K clusters of near-equal size.
Cluster g puts weight 0.5 * g on one class (cycling through classes as g
grows) in every member column, so clusters differ in scale and target
class; intercepts are zero.  Draws are class-balanced Gaussians whose
means are the rows of the true weight matrix and whose covariance is the
true similarity matrix, so similar covariates are also correlated.

Two similarity regimes share the same block value 0.9: ``agree`` places
the blocks exactly on the true clusters; ``contradict`` rotates the whole
pattern by half a block width so the suggested grouping straddles the
true one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clusters import Clustering
from .data import Dataset, SimilarityGraph
from .errors import DomainError, InputError, NumericError

__all__ = [
    "GroundTruth",
    "make_ground_truth",
    "make_similarity",
    "sample",
    "estimate_similarity",
    "ledoit_wolf_shrinkage",
]

MODES = ("agree", "contradict")
BLOCK_VALUE = 0.9


@dataclass(frozen=True)
class GroundTruth:
    """True generator: weights B (c, d), zero intercepts beta0 (c,),
    covariate partition, and (once built) the similarity matrix S used
    both as sampling covariance and as solver input."""

    B: np.ndarray
    beta0: np.ndarray
    clustering: Clustering
    S: np.ndarray | None = None

    @property
    def c(self) -> int:
        return self.B.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    def with_similarity(self, S: np.ndarray) -> "GroundTruth":
        return GroundTruth(self.B, self.beta0, self.clustering, S)


def make_ground_truth(d: int, c: int = 4, K: int = 10) -> GroundTruth:
    """True parameters for d covariates in K near-equal clusters.

    Cluster g (1-based) occupies a contiguous covariate block; its member
    columns are zero except for 0.5 * g in class ((g - 1) mod c) + 1.
    """
    if c < 2:
        raise DomainError(f"need at least 2 classes, got c={c}")
    if K < 1:
        raise DomainError(f"need at least 1 cluster, got K={K}")
    if d < K:
        raise InputError(f"cannot split d={d} covariates into K={K} clusters")
    blocks = np.array_split(np.arange(d), K)
    B = np.zeros((c, d))
    assignment = np.empty(d, dtype=np.int64)
    for g, block in enumerate(blocks, start=1):
        assignment[block] = g
        B[(g - 1) % c, block] = 0.5 * g
    return GroundTruth(B=B, beta0=np.zeros(c),
                       clustering=Clustering(assignment, K))


def make_similarity(truth: GroundTruth, mode: str) -> np.ndarray:
    """Similarity matrix for one regime; also the sampling covariance.

    Both modes start from unit diagonal plus 0.9 within-block entries.
    ``contradict`` then relabels covariate p as p + shift (cyclically)
    with shift = half the nominal block width, sliding every 0.9 block
    across a true cluster boundary.  Positive definiteness is checked by
    factorization.
    """
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    d = truth.d
    S = np.zeros((d, d))
    for g in range(1, truth.clustering.m + 1):
        members = truth.clustering.members(g) - 1
        S[np.ix_(members, members)] = BLOCK_VALUE
    np.fill_diagonal(S, 1.0)
    if mode == "contradict":
        shift = (d // truth.clustering.m) // 2
        idx = (np.arange(d) - shift) % d
        S = S[np.ix_(idx, idx)]
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise NumericError(
            "constructed similarity matrix is not positive definite") from None
    return S


def sample(truth: GroundTruth, n: int, seed: int = 0) -> Dataset:
    """Class-balanced draws: n/c samples per class y with
    x ~ N(B[y], S).  Requires truth.S and c | n."""
    if truth.S is None:
        raise InputError("ground truth has no similarity matrix; "
                         "call make_similarity first")
    if n < truth.c or n % truth.c != 0:
        raise InputError(
            f"n={n} must be a positive multiple of c={truth.c}")
    try:
        L = np.linalg.cholesky(truth.S)
    except np.linalg.LinAlgError:
        raise NumericError("sampling covariance is not positive definite") \
            from None
    rng = np.random.default_rng(seed)
    per = n // truth.c
    xs, ys = [], []
    for y in range(1, truth.c + 1):
        noise = rng.standard_normal((per, truth.d))
        xs.append(truth.B[y - 1] + noise @ L.T)
        ys.append(np.full(per, y, dtype=np.int64))
    return Dataset(np.concatenate(xs), np.concatenate(ys), truth.c)


def ledoit_wolf_shrinkage(Xc: np.ndarray):
    """Shrinkage covariance of centered rows toward the scaled identity.

    Classic closed-form intensity: with emp = Xc'Xc / n, target mu * I
    where mu = tr(emp) / d, the intensity is min(beta, delta) / delta,
    where delta is the mean squared distance emp-to-target and beta
    estimates the mean squared sampling error of emp.  Returns (shrunk
    covariance, shrinkage in [0, 1]).  Zero dispersion (delta = 0) means
    emp already equals the target; shrinkage 0 is returned.
    """
    n, d = Xc.shape
    emp = Xc.T @ Xc / n
    emp = (emp + emp.T) / 2.0
    mu = float(np.trace(emp)) / d
    delta = float(((emp - mu * np.eye(d)) ** 2).sum()) / d
    if delta == 0.0:
        return emp, 0.0
    X2 = Xc ** 2
    beta_ = (float((X2.T @ X2).sum()) / n - float((emp ** 2).sum())) / (d * n)
    shrinkage = min(beta_, delta) / delta
    shrinkage = float(min(max(shrinkage, 0.0), 1.0))
    shrunk = (1.0 - shrinkage) * emp + shrinkage * mu * np.eye(d)
    return shrunk, shrinkage


def estimate_similarity(data: Dataset, return_matrix: bool = False):
    """Similarity graph from the data itself.

    Pools within-class residuals (each sample centered by its class
    mean), applies shrinkage covariance estimation, symmetrizes, zeroes
    negative entries and the diagonal, and builds the graph from the
    strictly positive remainder.  Needs n > c so residual degrees of
    freedom exist.
    """
    if data.n <= data.c:
        raise InputError(
            f"similarity estimation needs n > c, got n={data.n}, c={data.c}")
    Xc = data.X.copy()
    for y in range(data.c):
        rows = data.y0 == y
        if np.any(rows):
            Xc[rows] -= Xc[rows].mean(axis=0)
    shrunk, _ = ledoit_wolf_shrinkage(Xc)
    S = np.triu(shrunk, k=1)
    S[S < 0] = 0.0
    S = S + S.T
    graph = SimilarityGraph.from_dense(S)
    return (graph, S) if return_matrix else graph
