"""Evaluation metrics, the k-means baseline, and the CV-based selector.

ANMI is mutual information adjusted for chance under the hypergeometric
(fixed-marginals) model and normalized so that identical partitions score
1 and random agreement scores about 0.  The baseline clusters covariates
by running k-means++ with restarts on a representation of the similarity
matrix (its raw rows by default, a spectral embedding optionally).  The
alternative selector implements the one-standard-deviation rule on
cross-validated held-out likelihoods of the reduced models.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .clusters import Clustering
from .data import Dataset, ModelParams, SimilarityGraph
from .errors import DimensionError, DomainError, InputError
from .likelihood import log_likelihood
from .modelselect import _cv_folds, map_fit, project_dataset

__all__ = [
    "EvalReport",
    "anmi",
    "accuracy",
    "kmeans_similarity",
    "cv_select",
    "REPRESENTATIONS",
]

REPRESENTATIONS = ("rows", "spectral")


@dataclass(frozen=True)
class EvalReport:
    """One method's evaluation row."""

    anmi: float
    heldout_accuracy: float
    m: int
    method: str
    seed: int

    def to_jsonable(self) -> dict:
        return {"anmi": self.anmi, "heldout_accuracy": self.heldout_accuracy,
                "m": self.m, "method": self.method, "seed": self.seed}


def _contingency(a: Clustering, b: Clustering) -> np.ndarray:
    table = np.zeros((a.m, b.m), dtype=np.int64)
    np.add.at(table, (a.assignment - 1, b.assignment - 1), 1)
    return table


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def _mutual_information(table: np.ndarray, n: int) -> float:
    nz = table[table > 0].astype(np.float64)
    ai = table.sum(axis=1, keepdims=True).astype(np.float64)
    bj = table.sum(axis=0, keepdims=True).astype(np.float64)
    outer = (ai @ bj)[table > 0]
    return float((nz / n * np.log(n * nz / outer)).sum())


def _expected_mi(ai: np.ndarray, bj: np.ndarray, n: int) -> float:
    """E[MI] over random tables with fixed marginals (hypergeometric)."""
    log_n_fact = gammaln(n + 1)
    emi = 0.0
    for a in ai:
        for b in bj:
            lo = max(1, a + b - n)
            hi = min(a, b)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            log_p = (gammaln(a + 1) + gammaln(b + 1)
                     + gammaln(n - a + 1) + gammaln(n - b + 1)
                     - log_n_fact - gammaln(nij + 1)
                     - gammaln(a - nij + 1) - gammaln(b - nij + 1)
                     - gammaln(n - a - b + nij + 1))
            emi += float((nij / n * np.log(n * nij / (a * b))
                          * np.exp(log_p)).sum())
    return emi


def anmi(a: Clustering, b: Clustering, normalizer: str = "max") -> float:
    """Adjusted normalized mutual information of two partitions.

    (MI - E[MI]) / (norm - E[MI]) where norm combines the two entropies;
    ``max`` is the default variant.  Identical partitions score exactly
    1.0.  When either partition has zero entropy the adjustment is
    degenerate; by convention the value is 1.0 for equal partitions and
    0.0 otherwise.
    """
    if a.d != b.d:
        raise DimensionError(
            f"partitions cover {a.d} and {b.d} covariates")
    if normalizer not in ("max", "min", "arithmetic", "geometric"):
        raise InputError(f"unknown normalizer {normalizer!r}")
    if np.array_equal(a.assignment, b.assignment):
        return 1.0
    n = a.d
    table = _contingency(a, b)
    ai = table.sum(axis=1)
    bj = table.sum(axis=0)
    ha, hb = _entropy(ai, n), _entropy(bj, n)
    if ha == 0.0 or hb == 0.0:
        return 0.0
    mi = _mutual_information(table, n)
    emi = _expected_mi(ai, bj, n)
    if normalizer == "max":
        norm = max(ha, hb)
    elif normalizer == "min":
        norm = min(ha, hb)
    elif normalizer == "arithmetic":
        norm = 0.5 * (ha + hb)
    else:
        norm = math.sqrt(ha * hb)
    denom = norm - emi
    if abs(denom) < 1e-15:
        return 0.0
    return (mi - emi) / denom


def accuracy(params: ModelParams, data: Dataset) -> float:
    """Fraction of samples whose highest-scoring class is the label."""
    if data.n == 0:
        raise InputError("cannot evaluate accuracy on an empty dataset")
    scores = data.X @ params.B.T + params.beta0
    return float((scores.argmax(axis=1) + 1 == data.y).mean())


def _kmeans_pp_init(X: np.ndarray, k: int, rng) -> np.ndarray:
    """k-means++ seeding: iteratively sample centers with probability
    proportional to squared distance from the chosen set."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    idx = int(rng.integers(n))
    centers[0] = X[idx]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for t in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            idx = int(rng.choice(n, p=probs))
        else:
            idx = int(rng.integers(n))
        centers[t] = X[idx]
        d2 = np.minimum(d2, ((X - centers[t]) ** 2).sum(axis=1))
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int = 300):
    """Lloyd iterations to a stable assignment.

    Returns (labels, inertia, inertia_history); empty clusters are
    refilled with the point farthest from its current center.
    """
    k = centers.shape[0]
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        point_d2 = d2[np.arange(X.shape[0]), new_labels]
        # Re-scan after every repair: seizing the farthest point can
        # empty the cluster it was taken from.  With fewer distinct
        # points than clusters some cluster must stay empty; the pass
        # cap prevents cycling in that case.
        for _pass in range(k):
            fixed_any = False
            for g in range(k):
                if not np.any(new_labels == g):
                    far = int(point_d2.argmax())
                    centers[g] = X[far]
                    d2[:, g] = ((X - centers[g]) ** 2).sum(axis=1)
                    new_labels = d2.argmin(axis=1)
                    new_labels[far] = g
                    point_d2 = d2[np.arange(X.shape[0]), new_labels]
                    fixed_any = True
            if not fixed_any:
                break
        history.append(float(point_d2.sum()))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        for g in range(k):
            members = labels == g
            if np.any(members):
                centers[g] = X[members].mean(axis=0)
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(X.shape[0]), labels].sum())
    history.append(inertia)
    return labels, inertia, history


def _spectral_features(S: np.ndarray, k: int) -> np.ndarray:
    """Rows of the bottom-k eigenvectors of the symmetric normalized
    Laplacian, row-normalized; isolated covariates keep zero rows."""
    deg = S.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)),
                        0.0)
    L = np.eye(S.shape[0]) - inv_sqrt[:, None] * S * inv_sqrt[None, :]
    eigvals, eigvecs = np.linalg.eigh(L)
    feats = eigvecs[:, :k]
    norms = np.linalg.norm(feats, axis=1, keepdims=True)
    return feats / np.where(norms > 0, norms, 1.0)


def kmeans_similarity(S, k: int, seed: int = 0, restarts: int = 10,
                      representation: str = "rows",
                      threads: int = 1) -> Clustering:
    """Cluster covariates by k-means over a similarity representation.

    ``rows`` uses the similarity rows directly; ``spectral`` embeds via
    the normalized graph Laplacian first.  Runs ``restarts`` seeded
    k-means++ starts (independent generators, optionally in parallel) and
    keeps the lowest within-cluster sum of squares, ties to the earliest
    restart.
    """
    if isinstance(S, SimilarityGraph):
        S = S.to_dense()
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"S must be square, got {S.shape}")
    d = S.shape[0]
    if not 1 <= k <= d:
        raise InputError(f"k must lie in 1..{d}, got {k}")
    if restarts < 1:
        raise DomainError("need at least one restart")
    if representation not in REPRESENTATIONS:
        raise InputError(
            f"representation must be one of {REPRESENTATIONS}")
    X = S if representation == "rows" else _spectral_features(S, k)

    def one_restart(child_rng):
        centers = _kmeans_pp_init(X, k, child_rng)
        labels, inertia, _ = _lloyd(X, centers.copy())
        return labels, inertia

    children = np.random.default_rng(seed).spawn(restarts)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_restart, children))
    else:
        results = [one_restart(child) for child in children]
    best_labels, best_inertia = results[0]
    for labels, inertia in results[1:]:
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return Clustering.from_labels(best_labels.tolist())


def cv_select(records, data: Dataset, folds: int = 5, sigma: float = 1.0,
              seed: int = 0, return_scores: bool = False):
    """One-standard-deviation selector over a solved path.

    Scores each unique converged clustering by K-fold held-out
    log-likelihood of its reduced MAP fit (shared folds), then picks the
    smallest-m clustering whose mean is within one standard deviation
    (over folds) of the best mean.  Returns the first path record
    carrying the chosen clustering (with ``return_scores``, also a list
    of per-clustering stat dicts).
    """
    usable = [r for r in records if r.converged and not r.failed]
    if not usable:
        raise InputError("no converged records to select from")
    rng = np.random.default_rng(seed)
    held = _cv_folds(data, folds, rng)
    all_idx = np.arange(data.n)
    stats = {}
    for rec in usable:
        key = rec.clustering.key()
        if key in stats:
            continue
        fold_ll = []
        for h in held:
            train = np.setdiff1d(all_idx, h, assume_unique=True)
            red_train = project_dataset(
                Dataset(data.X[train], data.y[train], data.c), rec.clustering)
            params = map_fit(red_train, sigma)
            red_held = project_dataset(
                Dataset(data.X[h], data.y[h], data.c), rec.clustering)
            fold_ll.append(log_likelihood(params, red_held.as_dataset()))
        fold_ll = np.asarray(fold_ll)
        stats[key] = (float(fold_ll.mean()),
                      float(fold_ll.std(ddof=1)), rec)
    best_mean, best_sd, _ = max(stats.values(), key=lambda t: t[0])
    threshold = best_mean - best_sd
    eligible = [(rec.clustering.m, -mean, rec.nu, rec)
                for mean, _, rec in stats.values() if mean >= threshold]
    eligible.sort(key=lambda t: t[:3])
    chosen = eligible[0][3]
    if return_scores:
        table = [{"m": rec.clustering.m, "nu": rec.nu, "cv_mean": mean,
                  "cv_sd": sd, "eligible": mean >= threshold,
                  "selected": rec is chosen}
                 for mean, sd, rec in sorted(stats.values(),
                                             key=lambda t: -t[0])]
        return chosen, table
    return chosen
