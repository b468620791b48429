"""Multinomial logistic likelihood, its gradient, and the joint objective.

The model assigns P(y | x) = exp(B[y] . x + beta0[y]) / sum_k exp(B[k] . x
+ beta0[k]).  The training criterion is the negative log-likelihood plus a
ridge term lam * ||B||_F^2 (intercepts unpenalized) plus, in the joint
objective, a similarity-weighted sum of column-difference norms that drives
covariate columns of B to fuse.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, ModelParams, SimilarityGraph
from .errors import DimensionError, DomainError

__all__ = [
    "class_probs",
    "log_likelihood",
    "penalized_nll",
    "penalized_nll_grad",
    "nll_value_grad",
    "fusion_penalty",
    "full_objective",
]


def _check_match(params: ModelParams, data: Dataset) -> None:
    if params.d != data.d:
        raise DimensionError(
            f"params cover {params.d} covariates, data has {data.d}")
    if params.c != data.c:
        raise DimensionError(
            f"params cover {params.c} classes, data has {data.c}")


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax, stable under large scores."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def class_probs(params: ModelParams, x) -> np.ndarray:
    """Class probabilities for a single covariate vector, shape (c,)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != params.d:
        raise DimensionError(
            f"x has {x.shape[0]} entries, params cover {params.d} covariates")
    if not np.all(np.isfinite(x)):
        raise DomainError("x contains non-finite values")
    scores = params.B @ x + params.beta0
    return np.exp(_log_softmax(scores[None, :]))[0]


def log_likelihood(params: ModelParams, data: Dataset) -> float:
    """Sum over samples of log P(y_s | x_s)."""
    _check_match(params, data)
    if data.n == 0:
        return 0.0
    logp = _log_softmax(data.X @ params.B.T + params.beta0)
    return float(logp[np.arange(data.n), data.y0].sum())


def penalized_nll(params: ModelParams, data: Dataset, lam: float) -> float:
    """Negative log-likelihood plus lam * ||B||_F^2."""
    if lam < 0:
        raise DomainError(f"lam must be >= 0, got {lam}")
    ridge = lam * float(np.einsum("ij,ij->", params.B, params.B))
    return -log_likelihood(params, data) + ridge


def _nll_value_grad_raw(B, beta0, X, y0, n, lam):
    """Penalized-NLL value and gradients from raw arrays.

    No container validation: optimizers call this on arbitrary line-search
    points and must see inf rather than an exception when the ridge term
    overflows.
    """
    ridge = lam * float(np.einsum("ij,ij->", B, B))
    if n == 0:
        return ridge, 2.0 * lam * B, np.zeros_like(beta0)
    logp = _log_softmax(X @ B.T + beta0)
    value = -float(logp[np.arange(n), y0].sum()) + ridge
    resid = np.exp(logp)
    resid[np.arange(n), y0] -= 1.0
    grad_B = resid.T @ X + 2.0 * lam * B
    grad_beta0 = resid.sum(axis=0)
    return value, grad_B, grad_beta0


def nll_value_grad(params: ModelParams, data: Dataset, lam: float):
    """Value and gradients of the penalized NLL in one pass.

    Returns (value, grad_B, grad_beta0) with grad_B shaped like B and
    grad_beta0 shaped like beta0.
    """
    _check_match(params, data)
    if lam < 0:
        raise DomainError(f"lam must be >= 0, got {lam}")
    return _nll_value_grad_raw(params.B, params.beta0, data.X, data.y0,
                               data.n, lam)


def penalized_nll_grad(params: ModelParams, data: Dataset, lam: float):
    """Gradients of ``penalized_nll`` with respect to (B, beta0)."""
    _, grad_B, grad_beta0 = nll_value_grad(params, data, lam)
    return grad_B, grad_beta0


def fusion_penalty(params: ModelParams, graph: SimilarityGraph) -> float:
    """Sum over edges of weight * ||B[:, i] - B[:, j]||_2."""
    if graph.d != params.d:
        raise DimensionError(
            f"graph covers {graph.d} covariates, params {params.d}")
    if graph.l == 0:
        return 0.0
    ei, ej, _, w = graph.edge_arrays()
    diff = params.B[:, ei] - params.B[:, ej]
    return float(w @ np.sqrt(np.einsum("ce,ce->e", diff, diff)))


def full_objective(params: ModelParams, data: Dataset,
                   graph: SimilarityGraph, lam: float, nu: float) -> float:
    """The joint criterion: penalized NLL plus nu times the fusion penalty."""
    if nu < 0:
        raise DomainError(f"nu must be >= 0, got {nu}")
    return penalized_nll(params, data, lam) + nu * fusion_penalty(params, graph)
