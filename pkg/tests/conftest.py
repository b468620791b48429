"""Shared construction helpers for the test suite."""

import numpy as np
import pytest

from covclust import Dataset, ModelParams, SimilarityGraph


def make_dataset(rng, n, d, c, scale=1.0):
    """Random dataset where every class appears at least once (n >= c)."""
    assert n >= c
    X = scale * rng.standard_normal((n, d))
    y = np.concatenate([np.arange(1, c + 1),
                        rng.integers(1, c + 1, size=n - c)])
    return Dataset(X, y.astype(np.int64), c)


def make_params(rng, c, d, scale=0.5):
    return ModelParams(scale * rng.standard_normal((c, d)),
                       scale * rng.standard_normal(c))


def make_graph(rng, d, p=0.4):
    """Random undirected graph with uniform(0.1, 1) weights."""
    iu, ju = np.triu_indices(d, k=1)
    keep = rng.random(iu.shape[0]) < p
    S = np.zeros((d, d))
    w = rng.uniform(0.1, 1.0, size=int(keep.sum()))
    S[iu[keep], ju[keep]] = w
    S[ju[keep], iu[keep]] = w
    return SimilarityGraph.from_dense(S)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
