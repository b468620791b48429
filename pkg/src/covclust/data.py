"""Core data containers and their CSV representations.

Covariates and classes are numbered 1..d and 1..c everywhere a user can
see them (labels, graph edges, cluster ids); array indices are 0-based
only inside numerical code.  CSV files may start with ``#`` comment lines
carrying provenance; readers skip them, writers emit them verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, InputError

__all__ = [
    "Dataset",
    "ModelParams",
    "SimilarityGraph",
    "load_dataset",
    "save_dataset",
    "load_similarity",
    "save_similarity",
]


def _as_float_matrix(a, name):
    arr = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class Dataset:
    """Classification sample set.

    X : (n, d) float64 design matrix.
    y : (n,) integer labels in 1..c.
    c : number of classes (>= 2); inferred as max(y) when omitted.

    n = 0 is legal for the container itself (the solver's quadratic
    subproblem is well defined without data); loaders reject empty files.
    """

    X: np.ndarray
    y: np.ndarray
    c: int = 0

    def __post_init__(self):
        X = _as_float_matrix(self.X, "X")
        y = np.asarray(self.y)
        if y.ndim != 1:
            raise DimensionError(f"y must be 1-D, got shape {y.shape}")
        if y.shape[0] != X.shape[0]:
            raise DimensionError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if y.size and not np.issubdtype(y.dtype, np.integer):
            yf = np.asarray(y, dtype=np.float64)
            if not np.all(yf == np.round(yf)):
                raise DomainError("labels must be integers")
        y = np.ascontiguousarray(y, dtype=np.int64)
        c = int(self.c) if self.c else (int(y.max()) if y.size else 0)
        if c < 2:
            raise DomainError(f"need at least 2 classes, got c={c}")
        if y.size and (y.min() < 1 or y.max() > c):
            raise InputError(
                f"labels must lie in 1..{c}, found range "
                f"[{y.min()}, {y.max()}]"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def y0(self) -> np.ndarray:
        """Labels shifted to 0..c-1 for array indexing."""
        return self.y - 1

    def class_counts(self) -> np.ndarray:
        """Number of samples per class, shape (c,)."""
        return np.bincount(self.y0, minlength=self.c)


@dataclass(frozen=True)
class ModelParams:
    """Multinomial logistic parameters: weights B (c, d), intercepts beta0 (c,)."""

    B: np.ndarray
    beta0: np.ndarray

    def __post_init__(self):
        B = _as_float_matrix(self.B, "B")
        beta0 = np.ascontiguousarray(np.asarray(self.beta0, dtype=np.float64))
        if beta0.ndim != 1:
            raise DimensionError(f"beta0 must be 1-D, got shape {beta0.shape}")
        if beta0.shape[0] != B.shape[0]:
            raise DimensionError(
                f"B has {B.shape[0]} classes but beta0 has {beta0.shape[0]}"
            )
        if not np.all(np.isfinite(beta0)):
            raise DomainError("beta0 contains non-finite values")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "beta0", beta0)

    @property
    def c(self) -> int:
        return self.B.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    @classmethod
    def zeros(cls, c: int, d: int) -> "ModelParams":
        return cls(np.zeros((c, d)), np.zeros(c))

    @classmethod
    def random(cls, c: int, d: int, seed: int = 0, scale: float = 0.1) -> "ModelParams":
        rng = np.random.default_rng(seed)
        return cls(scale * rng.standard_normal((c, d)),
                   scale * rng.standard_normal(c))


@dataclass(frozen=True)
class SimilarityGraph:
    """Sparse symmetric covariate-similarity graph.

    edges : (l, 2) int64, 1-based covariate pairs with edges[k, 0] <
            edges[k, 1], sorted lexicographically.  An edge exists exactly
            where the similarity is strictly positive.
    weights : (l,) float64, strictly positive.
    d : number of covariates.
    """

    edges: np.ndarray
    weights: np.ndarray
    d: int
    _adjacency: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        d = int(self.d)
        if d < 1:
            raise DomainError(f"d must be >= 1, got {d}")
        if edges.shape[0] != weights.shape[0]:
            raise DimensionError(
                f"{edges.shape[0]} edges but {weights.shape[0]} weights"
            )
        if edges.size:
            if edges.min() < 1 or edges.max() > d:
                raise InputError(f"edge endpoints must lie in 1..{d}")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise InputError("edges must satisfy i < j (no self loops)")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = np.ascontiguousarray(edges[order])
            weights = np.ascontiguousarray(weights[order])
            if np.any((edges[1:] == edges[:-1]).all(axis=1)):
                raise InputError("duplicate edges")
        if not np.all(np.isfinite(weights)):
            raise DomainError("weights contain non-finite values")
        if np.any(weights <= 0):
            raise DomainError("edge weights must be strictly positive")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "_adjacency", None)

    @property
    def l(self) -> int:
        return self.edges.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        """Edge count incident to each covariate, shape (d,)."""
        deg = np.zeros(self.d, dtype=np.int64)
        if self.l:
            deg += np.bincount(self.edges[:, 0] - 1, minlength=self.d)
            deg += np.bincount(self.edges[:, 1] - 1, minlength=self.d)
        return deg

    def neighbors(self, i: int) -> np.ndarray:
        """1-based neighbor ids of covariate i, ascending."""
        if not 1 <= i <= self.d:
            raise InputError(f"covariate id {i} outside 1..{self.d}")
        mask_i = self.edges[:, 0] == i
        mask_j = self.edges[:, 1] == i
        return np.sort(np.concatenate(
            [self.edges[mask_i, 1], self.edges[mask_j, 0]]))

    def edge_arrays(self):
        """0-based arrays for the solver: (ei, ej, tails, weights).

        tails has length 2l: tails[k] = ei[k] for the forward directed
        copy of edge k, tails[l + k] = ej[k] for the backward copy.
        """
        ei = np.ascontiguousarray(self.edges[:, 0] - 1)
        ej = np.ascontiguousarray(self.edges[:, 1] - 1)
        tails = np.ascontiguousarray(np.concatenate([ei, ej]))
        return ei, ej, tails, self.weights

    def to_dense(self) -> np.ndarray:
        """Dense symmetric similarity matrix with zero diagonal."""
        S = np.zeros((self.d, self.d))
        if self.l:
            i = self.edges[:, 0] - 1
            j = self.edges[:, 1] - 1
            S[i, j] = self.weights
            S[j, i] = self.weights
        return S

    @classmethod
    def from_dense(cls, S, tol: float = 0.0) -> "SimilarityGraph":
        """Build a graph from a square matrix.

        Strictly positive off-diagonal entries become edges; zeros and
        negatives mean "no similarity".  The diagonal is ignored.
        """
        S = _as_float_matrix(S, "S")
        if S.shape[0] != S.shape[1]:
            raise DimensionError(f"S must be square, got {S.shape}")
        asym = np.abs(S - S.T).max() if S.size else 0.0
        if asym > tol:
            raise InputError(
                f"S is not symmetric (max |S - S^T| = {asym:.3g})")
        iu, ju = np.triu_indices(S.shape[0], k=1)
        w = S[iu, ju]
        keep = w > 0
        return cls(np.column_stack([iu[keep] + 1, ju[keep] + 1]),
                   w[keep], S.shape[0])

    @classmethod
    def from_pairs(cls, i, j, w, d: int) -> "SimilarityGraph":
        """Build a graph from 1-based index triples (i, j, weight).

        Pairs may come in either orientation; zero weights are dropped
        (zero similarity means no edge), negative weights are rejected.
        """
        i = np.asarray(i, dtype=np.int64).reshape(-1)
        j = np.asarray(j, dtype=np.int64).reshape(-1)
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if not (i.shape == j.shape == w.shape):
            raise DimensionError("i, j, w must have equal length")
        if np.any(i == j):
            raise InputError("self loops are not allowed")
        if np.any(w < 0):
            raise DomainError("negative similarity weight")
        keep = w > 0
        lo = np.minimum(i[keep], j[keep])
        hi = np.maximum(i[keep], j[keep])
        return cls(np.column_stack([lo, hi]), w[keep], d)


def _data_rows(path):
    """Yield (line_number, row_cells) for non-comment, non-blank CSV lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, [cell.strip() for cell in stripped.split(",")]


def _fmt(v: float) -> str:
    """Shortest decimal string that round-trips the float64 exactly."""
    return repr(float(v))


def _write_lines(path, comments, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for comment in comments or []:
            fh.write(f"# {comment}\n")
        for line in lines:
            fh.write(line + "\n")


def load_dataset(path, c: int = 0) -> Dataset:
    """Read a dataset CSV: header ``y,x1,...,xd`` then one row per sample."""
    rows = _data_rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise InputError(f"{path}: no data rows") from None
    if header[0] != "y" or len(header) < 2:
        raise InputError(f"{path}: expected header starting 'y,x1,...'")
    d = len(header) - 1
    ys, xs = [], []
    for lineno, cells in rows:
        if len(cells) != d + 1:
            raise InputError(
                f"{path}:{lineno}: expected {d + 1} columns, got {len(cells)}")
        try:
            ys.append(int(cells[0]))
            xs.append([float(v) for v in cells[1:]])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    if not ys:
        raise InputError(f"{path}: no data rows")
    try:
        return Dataset(np.array(xs), np.array(ys), c)
    except (DimensionError, DomainError, InputError) as exc:
        raise InputError(f"{path}: {exc}") from None


def save_dataset(path, data: Dataset, comments=None) -> None:
    header = "y," + ",".join(f"x{j}" for j in range(1, data.d + 1))
    lines = [header]
    for s in range(data.n):
        lines.append(
            str(int(data.y[s])) + ","
            + ",".join(_fmt(v) for v in data.X[s]))
    _write_lines(path, comments, lines)


def load_similarity(path, d: int = 0) -> SimilarityGraph:
    """Read a similarity CSV in either layout.

    Triple layout: header ``i,j,weight`` then one edge per row (needs
    ``d``).  Dense layout: a headerless square matrix of floats.
    """
    rows = list(_data_rows(path))
    if not rows:
        raise InputError(f"{path}: empty similarity file")
    first = rows[0][1]
    try:
        if [c.lower() for c in first] == ["i", "j", "weight"]:
            if d < 1:
                raise InputError(
                    f"{path}: triple layout needs an explicit covariate count")
            trips = [(int(r[0]), int(r[1]), float(r[2])) for _, r in rows[1:]]
            i = [t[0] for t in trips]
            j = [t[1] for t in trips]
            w = [t[2] for t in trips]
            return SimilarityGraph.from_pairs(i, j, w, d)
        mat = [[float(v) for v in cells] for _, cells in rows]
        S = np.array(mat)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise InputError(f"{path}: dense similarity must be square")
        if d and S.shape[0] != d:
            raise InputError(
                f"{path}: matrix is {S.shape[0]}x{S.shape[0]}, expected d={d}")
        return SimilarityGraph.from_dense(S)
    except (ValueError, DomainError, DimensionError) as exc:
        raise InputError(f"{path}: {exc}") from None


def save_similarity(path, S, comments=None) -> None:
    """Write a dense similarity matrix (or a graph's dense form)."""
    if isinstance(S, SimilarityGraph):
        S = S.to_dense()
    S = _as_float_matrix(S, "S")
    lines = [",".join(_fmt(v) for v in row) for row in S]
    _write_lines(path, comments, lines)
