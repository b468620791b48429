"""Cluster extraction from a converged solver state.

An edge {i, j} is fused when its two directed auxiliary vectors are
bitwise equal; the closed-form update writes one shared midpoint to both
directions in that regime, so the test needs no tolerance.  Covariate
clusters are the connected components of the fused subgraph, labeled
canonically: components are numbered 1..m in order of their smallest
member covariate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .admm import AdmmState
from .data import SimilarityGraph
from .errors import DimensionError, DomainError, InputError

__all__ = ["Clustering", "fusion_edges", "connected_components", "to_dot"]


@dataclass(frozen=True)
class Clustering:
    """Partition of covariates 1..d into clusters 1..m.

    assignment[i - 1] is the cluster id of covariate i.  Labels are
    canonical: cluster ids appear in first-use order when scanning
    covariates ascending, which numbers clusters by smallest member.
    """

    assignment: np.ndarray
    m: int

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.assignment, dtype=np.int64))
        if a.ndim != 1 or a.size == 0:
            raise DimensionError("assignment must be a non-empty 1-D array")
        m = int(self.m)
        if a.min() < 1 or a.max() > m:
            raise DomainError(f"cluster ids must lie in 1..{m}")
        used = np.unique(a)
        if used.size != m:
            raise DomainError(f"m={m} but only {used.size} ids are used")
        # canonical form: first occurrences are 1, 2, ... in order
        first_use = {}
        for v in a:
            if int(v) not in first_use:
                first_use[int(v)] = len(first_use) + 1
        if any(k != v for k, v in first_use.items()):
            raise DomainError("assignment is not canonically labeled; "
                              "use Clustering.from_labels")
        object.__setattr__(self, "assignment", a)
        object.__setattr__(self, "m", m)

    @property
    def d(self) -> int:
        return self.assignment.shape[0]

    @classmethod
    def from_labels(cls, labels) -> "Clustering":
        """Build from arbitrary hashable labels, canonicalizing ids."""
        labels = list(labels)
        if not labels:
            raise DimensionError("labels must be non-empty")
        seen: dict = {}
        assignment = np.empty(len(labels), dtype=np.int64)
        for idx, lab in enumerate(labels):
            if lab not in seen:
                seen[lab] = len(seen) + 1
            assignment[idx] = seen[lab]
        return cls(assignment, len(seen))

    @classmethod
    def singletons(cls, d: int) -> "Clustering":
        return cls(np.arange(1, d + 1), d)

    @classmethod
    def all_in_one(cls, d: int) -> "Clustering":
        return cls(np.ones(d, dtype=np.int64), 1)

    def members(self, g: int) -> np.ndarray:
        """1-based covariate ids in cluster g, ascending."""
        if not 1 <= g <= self.m:
            raise InputError(f"cluster id {g} outside 1..{self.m}")
        return np.flatnonzero(self.assignment == g) + 1

    def as_sets(self) -> list[frozenset]:
        return [frozenset(self.members(g).tolist())
                for g in range(1, self.m + 1)]

    def key(self) -> tuple:
        """Hashable identity of the partition (canonical labels make
        equal partitions identical tuples)."""
        return tuple(self.assignment.tolist())

    def to_jsonable(self) -> dict:
        return {"d": self.d, "m": self.m,
                "assignment": self.assignment.tolist()}

    @classmethod
    def from_jsonable(cls, obj) -> "Clustering":
        try:
            clus = cls(np.asarray(obj["assignment"], dtype=np.int64),
                       int(obj["m"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed clustering object: {exc}") from None
        if "d" in obj and int(obj["d"]) != clus.d:
            raise InputError("clustering d field disagrees with assignment")
        return clus


def fusion_edges(state: AdmmState, graph: SimilarityGraph) -> np.ndarray:
    """(k, 2) array of 1-based fused pairs: edges whose directed
    auxiliaries are bitwise equal."""
    if not np.array_equal(state.edges, graph.edges):
        raise InputError("solver state does not belong to this graph")
    if graph.l == 0:
        return np.zeros((0, 2), dtype=np.int64)
    mask = np.asarray(kernels.default_backend().fused_mask(state.z),
                      dtype=bool)
    return graph.edges[mask]


def connected_components(d: int, edges) -> Clustering:
    """Union-find over 1-based vertex pairs; isolated covariates become
    singleton clusters."""
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 1 or edges.max() > d):
        raise InputError(f"edge endpoints must lie in 1..{d}")
    parent = list(range(d))

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for i, j in edges:
        ri, rj = find(int(i) - 1), find(int(j) - 1)
        if ri != rj:
            # attach the larger root under the smaller to keep roots
            # equal to smallest members
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj
    return Clustering.from_labels([find(i) for i in range(d)])


def extract_clustering(state: AdmmState, graph: SimilarityGraph) -> Clustering:
    """Fused edges and their connected components in one call."""
    return connected_components(graph.d, fusion_edges(state, graph))


def to_dot(clustering: Clustering, names=None) -> str:
    """Graphviz rendering: one subgraph cluster per covariate cluster."""
    if names is not None:
        if len(names) != clustering.d:
            raise DimensionError(
                f"{len(names)} names for {clustering.d} covariates")
        label = lambda i: str(names[i - 1])
    else:
        label = lambda i: f"x{i}"
    lines = ["graph covariate_clusters {", "  node [shape=box];"]
    for g in range(1, clustering.m + 1):
        lines.append(f"  subgraph cluster_{g} {{")
        lines.append(f'    label="cluster {g}";')
        for i in clustering.members(g):
            lines.append(f'    v{i} [label="{label(int(i))}"];')
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
