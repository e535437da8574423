"""Overlap graph and weighted independent-set QUBO for consensus clustering.

The clusters of the three input clusterings become graph vertices; two
vertices are connected when their member sets share at least one point.
A consensus clustering is a maximum-weight independent set of that graph:
minimise

    f(x) = - sum_i w_i x_i + penalty * sum_{(i,j) in edges} x_i x_j

over x in {0,1}^n, where w_i is the cluster size divided by the dataset
size (so every weight lies in (0, 1]) and the penalty equals the number of
vertices. Because the penalty then exceeds any single weight, every global
minimiser is an independent set.

The dense symmetric matrix view places -w_i on the diagonal and penalty/2
on both off-diagonal entries of each edge so that x^T M x reproduces the
single-counted edge sum above.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .clustering import Cluster, Clustering
from .dataset import Dataset
from .errors import (
    DimensionMismatchError,
    EmptySelectionError,
    InvalidParameterError,
)


@dataclass(frozen=True)
class OverlapGraph:
    vertices: tuple[Cluster, ...]
    edges: tuple[tuple[int, int], ...]  # i < j, sorted
    overlap_size: dict[tuple[int, int], int]
    dataset_size: int

    @property
    def n(self) -> int:
        return len(self.vertices)


def build_graph(c1: Clustering, c2: Clustering, c3: Clustering) -> OverlapGraph:
    """Combine three clusterings into the cluster-overlap graph.

    Vertex order is c1's clusters, then c2's, then c3's, each in cluster
    order. Edges connect clusters sharing at least one point; clusters within
    one clustering are disjoint by construction, so edges only appear between
    different sources.
    """
    parts = (c1, c2, c3)
    n_points = c1.n_points
    if any(c.n_points != n_points for c in parts):
        raise DimensionMismatchError("clusterings refer to different dataset sizes")

    vertices: list[Cluster] = []
    offsets = []
    for c in parts:
        offsets.append(len(vertices))
        vertices.extend(c.clusters)

    labels = [c.labels() for c in parts]
    edges: list[tuple[int, int]] = []
    overlap: dict[tuple[int, int], int] = {}
    for a in range(3):
        for b in range(a + 1, 3):
            ka, kb = len(parts[a].clusters), len(parts[b].clusters)
            if ka == 0 or kb == 0:
                continue
            la, lb = labels[a], labels[b]
            both = (la >= 0) & (lb >= 0)
            if not both.any():
                continue
            codes = la[both] * kb + lb[both]
            counts = np.bincount(codes, minlength=ka * kb).reshape(ka, kb)
            for ia, ib in zip(*np.nonzero(counts)):
                i = offsets[a] + int(ia)
                j = offsets[b] + int(ib)
                edges.append((i, j))
                overlap[(i, j)] = int(counts[ia, ib])
    edges.sort()
    return OverlapGraph(
        vertices=tuple(vertices),
        edges=tuple(edges),
        overlap_size=overlap,
        dataset_size=n_points,
    )


@dataclass(frozen=True)
class QuboProblem:
    weights: np.ndarray  # (n,) float64, non-negative
    penalty: float
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise InvalidParameterError("weights must be a vector")
        if np.any(w < 0):
            raise InvalidParameterError("weights must be non-negative")
        if not self.penalty > 0:
            raise InvalidParameterError("penalty must be positive")
        for i, j in self.edges:
            if i == j:
                raise InvalidParameterError("self-edges are not allowed")
            if not (0 <= i < w.size and 0 <= j < w.size):
                raise InvalidParameterError("edge index out of range")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def matrix(self) -> np.ndarray:
        """Dense symmetric view: diag -w_i, penalty/2 per edge endpoint pair."""
        m = np.diag(-self.weights)
        for i, j in self.edges:
            m[i, j] += self.penalty / 2.0
            m[j, i] += self.penalty / 2.0
        return m


def build_qubo(g: OverlapGraph, dataset_size: int | None = None) -> QuboProblem:
    """Weights are cluster sizes normalised by the dataset size; the penalty
    is the vertex count, which dominates every normalised weight."""
    if g.n == 0:
        raise InvalidParameterError("overlap graph has no vertices")
    size = g.dataset_size if dataset_size is None else dataset_size
    if size < 1:
        raise InvalidParameterError("dataset_size must be >= 1")
    w = np.array([v.size / size for v in g.vertices], dtype=np.float64)
    return QuboProblem(weights=w, penalty=float(g.n), edges=g.edges)


def evaluate(q: QuboProblem, x: np.ndarray) -> float:
    """Objective value of an assignment, computed from the edge list."""
    x = np.asarray(x)
    if x.shape != (q.n,):
        raise DimensionMismatchError(f"assignment length {x.shape} != {q.n}")
    xf = x.astype(np.float64)
    conflicts = sum(xf[i] * xf[j] for i, j in q.edges)
    return float(-(q.weights @ xf) + q.penalty * conflicts)


def evaluate_matrix(q: QuboProblem, x: np.ndarray) -> float:
    """Objective via the dense matrix view; agrees with :func:`evaluate`."""
    x = np.asarray(x)
    if x.shape != (q.n,):
        raise DimensionMismatchError(f"assignment length {x.shape} != {q.n}")
    xf = x.astype(np.float64)
    return float(xf @ q.matrix() @ xf)


@dataclass(frozen=True)
class ConsensusClustering:
    selected: tuple[int, ...]            # vertex indices kept, independent set
    clusters: tuple[np.ndarray, ...]     # member indices per selected vertex
    unassigned: np.ndarray               # points repaired onto a nearest cluster
    assignment: np.ndarray               # (n_points,) position into `selected`

    @property
    def n_clusters(self) -> int:
        return len(self.selected)


def decode(q: QuboProblem, g: OverlapGraph, x: np.ndarray, ds: Dataset) -> ConsensusClustering:
    """Turn a bit assignment into a consensus clustering.

    If the selection is not independent (possible for a poor assignment),
    each violated edge drops its lower-weight endpoint (ties drop the higher
    index); edges are scanned once in sorted order, which suffices because
    vertices are only ever removed. Points covered by no surviving cluster
    are assigned to the selected cluster with the nearest centroid.
    """
    x = np.asarray(x)
    if x.shape != (q.n,):
        raise DimensionMismatchError(f"assignment length {x.shape} != {q.n}")
    if q.n != g.n:
        raise DimensionMismatchError("problem and graph sizes differ")
    selected = set(int(i) for i in np.nonzero(x)[0])
    if not selected:
        raise EmptySelectionError("assignment selects no clusters")
    for i, j in q.edges:
        if i in selected and j in selected:
            if q.weights[i] < q.weights[j]:
                selected.discard(i)
            elif q.weights[j] < q.weights[i]:
                selected.discard(j)
            else:
                selected.discard(max(i, j))
    kept = tuple(sorted(selected))

    n_points = len(ds)
    assignment = np.full(n_points, -1, dtype=np.int64)
    for pos, v in enumerate(kept):
        assignment[g.vertices[v].member_indices] = pos
    unassigned = np.nonzero(assignment == -1)[0]
    if unassigned.size:
        centroids = np.stack([ds.points[g.vertices[v].member_indices].mean(axis=0)
                              for v in kept])
        d2 = ((ds.points[unassigned][:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assignment[unassigned] = np.argmin(d2, axis=1)

    clusters = tuple(np.nonzero(assignment == pos)[0] for pos in range(len(kept)))
    return ConsensusClustering(
        selected=kept,
        clusters=clusters,
        unassigned=unassigned,
        assignment=assignment,
    )


# ---------------------------------------------------------------------------
# serialization (shared with the solver CLI and the simulator's job payloads)


def qubo_to_dict(q: QuboProblem) -> dict:
    return {
        "n": q.n,
        "w": q.weights.tolist(),
        "lambda": q.penalty,
        "edges": [[i, j] for i, j in q.edges],
    }


def qubo_from_dict(d: dict) -> QuboProblem:
    w = np.asarray(d["w"], dtype=np.float64)
    if int(d["n"]) != w.size:
        raise DimensionMismatchError("declared n does not match weights length")
    edges = tuple((int(i), int(j)) for i, j in d["edges"])
    return QuboProblem(weights=w, penalty=float(d["lambda"]), edges=edges)


def save_qubo(q: QuboProblem, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(qubo_to_dict(q), fh)


def load_qubo(path: str | os.PathLike) -> QuboProblem:
    with open(path, "r", encoding="ascii") as fh:
        return qubo_from_dict(json.load(fh))
