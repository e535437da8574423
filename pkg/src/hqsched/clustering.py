"""The three base clustering algorithms whose outputs get aggregated.

k-means (k-means++ seeded Lloyd), DBSCAN, and agglomerative hierarchical
clustering, all over Euclidean distance on 2-D points. The implementations
are deliberately self-contained: every tie-break and iteration order is
pinned so that a run is bit-reproducible given the dataset and parameters,
which the consensus stage and the checkpoint-resume contract rely on.

``run_all`` executes the three algorithms on a worker lease, concurrently
when at least three workers are held, otherwise packed longest-expected
first, and records per-algorithm wall times for simulator calibration.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numba as nb
import numpy as np

from .dataset import Dataset
from .errors import InvalidParameterError
from .resources import ResourceLease
from .rng import Pcg32


class Algo(Enum):
    KMEANS = "kmeans"
    DBSCAN = "dbscan"
    HIERARCHICAL = "hierarchical"


class Linkage(Enum):
    SINGLE = "single"
    AVERAGE = "average"
    COMPLETE = "complete"


@dataclass(frozen=True)
class KmeansParams:
    k: int
    max_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.max_iters < 1:
            raise InvalidParameterError("kmeans needs k >= 1 and max_iters >= 1")


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if not self.eps > 0.0:
            raise InvalidParameterError("dbscan needs eps > 0")
        if self.min_pts < 1:
            raise InvalidParameterError("dbscan needs min_pts >= 1")


@dataclass(frozen=True)
class HierarchicalParams:
    k: int
    linkage: Linkage = Linkage.SINGLE

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError("hierarchical needs k >= 1")


@dataclass(frozen=True)
class AlgoParams:
    kmeans: KmeansParams
    dbscan: DbscanParams
    hierarchical: HierarchicalParams


def params_digest(params) -> str:
    """Short stable hash of a parameter dataclass."""
    return hashlib.sha256(repr(params).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Cluster:
    """One cluster: sorted member indices plus provenance."""

    id: int
    member_indices: np.ndarray  # sorted int64, non-empty
    source: Algo
    params_digest: str

    def __post_init__(self):
        idx = np.asarray(self.member_indices, dtype=np.int64)
        if idx.size == 0:
            raise InvalidParameterError("cluster must have at least one member")
        if np.any(np.diff(idx) <= 0):
            raise InvalidParameterError("member indices must be sorted and unique")
        idx.setflags(write=False)
        object.__setattr__(self, "member_indices", idx)

    @property
    def size(self) -> int:
        return int(self.member_indices.size)


@dataclass(frozen=True)
class Clustering:
    clusters: tuple[Cluster, ...]
    algo: Algo
    noise_indices: np.ndarray  # sorted, empty for kmeans/hierarchical
    n_points: int

    def __post_init__(self):
        noise = np.asarray(self.noise_indices, dtype=np.int64)
        noise.setflags(write=False)
        object.__setattr__(self, "noise_indices", noise)
        covered = np.zeros(self.n_points, dtype=bool)
        for c in self.clusters:
            if c.member_indices[-1] >= self.n_points or c.member_indices[0] < 0:
                raise InvalidParameterError("cluster index out of range")
            if np.any(covered[c.member_indices]):
                raise InvalidParameterError("clusters overlap within one clustering")
            covered[c.member_indices] = True
        if noise.size and np.any(covered[noise]):
            raise InvalidParameterError("noise indices overlap clusters")
        if int(covered.sum()) + noise.size != self.n_points:
            raise InvalidParameterError("clusters plus noise must cover all points")

    def labels(self) -> np.ndarray:
        """Per-point cluster position, -1 for noise."""
        lab = np.full(self.n_points, -1, dtype=np.int64)
        for pos, c in enumerate(self.clusters):
            lab[c.member_indices] = pos
        return lab


def _make_clustering(groups: list[np.ndarray], algo: Algo, digest: str,
                     n_points: int, noise: np.ndarray | None = None) -> Clustering:
    clusters = tuple(
        Cluster(id=i, member_indices=np.sort(g), source=algo, params_digest=digest)
        for i, g in enumerate(groups)
    )
    if noise is None:
        noise = np.empty(0, dtype=np.int64)
    return Clustering(clusters=clusters, algo=algo, noise_indices=np.sort(noise),
                      n_points=n_points)


# ---------------------------------------------------------------------------
# k-means


def _kmeans_pp_init(pts: np.ndarray, k: int, rng: Pcg32) -> np.ndarray:
    """k-means++ seeding; falls back to lowest unchosen index when all
    remaining squared distances are zero (duplicate-heavy inputs)."""
    n = pts.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.below(n)
    d2 = ((pts - pts[chosen[0]]) ** 2).sum(axis=1)
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for j in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            r = rng.uniform() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
            if taken[idx]:  # guard against cumsum rounding landing on a dup
                idx = int(np.argmin(taken))
        else:
            idx = int(np.argmin(taken))
        chosen[j] = idx
        taken[idx] = True
        d2 = np.minimum(d2, ((pts - pts[idx]) ** 2).sum(axis=1))
    return pts[chosen].copy()


def _lloyd(pts: np.ndarray, centroids: np.ndarray, max_iters: int):
    """Lloyd iterations to an assignment fixpoint.

    Returns (labels, inertia_history); a centroid that loses all points
    stays where it is and the cluster is dropped by the caller.
    """
    k = centroids.shape[0]
    labels = np.full(pts.shape[0], -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iters):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(pts.shape[0]), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k).astype(np.float64)
        sums_x = np.bincount(labels, weights=pts[:, 0], minlength=k)
        sums_y = np.bincount(labels, weights=pts[:, 1], minlength=k)
        nonempty = counts > 0
        centroids = centroids.copy()
        centroids[nonempty, 0] = sums_x[nonempty] / counts[nonempty]
        centroids[nonempty, 1] = sums_y[nonempty] / counts[nonempty]
    return labels, history


def kmeans(ds: Dataset, k: int, max_iters: int = 100, seed: int = 0) -> Clustering:
    """Lloyd's algorithm from a k-means++ initialisation.

    Deterministic given ``seed``; empty clusters are dropped from the output.
    """
    params = KmeansParams(k=k, max_iters=max_iters, seed=seed)
    n = len(ds)
    if k > n:
        raise InvalidParameterError("k must not exceed the number of points")
    pts = ds.points
    centroids = _kmeans_pp_init(pts, k, Pcg32(seed))
    labels, _ = _lloyd(pts, centroids, max_iters)
    groups = [np.nonzero(labels == c)[0] for c in range(k)]
    groups = [g for g in groups if g.size > 0]
    return _make_clustering(groups, Algo.KMEANS, params_digest(params), n)


# ---------------------------------------------------------------------------
# DBSCAN


def dbscan(ds: Dataset, eps: float, min_pts: int) -> Clustering:
    """Density-connected components over the eps-neighbourhood graph.

    Neighbourhoods include the point itself. Points are scanned in index
    order and seed sets expand FIFO in index order, so a border point in
    reach of several clusters joins the first one that reaches it.
    """
    params = DbscanParams(eps=eps, min_pts=min_pts)
    labels = _dbscan_labels(ds.points, eps * eps, min_pts)
    n = len(ds)
    cid = int(labels.max()) + 1 if labels.size else 0
    groups = [np.nonzero(labels == c)[0] for c in range(cid)]
    noise = np.nonzero(labels == -1)[0]
    return _make_clustering(groups, Algo.DBSCAN, params_digest(params), n, noise=noise)


@nb.njit(cache=True, nogil=True)
def _dbscan_labels(pts, eps2, min_pts):
    """Index-ordered scan with FIFO expansion; a point enters the queue at
    most once overall, because every queued point is labeled when popped."""
    n = pts.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    queued = np.zeros(n, dtype=np.uint8)
    queue = np.empty(n, dtype=np.int64)
    region = np.empty(n, dtype=np.int64)
    cid = 0
    for i in range(n):
        if labels[i] != -1:
            continue
        cnt = 0
        for j in range(n):
            dx = pts[i, 0] - pts[j, 0]
            dy = pts[i, 1] - pts[j, 1]
            if dx * dx + dy * dy <= eps2:
                region[cnt] = j
                cnt += 1
        if cnt < min_pts:
            continue  # not core; stays noise unless a cluster reaches it
        labels[i] = cid
        qlen = 0
        for r in range(cnt):
            j = region[r]
            if not queued[j]:
                queued[j] = 1
                queue[qlen] = j
                qlen += 1
        qi = 0
        while qi < qlen:
            p = queue[qi]
            qi += 1
            if labels[p] != -1:
                continue
            labels[p] = cid
            cnt = 0
            for j in range(n):
                dx = pts[p, 0] - pts[j, 0]
                dy = pts[p, 1] - pts[j, 1]
                if dx * dx + dy * dy <= eps2:
                    region[cnt] = j
                    cnt += 1
            if cnt >= min_pts:
                for r in range(cnt):
                    j = region[r]
                    if not queued[j]:
                        queued[j] = 1
                        queue[qlen] = j
                        qlen += 1
        cid += 1
    return labels


# ---------------------------------------------------------------------------
# hierarchical


@nb.njit(cache=True, nogil=True)
def _mst_arrays(pts):
    """Prim's minimum spanning tree over squared Euclidean distances, O(n^2).

    Returns (weights, sources, targets); ties on the frontier keep the
    lowest-index vertex.
    """
    n = pts.shape[0]
    in_tree = np.zeros(n, dtype=np.uint8)
    best_d2 = np.full(n, np.inf)
    best_src = np.zeros(n, dtype=np.int64)
    in_tree[0] = 1
    for j in range(1, n):
        dx = pts[0, 0] - pts[j, 0]
        dy = pts[0, 1] - pts[j, 1]
        best_d2[j] = dx * dx + dy * dy
    w = np.empty(n - 1, dtype=np.float64)
    src = np.empty(n - 1, dtype=np.int64)
    dst = np.empty(n - 1, dtype=np.int64)
    for e in range(n - 1):
        v = -1
        best = np.inf
        for j in range(n):
            if not in_tree[j] and best_d2[j] < best:
                best = best_d2[j]
                v = j
        w[e] = best_d2[v]
        src[e] = best_src[v]
        dst[e] = v
        in_tree[v] = 1
        for j in range(n):
            if not in_tree[j]:
                dx = pts[v, 0] - pts[j, 0]
                dy = pts[v, 1] - pts[j, 1]
                d2 = dx * dx + dy * dy
                if d2 < best_d2[j]:
                    best_d2[j] = d2
                    best_src[j] = v
    return w, src, dst


def _mst_edges(pts: np.ndarray) -> list[tuple[float, int, int]]:
    w, src, dst = _mst_arrays(np.ascontiguousarray(pts))
    return [(float(a), int(b), int(c)) for a, b, c in zip(w, src, dst)]


class _Dsu:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.cid = list(range(n))  # component id = smallest member index

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        self.parent[rb] = ra
        self.cid[ra] = min(self.cid[ra], self.cid[rb])


def _single_linkage_groups(pts: np.ndarray, k: int) -> list[np.ndarray]:
    """Cut the single-linkage dendrogram at k clusters.

    Merges MST edges in ascending distance order; among equal distances the
    pair with the smallest (min cluster id, second id) merges first, where a
    cluster's id is its smallest member index.
    """
    n = pts.shape[0]
    dsu = _Dsu(n)
    edges = sorted(_mst_edges(pts), key=lambda e: e[0])
    merges_left = n - k
    i = 0
    while merges_left > 0:
        j = i
        while j + 1 < len(edges) and edges[j + 1][0] == edges[i][0]:
            j += 1
        group = list(range(i, j + 1))
        while group and merges_left > 0:
            def key(gi):
                _, u, v = edges[gi]
                a, b = dsu.cid[dsu.find(u)], dsu.cid[dsu.find(v)]
                return (min(a, b), max(a, b))
            pick = min(group, key=key)
            _, u, v = edges[pick]
            dsu.union(u, v)
            group.remove(pick)
            merges_left -= 1
        i = j + 1
    roots = np.array([dsu.cid[dsu.find(x)] for x in range(n)])
    return [np.nonzero(roots == r)[0] for r in sorted(set(roots.tolist()))]


def _lance_williams_groups(pts: np.ndarray, k: int, linkage: Linkage) -> list[np.ndarray]:
    """Naive agglomerative merging for average/complete linkage.

    Holds the full distance matrix; fine at desk scale (a few thousand
    points), not meant for the 10^5 regime the single-linkage path handles.
    """
    n = pts.shape[0]
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    active = [True] * n
    members: list[list[int]] = [[i] for i in range(n)]
    cid = list(range(n))
    for _ in range(n - k):
        best = None
        for a in range(n):
            if not active[a]:
                continue
            row = dist[a]
            b = int(np.argmin(row))
            cand = (row[b], min(cid[a], cid[b]), max(cid[a], cid[b]), a, b)
            if best is None or cand[:3] < best[:3]:
                best = cand
        _, _, _, a, b = best
        a, b = (a, b) if cid[a] < cid[b] else (b, a)
        na, nb = len(members[a]), len(members[b])
        if linkage is Linkage.COMPLETE:
            merged = np.maximum(dist[a], dist[b])
        else:
            merged = (na * dist[a] + nb * dist[b]) / (na + nb)
        dist[a, :] = merged
        dist[:, a] = merged
        dist[a, a] = np.inf
        dist[b, :] = np.inf
        dist[:, b] = np.inf
        members[a].extend(members[b])
        members[b] = []
        active[b] = False
        cid[a] = min(cid[a], cid[b])
    groups = [np.array(sorted(members[i]), dtype=np.int64) for i in range(n) if active[i]]
    groups.sort(key=lambda g: int(g[0]))
    return groups


def hierarchical(ds: Dataset, k: int, linkage: Linkage = Linkage.SINGLE) -> Clustering:
    """Agglomerative clustering from singletons down to exactly k clusters."""
    params = HierarchicalParams(k=k, linkage=linkage)
    n = len(ds)
    if k > n:
        raise InvalidParameterError("k must not exceed the number of points")
    if k == n:
        groups = [np.array([i], dtype=np.int64) for i in range(n)]
    elif linkage is Linkage.SINGLE:
        groups = _single_linkage_groups(ds.points, k)
    else:
        groups = _lance_williams_groups(ds.points, k, linkage)
    return _make_clustering(groups, Algo.HIERARCHICAL, params_digest(params), n)


# ---------------------------------------------------------------------------
# parallel execution


@dataclass(frozen=True)
class AlgoTiming:
    start: float  # seconds from run_all entry
    end: float

    @property
    def elapsed(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class RunAllResult:
    kmeans: Clustering
    dbscan: Clustering
    hierarchical: Clustering
    timings: dict[Algo, AlgoTiming]

    def clusterings(self) -> tuple[Clustering, Clustering, Clustering]:
        return self.kmeans, self.dbscan, self.hierarchical


# Submission order when workers are scarce: measured cost on blob data is
# dbscan >= hierarchical >> kmeans.
_EXPECTED_LONGEST_FIRST = (Algo.DBSCAN, Algo.HIERARCHICAL, Algo.KMEANS)


def run_all(ds: Dataset, params: AlgoParams, workers: ResourceLease) -> RunAllResult:
    """Run the three algorithms on the leased workers.

    With >= 3 held workers the algorithms run concurrently; with fewer they
    are packed longest-expected-first onto the available workers. Wall times
    per algorithm are recorded relative to entry.
    """
    if workers.held_workers < 1:
        raise InvalidParameterError("lease must grant at least one worker")
    t0 = time.monotonic()

    def timed(fn):
        def run():
            start = time.monotonic() - t0
            out = fn()
            return out, start, time.monotonic() - t0
        return run

    tasks = {
        Algo.KMEANS: timed(lambda: kmeans(ds, params.kmeans.k, params.kmeans.max_iters,
                                          params.kmeans.seed)),
        Algo.DBSCAN: timed(lambda: dbscan(ds, params.dbscan.eps, params.dbscan.min_pts)),
        Algo.HIERARCHICAL: timed(lambda: hierarchical(ds, params.hierarchical.k,
                                                      params.hierarchical.linkage)),
    }
    results: dict[Algo, Clustering] = {}
    timings: dict[Algo, AlgoTiming] = {}
    with ThreadPoolExecutor(max_workers=workers.held_workers) as pool:
        futures = {algo: pool.submit(tasks[algo]) for algo in _EXPECTED_LONGEST_FIRST}
        for algo, fut in futures.items():
            out, start, end = fut.result()
            results[algo] = out
            timings[algo] = AlgoTiming(start=start, end=end)
    return RunAllResult(
        kmeans=results[Algo.KMEANS],
        dbscan=results[Algo.DBSCAN],
        hierarchical=results[Algo.HIERARCHICAL],
        timings=timings,
    )


# ---------------------------------------------------------------------------
# serialization


def clustering_to_dict(c: Clustering) -> dict:
    """JSON-ready form: {algo, params_digest, clusters, noise}."""
    digest = c.clusters[0].params_digest if c.clusters else ""
    return {
        "algo": c.algo.value,
        "params_digest": digest,
        "clusters": [c_.member_indices.tolist() for c_ in c.clusters],
        "noise": c.noise_indices.tolist(),
        "n_points": c.n_points,
    }


def clustering_from_dict(d: dict) -> Clustering:
    algo = Algo(d["algo"])
    groups = [np.asarray(g, dtype=np.int64) for g in d["clusters"]]
    noise = np.asarray(d["noise"], dtype=np.int64)
    n = int(d["n_points"])
    clusters = tuple(
        Cluster(id=i, member_indices=np.sort(g), source=algo,
                params_digest=d.get("params_digest", ""))
        for i, g in enumerate(groups)
    )
    return Clustering(clusters=clusters, algo=algo, noise_indices=np.sort(noise),
                      n_points=n)
