"""The iterative consensus pipeline under a malleable worker lease.

One loop iteration runs the three clusterings on the leased workers, builds
the overlap QUBO, shrinks the lease to a single worker, solves the QUBO on
the quantum backend (optionally with an artificial hardware delay), decodes
the consensus clustering and scores it with the silhouette value. The loop
stops at the first score above the configured threshold, or after the
iteration cap with the best result seen so far.

The lease choreography mirrors a malleable MPI job: a checkpoint (iteration
number, quantum flag, best-so-far) is written before every reconfiguration,
the quantum phase always runs on exactly one worker, and the expansion back
toward the full worker count happens at the top of the next iteration and
proceeds with whatever the provider can grant before the timeout. Restoring
a checkpoint written at the shrink point reproduces the uninterrupted run's
result bit for bit: every iteration derives its own clustering and annealing
seeds from the master seed, so recomputing an iteration's classical stage
after a restore yields the identical QUBO and solution.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import (
    AlgoParams,
    DbscanParams,
    HierarchicalParams,
    KmeansParams,
    Linkage,
    run_all,
)
from .consensus import (
    ConsensusClustering,
    build_graph,
    build_qubo,
    decode,
)
from .dataset import Dataset
from .errors import (
    ContractViolationError,
    DoubleInitError,
    EmptySelectionError,
    InvalidParameterError,
    NotEnoughClustersError,
)
from .qubo_solver import Backend, SaParams, solve
from .resources import Phase, ResourceLease, ResourceProvider
from .rng import derive_seed


# ---------------------------------------------------------------------------
# silhouette


def silhouette(ds: Dataset, assignment: np.ndarray, chunk: int = 1024) -> float:
    """Mean silhouette score of a full assignment.

    For each point, a is the mean distance to its co-cluster points and b the
    smallest mean distance to any other cluster; the point scores
    (b - a) / max(a, b). Singleton clusters score 0, as does the 0/0 case of
    coincident clusters; a == 0 < b scores 1 by the same formula.
    """
    labels = np.asarray(assignment, dtype=np.int64)
    n = len(ds)
    if labels.shape != (n,):
        raise InvalidParameterError("assignment must label every point")
    if np.any(labels < 0):
        raise InvalidParameterError("every scored point must be assigned")
    uniq, lab = np.unique(labels, return_inverse=True)
    k = uniq.size
    if k < 2:
        raise NotEnoughClustersError("silhouette needs at least two clusters")
    counts = np.bincount(lab, minlength=k).astype(np.float64)
    onehot = np.zeros((n, k), dtype=np.float64)
    onehot[np.arange(n), lab] = 1.0

    pts = ds.points
    sq = (pts ** 2).sum(axis=1)
    total = 0.0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        cross = pts[lo:hi] @ pts.T
        d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * cross
        np.maximum(d2, 0.0, out=d2)
        dist = np.sqrt(d2)
        sums = dist @ onehot  # (m, k) summed distance to each cluster
        rows = np.arange(hi - lo)
        own = lab[lo:hi]
        cnt_own = counts[own]
        a = sums[rows, own] / np.maximum(cnt_own - 1.0, 1.0)
        mean_other = sums / counts[None, :]
        mean_other[rows, own] = np.inf
        b = mean_other.min(axis=1)
        denom = np.maximum(a, b)
        s = np.where(denom > 0.0, (b - a) / np.where(denom > 0.0, denom, 1.0), 0.0)
        s = np.where(cnt_own <= 1.0, 0.0, s)
        total += float(s.sum())
    return total / n


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ParamSchedule:
    """Per-iteration clustering parameters.

    The default table explores monotonically: both k values grow as 2 + t
    while the DBSCAN radius shrinks as eps / (1 + 0.25 t), so early
    iterations see coarse structure and later ones finer structure. An
    ``explicit`` tuple of AlgoParams overrides the formula.
    """

    base_k: int = 2
    dbscan_eps: float = 8.0
    dbscan_min_pts: int = 5
    kmeans_max_iters: int = 100
    linkage: Linkage = Linkage.SINGLE
    explicit: tuple[AlgoParams, ...] | None = None

    def params_for(self, t: int, master_seed: int) -> AlgoParams:
        if self.explicit is not None:
            return self.explicit[min(t, len(self.explicit) - 1)]
        k = self.base_k + t
        return AlgoParams(
            kmeans=KmeansParams(k=k, max_iters=self.kmeans_max_iters,
                                seed=derive_seed(master_seed, t, 0)),
            dbscan=DbscanParams(eps=self.dbscan_eps / (1.0 + 0.25 * t),
                                min_pts=self.dbscan_min_pts),
            hierarchical=HierarchicalParams(k=k, linkage=self.linkage),
        )


@dataclass(frozen=True)
class PipelineConfig:
    silhouette_threshold: float = 0.8
    max_iterations: int = 10
    schedule: ParamSchedule = field(default_factory=ParamSchedule)
    sa: SaParams = field(default_factory=SaParams)
    backend: Backend = Backend.SA
    quantum_delay: float = 0.0
    seed: int = 1

    def __post_init__(self):
        # thresholds above 1 are tolerated: they make the gate unreachable,
        # which cap-behaviour tests rely on
        if self.silhouette_threshold <= -1.0:
            raise InvalidParameterError("threshold must exceed -1")
        if self.max_iterations < 1:
            raise InvalidParameterError("max_iterations must be >= 1")


@dataclass(frozen=True)
class BestResult:
    score: float
    best_x: np.ndarray
    consensus: ConsensusClustering | None


@dataclass(frozen=True)
class MalleableCheckpoint:
    iteration: int
    quantum_flag: bool
    best_score: float
    best_result: BestResult | None = None


@dataclass(frozen=True)
class PhaseRecord:
    phase: str  # classical | quantum | silhouette
    start: float
    end: float
    workers: int


@dataclass(frozen=True)
class PipelineResult:
    final: ConsensusClustering | None
    score: float
    iterations_run: int
    phase_log: tuple[PhaseRecord, ...]
    iteration_scores: tuple[float, ...]
    best_x: np.ndarray | None


# ---------------------------------------------------------------------------
# malleable runtime


class MalleableRuntime:
    """Reconfiguration endpoint for one pipeline instance.

    Owns the lease mutations: ``expand`` grows the lease toward its maximum
    by polling the provider until the timeout and proceeds with whatever was
    granted; ``minimize`` shrinks to one worker and enters the quantum phase.
    Both write a checkpoint before touching the allocation.
    """

    def __init__(self, provider: ResourceProvider, lease: ResourceLease,
                 checkpoint_dir: str | os.PathLike | None = None,
                 expand_timeout: float = 30.0, poll_interval: float = 0.005):
        self.provider = provider
        self.lease = lease
        self.checkpoint_dir = None if checkpoint_dir is None else os.fspath(checkpoint_dir)
        self.expand_timeout = expand_timeout
        self.poll_interval = poll_interval
        self.last_checkpoint: MalleableCheckpoint | None = None
        self._restart = None

    def init(self, restart) -> None:
        """Register the restart function used to resume after reconfiguration."""
        if self._restart is not None:
            raise DoubleInitError("runtime already initialised")
        self._restart = restart

    def restore(self, ck: MalleableCheckpoint):
        """Invoke the registered restart function on a saved checkpoint."""
        if self._restart is None:
            raise InvalidParameterError("runtime not initialised")
        return self._restart(ck)

    def save_checkpoint(self, ck: MalleableCheckpoint) -> None:
        self.last_checkpoint = ck
        if self.checkpoint_dir is not None:
            write_checkpoint(ck, self.checkpoint_dir)

    def expand(self, ck: MalleableCheckpoint, timeout: float | None = None) -> int:
        """Grow the lease toward max_workers; returns the held count.

        A timeout is a normal outcome: execution proceeds with whatever was
        granted. Calling expand during the quantum phase violates the lease
        contract; it raises in debug mode and is a no-op otherwise.
        """
        if self.lease.phase is Phase.QUANTUM:
            if __debug__:
                raise ContractViolationError("expand during quantum phase")
            return self.lease.held_workers
        self.save_checkpoint(ck)
        limit = self.expand_timeout if timeout is None else timeout
        deadline = time.monotonic() + limit
        while self.lease.held_workers < self.lease.max_workers:
            got = self.provider.acquire(self.lease.max_workers - self.lease.held_workers)
            if got:
                self.lease.grow(got)
            if self.lease.held_workers >= self.lease.max_workers:
                break
            if time.monotonic() >= deadline:
                break
            time.sleep(self.poll_interval)
        return self.lease.held_workers

    def minimize(self, ck: MalleableCheckpoint) -> None:
        """Checkpoint, shrink to one worker, enter the quantum phase."""
        if not ck.quantum_flag:
            raise InvalidParameterError("minimize requires a quantum-flagged checkpoint")
        self.save_checkpoint(ck)
        if self.lease.held_workers > 1:
            released = self.lease.shrink_to(1)
            self.provider.release(released)
        self.lease.enter_quantum()

    def resume_classical(self) -> None:
        self.lease.leave_quantum()


def acquire_lease(provider: ResourceProvider, want: int,
                  timeout: float = 30.0, poll_interval: float = 0.005) -> ResourceLease:
    """Initial allocation: up to ``want`` workers, at least one.

    Polls until at least one worker is free or the timeout elapses.
    """
    deadline = time.monotonic() + timeout
    granted = provider.acquire(want)
    while granted == 0:
        if time.monotonic() >= deadline:
            raise InvalidParameterError("no workers available before timeout")
        time.sleep(poll_interval)
        granted = provider.acquire(want)
    return ResourceLease(held_workers=granted, max_workers=want)


# ---------------------------------------------------------------------------
# checkpoint persistence


def write_checkpoint(ck: MalleableCheckpoint, directory: str | os.PathLike) -> str:
    os.makedirs(directory, exist_ok=True)
    best_path = None
    if ck.best_result is not None and ck.best_result.consensus is not None:
        best_path = os.path.join(os.fspath(directory), "best_result.json")
        br = ck.best_result
        with open(best_path, "w", encoding="ascii") as fh:
            json.dump({
                "score": br.score,
                "best_x": br.best_x.tolist(),
                "selected": list(br.consensus.selected),
                "assignment": br.consensus.assignment.tolist(),
                "unassigned": br.consensus.unassigned.tolist(),
            }, fh)
    path = os.path.join(os.fspath(directory), "checkpoint.json")
    with open(path, "w", encoding="ascii") as fh:
        json.dump({
            "iteration": ck.iteration,
            "quantum": ck.quantum_flag,
            "best_score": ck.best_score,
            "best_result_path": best_path,
        }, fh)
    return path


def read_checkpoint(path: str | os.PathLike) -> MalleableCheckpoint:
    with open(path, "r", encoding="ascii") as fh:
        d = json.load(fh)
    best = None
    if d.get("best_result_path"):
        with open(d["best_result_path"], "r", encoding="ascii") as fh:
            b = json.load(fh)
        assignment = np.asarray(b["assignment"], dtype=np.int64)
        selected = tuple(int(v) for v in b["selected"])
        clusters = tuple(np.nonzero(assignment == pos)[0]
                         for pos in range(len(selected)))
        consensus = ConsensusClustering(
            selected=selected,
            clusters=clusters,
            unassigned=np.asarray(b["unassigned"], dtype=np.int64),
            assignment=assignment,
        )
        best = BestResult(score=float(b["score"]),
                          best_x=np.asarray(b["best_x"], dtype=np.uint8),
                          consensus=consensus)
    return MalleableCheckpoint(
        iteration=int(d["iteration"]),
        quantum_flag=bool(d["quantum"]),
        best_score=float(d["best_score"]),
        best_result=best,
    )


def export_phase_log(log, path: str | os.PathLike) -> None:
    """CSV step records (phase,start_s,end_s,workers), plot-ready."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("phase,start_s,end_s,workers\n")
        for rec in log:
            fh.write(f"{rec.phase},{rec.start:.6f},{rec.end:.6f},{rec.workers}\n")


# ---------------------------------------------------------------------------
# driver


def run_pipeline(ds: Dataset, cfg: PipelineConfig, lease: ResourceLease,
                 runtime: MalleableRuntime,
                 resume_from: MalleableCheckpoint | None = None,
                 abort_at_minimize: int | None = None,
                 state_dir: str | os.PathLike | None = None) -> PipelineResult | None:
    """Drive the clustering-aggregation loop until the silhouette gate.

    ``resume_from`` continues a run from a saved checkpoint (the classical
    artifacts of a quantum-flagged iteration are recomputed, which is exact
    because all per-iteration seeds derive from the config seed).
    ``abort_at_minimize`` stops right after the shrink of the given iteration
    and returns None; it exists for checkpoint-equivalence tests.
    ``state_dir`` dumps each iteration's three clusterings and the QUBO as
    JSON files for inspection.
    """
    runtime.init(lambda ck: (ck.iteration, ck.quantum_flag))
    t_zero = time.monotonic()
    log: list[PhaseRecord] = []
    scores: list[float] = []

    def record(phase: str, start: float, workers: int) -> None:
        log.append(PhaseRecord(phase=phase, start=start,
                               end=time.monotonic() - t_zero, workers=workers))

    it0 = 0
    quantum = False
    best: BestResult | None = None
    if resume_from is not None:
        it0, quantum = runtime.restore(resume_from)
        best = resume_from.best_result

    iterations_run = it0
    for t in range(it0, cfg.max_iterations):
        params = cfg.schedule.params_for(t, cfg.seed)
        if not quantum:
            if t > it0:
                runtime.expand(MalleableCheckpoint(t, False, _score_of(best), best))
            start = time.monotonic() - t_zero
            workers = lease.held_workers
            res = run_all(ds, params, lease)
            graph = build_graph(*res.clusterings())
            problem = build_qubo(graph)
            record("classical", start, workers)
            quantum = True
            runtime.minimize(MalleableCheckpoint(t, True, _score_of(best), best))
            if abort_at_minimize == t:
                return None
        else:
            # resumed into the quantum stage: rebuild the iteration's QUBO on
            # the single held worker, then re-enter the quantum phase
            start = time.monotonic() - t_zero
            workers = lease.held_workers
            res = run_all(ds, params, lease)
            graph = build_graph(*res.clusterings())
            problem = build_qubo(graph)
            record("classical", start, workers)
            runtime.minimize(MalleableCheckpoint(t, True, _score_of(best), best))

        if state_dir is not None:
            _dump_iteration_state(state_dir, t, res, problem)

        sa_t = replace(cfg.sa, seed=derive_seed(cfg.sa.seed, t))
        start = time.monotonic() - t_zero
        result = solve(problem, cfg.backend, cfg.quantum_delay, sa_t)
        record("quantum", start, lease.held_workers)

        runtime.resume_classical()
        start = time.monotonic() - t_zero
        try:
            decoded = decode(problem, graph, result.best_x, ds)
            if decoded.n_clusters >= 2:
                score = silhouette(ds, decoded.assignment)
            else:
                score = -1.0  # a single consensus cluster cannot be scored
        except EmptySelectionError:
            decoded = None
            score = -1.0
        record("silhouette", start, lease.held_workers)

        scores.append(score)
        quantum = False
        if best is None or score > best.score:
            best = BestResult(score=score, best_x=result.best_x.copy(),
                              consensus=decoded)
        iterations_run = t + 1
        if score > cfg.silhouette_threshold:
            break

    assert best is not None
    return PipelineResult(
        final=best.consensus,
        score=best.score,
        iterations_run=iterations_run,
        phase_log=tuple(log),
        iteration_scores=tuple(scores),
        best_x=None if best.best_x is None else best.best_x.copy(),
    )


def _score_of(best: BestResult | None) -> float:
    return -1.0 if best is None else best.score


def _dump_iteration_state(directory, t, res, problem) -> None:
    from .clustering import clustering_to_dict
    from .consensus import save_qubo

    os.makedirs(directory, exist_ok=True)
    for c in res.clusterings():
        path = os.path.join(os.fspath(directory), f"iter{t}_{c.algo.value}.json")
        with open(path, "w", encoding="ascii") as fh:
            json.dump(clustering_to_dict(c), fh)
    save_qubo(problem, os.path.join(os.fspath(directory), f"iter{t}_qubo.json"))
