"""Solvers for the weighted independent-set QUBO.

``solve_sa`` is a Metropolis single-bit-flip simulated annealer with a
geometric cooling schedule, standing in for the quantum phase. ``solve_exact``
enumerates all assignments (guarded to n <= 24) and is the verification
oracle. ``solve`` is the facade the pipeline calls: it dispatches to a
backend and then sleeps a configurable artificial delay, emulating the
multi-minute turnaround of slow quantum hardware.

Annealing determinism: every restart r draws from its own splitmix64 stream
seeded by ``derive_seed(seed, r)``, so results are independent of execution
order and identical across runs. The flip acceptance rule is
``min(1, exp(-delta/T))``; the temperature multiplies by ``alpha`` after each
block of ``sweeps_per_temp`` sweeps (one sweep = n proposed flips) until it
drops below ``t_final``. Energy deltas are maintained incrementally from the
flipped bit's neighbourhood; whenever a new best is recorded its energy is
recomputed from scratch, so the reported optimum carries no float drift.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum

import numba as nb
import numpy as np

from .consensus import QuboProblem, evaluate
from .errors import InvalidParameterError, ProblemTooLargeError
from .rng import derive_seed


@dataclass(frozen=True)
class SaParams:
    """Annealing schedule; ``None`` fields resolve from the problem:
    t_initial = penalty, t_final = 1e-3 * smallest nonzero weight,
    sweeps_per_temp = n."""

    t_initial: float | None = None
    t_final: float | None = None
    alpha: float = 0.97
    sweeps_per_temp: int | None = None
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise InvalidParameterError("alpha must be in (0, 1)")
        if self.restarts < 1:
            raise InvalidParameterError("restarts must be >= 1")
        if self.t_initial is not None and not self.t_initial > 0:
            raise InvalidParameterError("t_initial must be positive")
        if self.t_final is not None and not self.t_final > 0:
            raise InvalidParameterError("t_final must be positive")
        if (self.t_initial is not None and self.t_final is not None
                and not self.t_final < self.t_initial):
            raise InvalidParameterError("t_final must be below t_initial")
        if self.sweeps_per_temp is not None and self.sweeps_per_temp < 1:
            raise InvalidParameterError("sweeps_per_temp must be >= 1")


@dataclass
class SolveResult:
    best_x: np.ndarray  # (n,) uint8 bits
    best_f: float
    energy_trace: list[tuple[int, float]] | None
    elapsed: float


class Backend(Enum):
    SA = "sa"
    EXACT = "exact"


_U64 = np.uint64


@nb.njit(cache=True, nogil=True, inline="always")
def _mix(state):
    state = state + _U64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return state, z ^ (z >> _U64(31))


@nb.njit(cache=True, nogil=True, inline="always")
def _unit(z):
    return (z >> _U64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True, nogil=True)
def _full_energy(x, w, penalty, ei, ej):
    acc = 0.0
    for i in range(w.size):
        acc -= w[i] * x[i]
    for e in range(ei.size):
        acc += penalty * x[ei[e]] * x[ej[e]]
    return acc


@nb.njit(cache=True, nogil=True)
def _sa_kernel(w, penalty, indptr, indices, ei, ej, t0, t1, alpha, sweeps,
               seeds, validate, trace_every):
    n = w.size
    restarts = seeds.size
    best_x = np.zeros((restarts, n), dtype=np.uint8)
    best_f = np.empty(restarts, dtype=np.float64)
    max_dev = 0.0
    n_temps = 0
    t = t0
    while t >= t1:
        n_temps += 1
        t *= alpha
    trace_cap = n_temps if trace_every > 0 else 0
    trace_steps = np.zeros(trace_cap, dtype=np.int64)
    trace_f = np.zeros(trace_cap, dtype=np.float64)

    for r in range(restarts):
        state = seeds[r]
        x = np.zeros(n, dtype=np.uint8)
        for i in range(n):
            state, z = _mix(state)
            x[i] = np.uint8(z >> _U64(63))
        f = _full_energy(x, w, penalty, ei, ej)
        bf = f
        bx = x.copy()
        temp = t0
        step = 0
        block = 0
        while temp >= t1:
            for _ in range(sweeps):
                for _ in range(n):
                    state, z = _mix(state)
                    i = int(_unit(z) * n)
                    if i >= n:
                        i = n - 1
                    conf = 0.0
                    for p in range(indptr[i], indptr[i + 1]):
                        conf += x[indices[p]]
                    sgn = 1.0 - 2.0 * x[i]
                    delta = sgn * (penalty * conf - w[i])
                    accept = delta <= 0.0
                    if not accept:
                        state, z = _mix(state)
                        accept = _unit(z) < math.exp(-delta / temp)
                    if accept:
                        x[i] = 1 - x[i]
                        f += delta
                        if validate:
                            dev = abs(f - _full_energy(x, w, penalty, ei, ej))
                            if dev > max_dev:
                                max_dev = dev
                        if f < bf:
                            bf = f
                            bx[:] = x
                    step += 1
            if r == 0 and trace_every > 0:
                trace_steps[block] = step
                trace_f[block] = f
            block += 1
            temp *= alpha
        best_f[r] = _full_energy(bx, w, penalty, ei, ej)
        best_x[r] = bx
    return best_x, best_f, max_dev, trace_steps, trace_f


def _neighbour_csr(n: int, edges) -> tuple[np.ndarray, np.ndarray]:
    neigh: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        neigh[i].append(j)
        neigh[j].append(i)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(neigh[i])
    indices = np.zeros(indptr[-1], dtype=np.int64)
    for i in range(n):
        indices[indptr[i]:indptr[i + 1]] = sorted(neigh[i])
    return indptr, indices


def resolve_sa_params(q: QuboProblem, p: SaParams) -> tuple[float, float, int]:
    """Fill schedule defaults from the problem; returns (t0, t1, sweeps)."""
    t0 = q.penalty if p.t_initial is None else p.t_initial
    if p.t_final is None:
        nz = q.weights[q.weights > 0]
        t1 = 1e-3 * float(nz.min()) if nz.size else 1e-6
    else:
        t1 = p.t_final
    if not t1 < t0:
        raise InvalidParameterError("resolved schedule needs t_final < t_initial")
    sweeps = q.n if p.sweeps_per_temp is None else p.sweeps_per_temp
    return float(t0), float(t1), int(sweeps)


def solve_sa(q: QuboProblem, p: SaParams | None = None, *, trace: bool = False,
             validate_delta: bool = False) -> SolveResult:
    """Simulated annealing over the QUBO.

    ``validate_delta`` recomputes the full energy after every accepted move
    and raises if the incremental delta ever drifts past 1e-9 (debug aid).
    Restarts are merged by strictly-lower energy, so ties keep the lowest
    restart index.
    """
    if p is None:
        p = SaParams()
    if q.n < 1:
        raise InvalidParameterError("problem must have at least one variable")
    start = time.monotonic()
    t0, t1, sweeps = resolve_sa_params(q, p)
    seeds = np.array([derive_seed(p.seed, r) for r in range(p.restarts)],
                     dtype=np.uint64)
    indptr, indices = _neighbour_csr(q.n, q.edges)
    if q.edges:
        ei = np.array([e[0] for e in q.edges], dtype=np.int64)
        ej = np.array([e[1] for e in q.edges], dtype=np.int64)
    else:
        ei = np.empty(0, dtype=np.int64)
        ej = np.empty(0, dtype=np.int64)
    best_x, best_f, max_dev, tr_steps, tr_f = _sa_kernel(
        q.weights, q.penalty, indptr, indices, ei, ej,
        t0, t1, p.alpha, sweeps, seeds, validate_delta, 1 if trace else 0,
    )
    if validate_delta and max_dev > 1e-9:
        raise AssertionError(f"incremental energy drifted by {max_dev:.3e}")
    r = int(np.argmin(best_f))
    trace_out = (
        [(int(s), float(f)) for s, f in zip(tr_steps, tr_f)] if trace else None
    )
    return SolveResult(
        best_x=best_x[r].copy(),
        best_f=float(best_f[r]),
        energy_trace=trace_out,
        elapsed=time.monotonic() - start,
    )


_EXACT_LIMIT = 24


def solve_exact(q: QuboProblem) -> SolveResult:
    """Exhaustive enumeration of all 2^n assignments.

    Ties pick the lexicographically smallest bit tuple (x_0, ..., x_{n-1}),
    i.e. assignments are enumerated with x_0 as the most significant bit and
    the first minimum wins; on the unit-weight triangle that selects
    (0, 0, 1).
    """
    if q.n < 1:
        raise InvalidParameterError("problem must have at least one variable")
    if q.n > _EXACT_LIMIT:
        raise ProblemTooLargeError(f"n={q.n} exceeds the enumeration guard "
                                   f"({_EXACT_LIMIT})")
    start = time.monotonic()
    n = q.n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_val = math.inf
    best_code = 0
    chunk = 1 << 18  # keeps the bit matrix under ~50 MB at n = 24
    for lo in range(0, 1 << n, chunk):
        codes = np.arange(lo, min(lo + chunk, 1 << n), dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energy = -(bits @ q.weights)
        for i, j in q.edges:
            energy += q.penalty * bits[:, i] * bits[:, j]
        k = int(np.argmin(energy))
        if energy[k] < best_val:
            best_val = float(energy[k])
            best_code = int(codes[k])
    x = ((best_code >> shifts) & 1).astype(np.uint8)
    return SolveResult(
        best_x=x,
        best_f=evaluate(q, x),
        energy_trace=None,
        elapsed=time.monotonic() - start,
    )


def solve(q: QuboProblem, backend: Backend | str = Backend.SA,
          delay: float = 0.0, sa_params: SaParams | None = None) -> SolveResult:
    """Dispatch to a backend, then hold the result for ``delay`` seconds.

    The artificial delay models the wall-clock footprint of a slow quantum
    job (the two-minute regime); ``elapsed`` includes it.
    """
    backend = Backend(backend) if not isinstance(backend, Backend) else backend
    if delay < 0:
        raise InvalidParameterError("delay must be >= 0")
    start = time.monotonic()
    if backend is Backend.SA:
        result = solve_sa(q, sa_params)
    else:
        result = solve_exact(q)
    if delay > 0:
        time.sleep(delay)
    result.elapsed = time.monotonic() - start
    return result
