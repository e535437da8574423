"""Longest-processing-time list scheduling.

Shared by the live clustering runner (packing three algorithms onto fewer
workers) and the simulator's malleable strategy (classical-phase makespan on
the currently held nodes).
"""

from __future__ import annotations

from .errors import InvalidParameterError


def lpt_schedule(durations: list[float], workers: int) -> list[tuple[int, float, float]]:
    """Assign tasks to ``workers`` identical machines, longest first.

    Returns one ``(worker, start, end)`` triple per task, in the order the
    tasks were given. Ties on duration keep the original task order; ties on
    load go to the lowest-index worker.
    """
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")
    if any(d < 0 for d in durations):
        raise InvalidParameterError("durations must be non-negative")
    order = sorted(range(len(durations)), key=lambda i: (-durations[i], i))
    loads = [0.0] * workers
    out: list[tuple[int, float, float]] = [(0, 0.0, 0.0)] * len(durations)
    for i in order:
        w = min(range(workers), key=lambda j: (loads[j], j))
        out[i] = (w, loads[w], loads[w] + durations[i])
        loads[w] += durations[i]
    return out


def lpt_makespan(durations: list[float], workers: int) -> float:
    """Makespan of the LPT schedule of ``durations`` on ``workers`` machines."""
    if not durations:
        return 0.0
    return max(end for _, _, end in lpt_schedule(durations, workers))
