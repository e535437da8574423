"""Worker leases and the shared worker provider.

A :class:`ResourceLease` tracks how many workers a pipeline currently holds
and which phase it is in; the lease contract is that exactly one worker is
held throughout a quantum phase. The :class:`ResourceProvider` is the pool
the leases grow from and shrink back into; it is thread-safe so that two
concurrently running pipelines can contend for the same workers.
"""

from __future__ import annotations

import threading
from enum import Enum

from .errors import ContractViolationError, InvalidParameterError


class Phase(Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"


class ResourceLease:
    def __init__(self, held_workers: int, max_workers: int, phase: Phase = Phase.CLASSICAL):
        if not (1 <= held_workers <= max_workers):
            raise InvalidParameterError("need 1 <= held_workers <= max_workers")
        if phase is Phase.QUANTUM and held_workers != 1:
            raise ContractViolationError("quantum phase requires exactly one worker")
        self.held_workers = held_workers
        self.max_workers = max_workers
        self.phase = phase

    def grow(self, extra: int) -> None:
        if self.phase is Phase.QUANTUM:
            raise ContractViolationError("cannot grow a lease during the quantum phase")
        if extra < 0 or self.held_workers + extra > self.max_workers:
            raise InvalidParameterError("grow beyond max_workers")
        self.held_workers += extra

    def shrink_to(self, n: int) -> int:
        """Shrink to ``n`` workers, returning how many were released."""
        if not (1 <= n <= self.held_workers):
            raise InvalidParameterError("shrink target out of range")
        released = self.held_workers - n
        self.held_workers = n
        return released

    def enter_quantum(self) -> None:
        if self.held_workers != 1:
            raise ContractViolationError("must hold exactly one worker to enter quantum phase")
        self.phase = Phase.QUANTUM

    def leave_quantum(self) -> None:
        self.phase = Phase.CLASSICAL


class ResourceProvider:
    """Counting pool of identical workers with thread-safe grant/release."""

    def __init__(self, total_workers: int):
        if total_workers < 1:
            raise InvalidParameterError("total_workers must be >= 1")
        self.total_workers = total_workers
        self._free = total_workers
        self._lock = threading.Lock()

    @property
    def free_workers(self) -> int:
        with self._lock:
            return self._free

    def acquire(self, want: int) -> int:
        """Grant up to ``want`` workers immediately; returns the grant (may be 0)."""
        if want < 0:
            raise InvalidParameterError("want must be >= 0")
        with self._lock:
            granted = min(want, self._free)
            self._free -= granted
            return granted

    def release(self, n: int) -> None:
        if n < 0:
            raise InvalidParameterError("n must be >= 0")
        with self._lock:
            if self._free + n > self.total_workers:
                raise InvalidParameterError("releasing more workers than exist")
            self._free += n
