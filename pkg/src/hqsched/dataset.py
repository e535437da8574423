"""Synthetic 2-D blob datasets and CSV interchange.

A dataset is an ordered array of 2-D points plus the generation recipe that
produced it. Generation is fully deterministic given the parameters and the
seed (see :mod:`hqsched.rng` for the portable generator), which is what makes
golden tests and checkpoint-resume equivalence possible downstream.

Draw order within :func:`generate_blobs`, fixed for reproducibility:
first ``2 * n_centers`` uniforms for the center coordinates, then per point
one uniform for the center choice followed by one Box-Muller pair for the
isotropic noise.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ParseError
from .rng import Pcg32

CSV_HEADER = "x,y"


@dataclass(frozen=True)
class DatasetMeta:
    """Generation parameters; ``source`` is "generated" or "external"."""

    n_points: int
    n_centers: int
    cluster_std: float
    box: tuple[float, float, float, float] | None
    source: str = "generated"


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray  # (n, 2) float64, frozen after construction
    seed: int
    meta: DatasetMeta

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidParameterError("points must have shape (n, 2)")
        if pts.shape[0] == 0:
            raise InvalidParameterError("dataset must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


def generate_blobs(
    n_points: int,
    n_centers: int,
    cluster_std: float,
    box: tuple[float, float, float, float],
    seed: int,
) -> Dataset:
    """Generate ``n_points`` points around ``n_centers`` Gaussian blobs.

    Centers are drawn uniformly inside ``box = (x_min, y_min, x_max, y_max)``;
    each point picks a center uniformly and adds isotropic Gaussian noise of
    standard deviation ``cluster_std``. A degenerate box with ``min == max``
    on an axis collapses that coordinate to the single allowed value.
    """
    if n_points < 1:
        raise InvalidParameterError("n_points must be >= 1")
    if n_centers < 1:
        raise InvalidParameterError("n_centers must be >= 1")
    if not (cluster_std > 0.0) or not math.isfinite(cluster_std):
        raise InvalidParameterError("cluster_std must be positive and finite")
    x_min, y_min, x_max, y_max = (float(v) for v in box)
    if x_min > x_max or y_min > y_max:
        raise InvalidParameterError("box must satisfy min <= max per axis")

    rng = Pcg32(seed)
    centers = np.empty((n_centers, 2), dtype=np.float64)
    for c in range(n_centers):
        centers[c, 0] = x_min + rng.uniform() * (x_max - x_min)
        centers[c, 1] = y_min + rng.uniform() * (y_max - y_min)

    pts = np.empty((n_points, 2), dtype=np.float64)
    for i in range(n_points):
        c = rng.below(n_centers)
        gx, gy = rng.normal_pair()
        pts[i, 0] = centers[c, 0] + cluster_std * gx
        pts[i, 1] = centers[c, 1] + cluster_std * gy

    meta = DatasetMeta(
        n_points=n_points,
        n_centers=n_centers,
        cluster_std=cluster_std,
        box=(x_min, y_min, x_max, y_max),
    )
    return Dataset(points=pts, seed=seed, meta=meta)


def save_csv(ds: Dataset, path: str | os.PathLike) -> None:
    """Write ``x,y`` lines (with header) using shortest round-tripping reprs."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for x, y in ds.points:
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def load_csv(path: str | os.PathLike) -> Dataset:
    """Load a dataset from a ``x,y`` CSV file.

    A single non-numeric first line is accepted as a header. The returned
    dataset records seed 0 and an "external" source.
    """
    rows: list[tuple[float, float]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected 'x,y', got {line!r}", line=lineno)
            try:
                x, y = float(parts[0]), float(parts[1])
            except ValueError:
                if lineno == 1:
                    continue  # header line
                raise ParseError(f"could not parse {line!r}", line=lineno) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError(f"non-finite coordinate in {line!r}", line=lineno)
            rows.append((x, y))
    if not rows:
        raise ParseError(f"no data points in {os.fspath(path)!r}")
    pts = np.array(rows, dtype=np.float64)
    meta = DatasetMeta(
        n_points=len(rows), n_centers=0, cluster_std=0.0, box=None, source="external"
    )
    return Dataset(points=pts, seed=0, meta=meta)
