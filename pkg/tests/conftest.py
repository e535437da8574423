import numpy as np
import pytest

from hqsched.dataset import Dataset, DatasetMeta


def make_dataset(points) -> Dataset:
    pts = np.asarray(points, dtype=np.float64)
    meta = DatasetMeta(n_points=len(pts), n_centers=0, cluster_std=0.0,
                       box=None, source="external")
    return Dataset(points=pts, seed=0, meta=meta)


@pytest.fixture
def line4() -> Dataset:
    """1-D points {0, 1, 10, 11} embedded at y = 0."""
    return make_dataset([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0]])


@pytest.fixture
def far_pairs() -> Dataset:
    """Two tight pairs separated by 100."""
    return make_dataset([[0.0, 0.0], [0.1, 0.0], [100.0, 0.0], [100.1, 0.0]])
