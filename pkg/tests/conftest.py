import numpy as np
import pytest

from fdc import rng
from fdc.dataset import PointSet


def seeded_points(dim, n, coord_bound, seed, tag=77):
    """Random integer points, no zero rows, deterministic in seed."""
    flat = np.arange(n * dim, dtype=np.uint64)
    X = (rng.integers(seed, tag, flat, 2 * coord_bound + 1) - coord_bound)
    X = X.reshape(n, dim).astype(np.int64)
    zero = ~X.any(axis=1)
    X[zero, 0] = 1
    return X


def seeded_point_set(dim, n, coord_bound, seed):
    return PointSet(dim, seeded_points(dim, n, coord_bound, seed))


@pytest.fixture
def rng_np():
    return np.random.RandomState(0)
