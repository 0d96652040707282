import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from imgql.grid import BoolField, GridGeometry, NumField  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def bools(arr, spacing=None, adjacency="orthodiagonal"):
    arr = np.asarray(arr, dtype=bool)
    return BoolField(GridGeometry(arr.shape, spacing, adjacency), arr)


def nums(arr, spacing=None, adjacency="orthodiagonal"):
    arr = np.asarray(arr, dtype=float)
    return NumField(GridGeometry(arr.shape, spacing, adjacency), arr)
