import numpy as np
import pytest

from subjack.store import write_matrix, open_dataset


@pytest.fixture
def small_dataset(tmp_path):
    """100 x 3 dataset with known contents; returns (handle, matrix)."""
    rng = np.random.default_rng(42)
    matrix = rng.normal(loc=2.0, scale=1.5, size=(100, 3))
    path = tmp_path / "small.sjds"
    write_matrix(matrix, path)
    return open_dataset(path), matrix
