import math

import pytest

from subjack.bench import bench_sampling
from subjack.simulate import generate_bivariate_normal


@pytest.fixture(scope="module")
def bench_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("bench") / "b.sjds"
    generate_bivariate_normal(8, 200_000, [[1.0, 0.0], [0.0, 1.0]], path)
    return str(path)


def test_bench_grid_shape_and_ordering(bench_dataset):
    results = bench_sampling(200_000, [(100, 50)], seed=11, repeats=3,
                             data_path=bench_dataset)
    assert len(results) == 2
    by_mode = {r.mode: r for r in results}
    assert by_mode["without_replacement"].seconds >= by_mode["with_replacement"].seconds
    for r in results:
        assert r.seconds >= 0
        assert math.isfinite(r.mse) and r.mse > 0


def test_bench_mse_comparable_between_modes(bench_dataset):
    results = bench_sampling(200_000, [(100, 50)], seed=11, repeats=3,
                             data_path=bench_dataset)
    by_mode = {r.mode: r.mse for r in results}
    ratio = by_mode["with_replacement"] / by_mode["without_replacement"]
    assert 0.2 < ratio < 5.0


def test_bench_without_replacement_needs_room(bench_dataset):
    with pytest.raises(ValueError, match="n\\*K"):
        bench_sampling(200_000, [(100_000, 3)], seed=1, repeats=1,
                       data_path=bench_dataset)


def test_bench_generates_own_dataset_when_missing():
    results = bench_sampling(20_000, [(50, 5)], seed=2, repeats=1)
    assert len(results) == 2


def test_bench_rejects_bad_repeats(bench_dataset):
    with pytest.raises(ValueError, match="repeats"):
        bench_sampling(200_000, [(10, 2)], seed=1, repeats=0, data_path=bench_dataset)
