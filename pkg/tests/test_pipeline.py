import math

import numpy as np
import pytest

from subjack.estimator import DomainEvalError
from subjack.pipeline import run_estimate
from subjack.simulate import generate_bivariate_normal
from subjack.store import open_dataset, write_matrix

PAPER_SIGMA = [[25.0, 10.0], [10.0, 5.0]]


@pytest.fixture(scope="module")
def sigma_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sigma.sjds"
    generate_bivariate_normal(3, 100_000, PAPER_SIGMA, path)
    return path


def test_worker_count_never_changes_the_report(sigma_dataset):
    serial = run_estimate(sigma_dataset, "corr:0,1", 50, 40, 123, workers=1)
    threaded = run_estimate(sigma_dataset, "corr:0,1", 50, 40, 123, workers=4)
    assert serial == threaded
    assert serial.to_json() == threaded.to_json()


def test_correlation_estimate_close_to_population_value(sigma_dataset):
    report = run_estimate(sigma_dataset, "corr:0,1", 500, 200, 2718, workers=2)
    theta = 2 / math.sqrt(5)
    assert abs(report.theta_jds - theta) <= 4 * report.se
    assert report.ci_low <= report.theta_jds <= report.ci_high
    assert report.rng_id
    assert report.statistic_name == "corr:0,1"


def test_mean_statistic_collapses_sos_and_jds(sigma_dataset):
    report = run_estimate(sigma_dataset, "mean:0", 100, 50, 9, workers=1)
    assert report.theta_jds == pytest.approx(report.theta_sos, rel=1e-12)


def test_repeat_runs_identical(sigma_dataset):
    a = run_estimate(sigma_dataset, "sd:1", 64, 32, 5150, workers=2)
    b = run_estimate(sigma_dataset, "sd:1", 64, 32, 5150, workers=2)
    assert a == b


def test_column_out_of_range(sigma_dataset):
    with pytest.raises(ValueError, match="column 7"):
        run_estimate(sigma_dataset, "mean:7", 10, 5, 1)


def test_subsample_size_must_allow_jackknife(sigma_dataset):
    with pytest.raises(ValueError, match="n >= 2"):
        run_estimate(sigma_dataset, "mean:0", 1, 5, 1)


def test_domain_failure_names_subsample(tmp_path):
    path = tmp_path / "flat.sjds"
    write_matrix(np.full((500, 1), 3.0), path)
    with pytest.raises(DomainEvalError, match="subsample k="):
        run_estimate(path, "sd:0", 20, 4, 11)


def test_accepts_open_handle_and_statistic_object(sigma_dataset):
    from subjack.stats import stat_variance

    handle = open_dataset(sigma_dataset)
    by_path = run_estimate(sigma_dataset, "var:0", 30, 10, 77)
    by_handle = run_estimate(handle, stat_variance(0), 30, 10, 77)
    assert by_path == by_handle
