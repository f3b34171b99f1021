"""End-to-end estimation over an on-disk dataset.

Work items are subsample ordinals: each k derives its own seed, draws its
indices, reads the rows, and jackknifes them. Workers only change who computes
which k, never the numbers — the reduction is ordered by k.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .estimator import EstimateReport, SubsampleResult, aggregate, jackknife_subsample
from .sampling import RNG_ID, SamplingPlan
from .stats import Statistic, parse_statistic
from .store import DatasetHandle, open_dataset


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return min(os.cpu_count() or 1, 8)
    return workers


def _subsample_result(
    handle: DatasetHandle, stat: Statistic, plan: SamplingPlan, k: int
) -> SubsampleResult:
    indices = plan.indices_for(k)
    batch = handle.read_records(indices)
    return jackknife_subsample(stat, stat.phi(batch.rows), k=k)


def run_estimate(
    data: DatasetHandle | str | Path,
    statistic: Statistic | str,
    n: int,
    K: int,
    master_seed: int,
    *,
    alpha: float = 0.05,
    workers: int | None = 1,
    ci_center: str = "jds",
) -> EstimateReport:
    """Estimate a statistic from K subsamples of size n drawn with replacement."""
    handle = data if isinstance(data, DatasetHandle) else open_dataset(data)
    stat = parse_statistic(statistic) if isinstance(statistic, str) else statistic
    stat.validate_columns(handle.col_count)
    if n < 2:
        raise ValueError("jackknife estimation needs subsample size n >= 2")
    plan = SamplingPlan(n_rows=handle.row_count, n=n, K=K, master_seed=master_seed)

    n_workers = resolve_workers(workers)
    ordinals = range(1, K + 1)
    if n_workers <= 1 or K == 1:
        results = [_subsample_result(handle, stat, plan, k) for k in ordinals]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(
                pool.map(
                    lambda k: _subsample_result(handle, stat, plan, k),
                    ordinals,
                    chunksize=max(1, K // (4 * n_workers)),
                )
            )
    return aggregate(
        results,
        handle.row_count,
        alpha=alpha,
        master_seed=master_seed,
        statistic_name=stat.name,
        rng_id=RNG_ID,
        ci_center=ci_center,
    )
