"""Parallel, scheduling-independent ensemble runs."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import List

from ..model import TimeSeries, simulate_path
from ..seeding import derive_seed
from .config import EnsembleConfig


class EnsembleError(RuntimeError):
    """A single path failed; `path_index` names it."""

    def __init__(self, path_index: int, cause: BaseException):
        super().__init__(f"path {path_index} failed: {type(cause).__name__}: {cause}")
        self.path_index = path_index
        self.cause = cause


def run_path(config: EnsembleConfig, index: int) -> TimeSeries:
    try:
        return simulate_path(
            config.initial, config.params, config.dt, config.horizon,
            derive_seed(config.master_seed, index), config.record_stride,
            scheme=config.scheme, renewal_level=config.excursion, gap_tol=config.gap_tol,
        )
    except (MemoryError, ValueError, RuntimeError, FloatingPointError) as exc:
        raise EnsembleError(index, exc) from exc


def run_ensemble(config: EnsembleConfig, workers: int = 1) -> List[TimeSeries]:
    """Simulate ``config.n_paths`` independent paths.

    Path ``i`` is seeded with ``derive_seed(config.master_seed, i)`` and the
    result list is ordered by path index, so the output does not depend on
    `workers`.  The compiled kernels release the GIL, so threads run paths
    concurrently.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    indices = range(config.n_paths)
    if workers == 1:
        return [run_path(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_path(config, i), indices))
