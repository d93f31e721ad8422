from __future__ import annotations

from typing import Callable, Tuple

import numpy as np


class EmpiricalDistribution:
    """Sorted sample with a right-continuous step CDF."""

    def __init__(self, samples):
        arr = np.asarray(samples, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("empirical distribution needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        self.sorted_samples = np.sort(arr, kind="stable")

    @property
    def n(self) -> int:
        return self.sorted_samples.shape[0]

    def cdf(self, x):
        out = np.searchsorted(self.sorted_samples, x, side="right") / self.n
        return float(out) if np.ndim(out) == 0 else out

    def mean(self) -> float:
        return float(np.mean(self.sorted_samples))

    def __repr__(self):
        return f"EmpiricalDistribution(n={self.n})"


def ks_distance(emp: EmpiricalDistribution, cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance between `emp` and a continuous reference CDF.

    ``max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)`` over the sorted sample.
    Raises ValueError if `cdf` is decreasing or leaves [0, 1] on the sample.
    """
    x = emp.sorted_samples
    f = np.asarray(cdf(x), dtype=float)
    if f.shape != x.shape:
        f = np.array([float(cdf(xi)) for xi in x])
    if np.any(np.isnan(f)) or np.any(f < 0) or np.any(f > 1):
        raise ValueError("reference CDF must take values in [0, 1]")
    if np.any(np.diff(f) < 0):
        raise ValueError("reference CDF is not monotone on the sample points")
    n = emp.n
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ols_slope(x, y) -> Tuple[float, float]:
    """Least-squares (slope, intercept) of y on x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def batch_se(batch_values) -> float:
    """Standard error of the mean of independent batch statistics."""
    b = np.asarray(batch_values, dtype=float)
    if b.size < 2:
        return float("nan")
    return float(np.std(b, ddof=1) / np.sqrt(b.size))
