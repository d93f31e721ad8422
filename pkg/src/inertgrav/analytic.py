"""Closed-form reference laws used as oracles by the Monte Carlo checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import special

from .model import GravParams

_SQRT2 = math.sqrt(2.0)
_TINY = 1e-300


def norm_cdf(x):
    """Standard normal CDF through erfc; values below 1e-300 are flushed to 0."""
    p = 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)
    p = np.where(p < _TINY, 0.0, p)
    return float(p) if np.ndim(p) == 0 else p


def norm_sf(x):
    return norm_cdf(-np.asarray(x, dtype=float))


@dataclass(frozen=True)
class StationaryLaw:
    """Product law of (velocity, gap): N(-g, 1/2) x Exp(2g)."""

    g: float

    def __post_init__(self):
        GravParams(self.g)

    @classmethod
    def of(cls, params: GravParams) -> "StationaryLaw":
        return cls(params.g)

    @property
    def v_mean(self) -> float:
        return -self.g

    @property
    def v_variance(self) -> float:
        return 0.5

    @property
    def gap_rate(self) -> float:
        return 2.0 * self.g

    @property
    def gap_mean(self) -> float:
        return 1.0 / self.gap_rate

    @property
    def normalization(self) -> float:
        return 2.0 * self.g / math.sqrt(math.pi)

    def pdf(self, v, h):
        return stationary_density(v, h, GravParams(self.g))

    def v_cdf(self, v):
        return stationary_v_cdf(v, GravParams(self.g))

    def gap_cdf(self, h):
        return stationary_gap_cdf(h, GravParams(self.g))

    def box_probability(self, v_lo, v_hi, h_lo, h_hi):
        """Mass of [v_lo, v_hi] x [h_lo, h_hi]; infinite bounds allowed."""
        pv = self.v_cdf(v_hi) - self.v_cdf(v_lo)
        h_lo = np.maximum(h_lo, 0.0)
        h_hi = np.maximum(h_hi, 0.0)
        ph = self.gap_cdf(h_hi) - self.gap_cdf(h_lo)
        return pv * ph


def _nonneg(h, name="h"):
    arr = np.asarray(h, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError(f"{name} must be non-negative")
    return arr


def stationary_density(v, h, params: GravParams):
    """Joint stationary density ``(2g/sqrt(pi)) exp(-2gh) exp(-(v+g)^2)``."""
    g = params.g
    h = _nonneg(h)
    v = np.asarray(v, dtype=float)
    out = (2.0 * g / math.sqrt(math.pi)) * np.exp(-2.0 * g * h - (v + g) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def stationary_v_cdf(v, params: GravParams):
    return norm_cdf((np.asarray(v, dtype=float) + params.g) * _SQRT2)


def stationary_gap_cdf(h, params: GravParams):
    h = _nonneg(h)
    out = -np.expm1(-2.0 * params.g * h)
    return float(out) if np.ndim(out) == 0 else out


def bm_sup_tail(x: float, t: float) -> float:
    """P(sup_{s<=t} B_s >= x) = 2 (1 - Phi(x / sqrt(t))) by reflection."""
    if not (x > 0 and t > 0):
        raise ValueError("x and t must be positive")
    return 2.0 * norm_sf(x / math.sqrt(t))


def bm_drift_hitting_density(a: float, m: float, t):
    """Density at `t` of the first time B_s + m s reaches level `a` (a != 0).

    Defective when ``m * a < 0``: it integrates to `bm_drift_hitting_prob`.
    """
    if a == 0:
        raise ValueError("level a must be non-zero")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    out = abs(a) / np.sqrt(2.0 * math.pi * t ** 3) * np.exp(-((a - m * t) ** 2) / (2.0 * t))
    return float(out) if np.ndim(out) == 0 else out


def bm_drift_hitting_prob(a: float, m: float) -> float:
    """P(B_s + m s ever reaches a) = exp(m a - |m a|)."""
    return math.exp(m * a - abs(m * a))


def bm_drift_hitting_cdf(a: float, m: float, t):
    """P(first passage to `a` happens by time `t`), closed form (inverse Gaussian)."""
    if a == 0:
        raise ValueError("level a must be non-zero")
    if a < 0:
        a, m = -a, -m
    t = np.asarray(t, dtype=float)
    st = np.sqrt(t)
    # exp(2ma) * Phi(.) may overflow for large ma; combine in log space
    with np.errstate(divide="ignore"):
        second = np.exp(2.0 * m * a + special.log_ndtr((-a - m * t) / st))
    out = special.ndtr((m * t - a) / st) + second
    return float(out) if np.ndim(out) == 0 else out


def skorokhod_linear(path: Sequence[Tuple[float, float]], slope: float) -> float:
    """``max(0, max_u (b_u - slope * u))`` over the recorded points of `path`."""
    arr = np.asarray(path, dtype=float)
    if arr.size == 0:
        raise ValueError("path must not be empty")
    arr = arr.reshape(-1, 2)
    times, values = arr[:, 0], arr[:, 1]
    if times[0] != 0.0 or values[0] != 0.0:
        raise ValueError("path must start at (0, 0)")
    if np.any(np.diff(times) <= 0):
        raise ValueError("path times must be strictly increasing")
    return float(max(0.0, np.max(values - slope * times)))
