"""Renewal times, regeneration cycles and the cycle-ratio estimator.

A renewal is a return of (V, S - X) to the state (-g, 0).  Starting from a
renewal, the detector waits until ``|V + g|`` reaches the excursion
amplitude, then closes the cycle at the next up-crossing of ``-g`` by V with
the gap at most ``gap_tol`` (V only increases through collisions, so an
up-crossing happens with the particles in contact; the tolerance absorbs
the discrete grid).  The trailing incomplete cycle is dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .. import _kernels
from ..model import GravParams, TimeSeries


@dataclass(frozen=True)
class RenewalCycle:
    start: float
    end: float
    sup_v: float
    inf_v: float
    sup_h: float
    # (v, h) samples on [start, end), each standing for sample_dt of time
    v_samples: Optional[np.ndarray] = None
    h_samples: Optional[np.ndarray] = None
    sample_dt: float = 0.0

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def time_integral_indicator_capable(self) -> bool:
        return self.v_samples is not None


@dataclass(frozen=True)
class Rect:
    """Closed rectangle ``[v_lo, v_hi] x [h_lo, h_hi]`` in the (v, h) plane."""

    v_lo: float = -math.inf
    v_hi: float = math.inf
    h_lo: float = 0.0
    h_hi: float = math.inf

    def contains(self, v, h):
        v = np.asarray(v)
        h = np.asarray(h)
        return (v >= self.v_lo) & (v <= self.v_hi) & (h >= self.h_lo) & (h <= self.h_hi)


def _validate(gap_tol: float, a0: float, params: GravParams, excursion: Optional[float]):
    if not gap_tol > 0:
        raise ValueError("gap_tol must be positive")
    if not a0 > params.g:
        raise ValueError("a0 must exceed g")
    level = a0 + 2.0 if excursion is None else excursion
    if not level > 0:
        raise ValueError("excursion must be positive")
    return level


def detect_renewals(series: TimeSeries, gap_tol: float, a0: float, params: GravParams,
                    excursion: Optional[float] = None) -> List[RenewalCycle]:
    """Cycles between consecutive renewals found on the recorded grid of `series`.

    The arming amplitude is ``a0 + 2`` unless `excursion` overrides it.
    Each cycle carries the recorded (v, h) samples it spans.
    """
    level = _validate(gap_tol, a0, params, excursion)
    t, v, h = series.t, series.v, series.h
    det = _kernels.new_detector()
    cyc = np.empty((t.shape[0] // 2 + 1, 7))
    n = _kernels.scan_renewals(t, v, h, params.g, level, gap_tol, det, cyc)
    step = series.dt * series.record_stride
    out = []
    for row in cyc[:n]:
        i0, i1 = int(row[5]), int(row[6])
        out.append(RenewalCycle(row[0], row[1], row[2], row[3], row[4],
                                v[i0:i1].copy(), h[i0:i1].copy(), step))
    return out


def cycles_from_table(table: Optional[np.ndarray]) -> List[RenewalCycle]:
    """Cycles from the step-resolution table built during simulation (no samples)."""
    if table is None:
        raise ValueError("series was simulated without renewal detection")
    return [RenewalCycle(*map(float, row[:5])) for row in table]


def pooled_cycles(ensemble: Sequence[TimeSeries]) -> List[RenewalCycle]:
    out: List[RenewalCycle] = []
    for series in ensemble:
        out.extend(cycles_from_table(series.renewals))
    return out


def cycle_stationary_estimate(cycles: Sequence[RenewalCycle], region: Rect) -> float:
    """Ratio estimator of the stationary mass of `region`.

    Time spent in the region, summed over cycles, divided by the total
    cycle length.  Requires cycles that carry samples.
    """
    if len(cycles) == 0:
        raise ValueError("need at least one complete cycle")
    inside = 0.0
    total = 0.0
    for c in cycles:
        if not c.time_integral_indicator_capable:
            raise ValueError("cycle carries no samples; use detect_renewals on a TimeSeries")
        inside += c.sample_dt * np.count_nonzero(region.contains(c.v_samples, c.h_samples))
        total += c.duration
    return inside / total
