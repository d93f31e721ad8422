"""Estimators confronting simulated paths with the analytic laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..analytic import StationaryLaw
from ..model import GravParams, TimeSeries
from .config import EnsembleConfig
from .ensemble import run_ensemble
from .renewal import RenewalCycle
from .stats import EmpiricalDistribution, batch_se, ks_distance, ols_slope

MIN_EVENTS = 20


@dataclass
class StationaryReport:
    g: float
    n_samples: int
    ks_v: float
    ks_h: float
    mean_v: float
    var_v: float
    mean_h: float
    # standard errors from per-path batch statistics
    se_mean_v: float
    se_var_v: float
    se_mean_h: float


def stationary_samples(ensemble: Sequence[TimeSeries], burn_in: float):
    """Pool (v, h) records with ``t >= burn_in`` across paths, in path order."""
    vs, hs = [], []
    for series in ensemble:
        keep = series.t >= burn_in
        vs.append(series.v[keep])
        hs.append(series.h[keep])
    return vs, hs


def stationary_marginal_test(config: EnsembleConfig, workers: int = 1,
                             ensemble: Optional[Sequence[TimeSeries]] = None) -> StationaryReport:
    """KS distances and moments of the pooled post-burn-in (V, H) samples."""
    if config.horizon - config.burn_in < 10 * config.sample_stride:
        raise ValueError("horizon - burn_in must cover at least 10 sample strides")
    if ensemble is None:
        ensemble = run_ensemble(config, workers)
    vs, hs = stationary_samples(ensemble, config.burn_in)
    v = np.concatenate(vs)
    h = np.concatenate(hs)
    if v.size < 10:
        raise ValueError("too few stationary samples")
    law = StationaryLaw.of(config.params)
    return StationaryReport(
        g=config.params.g,
        n_samples=int(v.size),
        ks_v=ks_distance(EmpiricalDistribution(v), law.v_cdf),
        ks_h=ks_distance(EmpiricalDistribution(h), law.gap_cdf),
        mean_v=float(np.mean(v)),
        var_v=float(np.var(v)),
        mean_h=float(np.mean(h)),
        se_mean_v=batch_se([np.mean(x) for x in vs]),
        se_var_v=batch_se([np.var(x) for x in vs]),
        se_mean_h=batch_se([np.mean(x) for x in hs]),
    )


@dataclass
class Histogram2D:
    v_edges: np.ndarray
    h_edges: np.ndarray
    empirical: np.ndarray  # density, shape (nv, nh)
    analytic: np.ndarray  # bin-averaged stationary density


def stationary_histogram(ensemble: Sequence[TimeSeries], params: GravParams, burn_in: float,
                         bins: int = 50) -> Histogram2D:
    """Binned (v, h) density on [-g-4, -g+4] x [0, 4/g] next to the exact bin averages."""
    g = params.g
    v_edges = np.linspace(-g - 4.0, -g + 4.0, bins + 1)
    h_edges = np.linspace(0.0, 4.0 / g, bins + 1)
    vs, hs = stationary_samples(ensemble, burn_in)
    v = np.concatenate(vs)
    h = np.concatenate(hs)
    counts, _, _ = np.histogram2d(v, h, bins=(v_edges, h_edges))
    area = np.outer(np.diff(v_edges), np.diff(h_edges))
    law = StationaryLaw.of(params)
    pv = np.diff(law.v_cdf(v_edges))
    ph = np.diff(law.gap_cdf(h_edges))
    return Histogram2D(v_edges, h_edges, counts / (max(v.size, 1) * area), np.outer(pv, ph) / area)


@dataclass
class StrongLawReport:
    horizon: float
    x_over_t: float
    s_over_t: float
    t: np.ndarray = field(repr=False)
    residual_x: np.ndarray = field(repr=False)
    residual_s: np.ndarray = field(repr=False)
    # max deviation from the exact pathwise identities
    identity_error_x: float = 0.0
    identity_error_s: float = 0.0


def strong_law_estimate(series: TimeSeries) -> StrongLawReport:
    """Terminal ratios X_T/T, S_T/T and residuals against B_t - g t."""
    T = float(series.t[-1])
    if T < 1.0:
        raise ValueError("series must span at least unit time")
    g = series.g
    t = series.t - series.t[0]
    drift_free = (series.b - series.b[0]) - g * t
    res_x = series.x - drift_free
    res_s = series.s - drift_free
    base = series.x[0] + series.v[0]
    expect_x = base - series.v
    expect_s = expect_x + series.h
    return StrongLawReport(
        horizon=T,
        x_over_t=float(series.x[-1] / T),
        s_over_t=float(series.s[-1] / T),
        t=series.t,
        residual_x=res_x,
        residual_s=res_s,
        identity_error_x=float(np.max(np.abs(res_x - expect_x))),
        identity_error_s=float(np.max(np.abs(res_s - expect_s))),
    )


@dataclass
class TailReport:
    n_cycles: int
    v_levels: np.ndarray
    p_up: np.ndarray  # P(sup_v >= -g + a)
    n_up: np.ndarray
    p_down: np.ndarray  # P(inf_v <= -g - a)
    n_down: np.ndarray
    h_levels: np.ndarray
    p_gap: np.ndarray  # P(sup_h >= r)
    n_gap: np.ndarray
    slope_up: float  # vs a^2, rate -1
    slope_down: float
    slope_gap: float  # vs r, rate -2g
    intercept_up: float
    intercept_down: float
    intercept_gap: float


def _fit(levels, counts, n, transform):
    keep = counts >= MIN_EVENTS
    if np.count_nonzero(keep) < 2:
        return float("nan"), float("nan")
    return ols_slope(transform(levels[keep]), np.log(counts[keep] / n))


def cycle_extreme_tails(cycles: Sequence[RenewalCycle], v_levels, h_levels,
                        params: GravParams, min_cycles: int = 1000) -> TailReport:
    """Per-cycle exceedance frequencies of the velocity and gap extremes.

    Log-frequencies are regressed on ``a**2`` for the velocity tails and on
    ``r`` for the gap tail; levels with fewer than 20 exceedances are left
    out of the fits.
    """
    n = len(cycles)
    if n < min_cycles:
        raise ValueError(f"need at least {min_cycles} cycles, got {n}")
    g = params.g
    sup_v = np.array([c.sup_v for c in cycles])
    inf_v = np.array([c.inf_v for c in cycles])
    sup_h = np.array([c.sup_h for c in cycles])
    a = np.asarray(v_levels, dtype=float)
    r = np.asarray(h_levels, dtype=float)
    n_up = np.array([np.count_nonzero(sup_v >= -g + x) for x in a])
    n_down = np.array([np.count_nonzero(inf_v <= -g - x) for x in a])
    n_gap = np.array([np.count_nonzero(sup_h >= x) for x in r])
    sq = lambda x: x * x
    su, iu = _fit(a, n_up, n, sq)
    sd, id_ = _fit(a, n_down, n, sq)
    sg, ig = _fit(r, n_gap, n, lambda x: x)
    return TailReport(
        n_cycles=n, v_levels=a, p_up=n_up / n, n_up=n_up, p_down=n_down / n, n_down=n_down,
        h_levels=r, p_gap=n_gap / n, n_gap=n_gap, slope_up=su, slope_down=sd, slope_gap=sg,
        intercept_up=iu, intercept_down=id_, intercept_gap=ig)


@dataclass
class FluctuationReport:
    checkpoints: np.ndarray
    median_vmax: np.ndarray
    median_hmax: np.ndarray
    median_vmin: np.ndarray  # descriptive only
    slope_v: float  # median running max V vs sqrt(log t)
    slope_h: float  # median running max H vs log t
    intercept_v: float
    intercept_h: float


def running_extremes_at(series: TimeSeries, checkpoints) -> np.ndarray:
    """(vmax, hmax, vmin) at the last recorded time not after each checkpoint."""
    idx = np.searchsorted(series.t, np.asarray(checkpoints) + 1e-9 * series.dt, side="right") - 1
    if np.any(idx < 0):
        raise ValueError("checkpoint before the start of the series")
    return np.stack([series.vmax[idx], series.hmax[idx], series.vmin[idx]])


def fluctuation_scaling(config: EnsembleConfig, checkpoints: Sequence[float], workers: int = 1,
                        ensemble: Optional[Sequence[TimeSeries]] = None) -> FluctuationReport:
    """Growth of the running maxima of V and H across checkpoints.

    Per path, running maxima are read at each checkpoint; the ensemble
    medians are regressed on ``sqrt(log t)`` (velocity) and ``log t`` (gap).
    """
    cps = np.asarray(checkpoints, dtype=float)
    if cps.size < 2:
        raise ValueError("need at least two checkpoints")
    if np.any(np.diff(cps) <= 0):
        raise ValueError("checkpoints must be increasing")
    if cps[0] < 1.0 or cps[-1] > config.horizon * (1 + 1e-12):
        raise ValueError("checkpoints must lie in [1, horizon]")
    if ensemble is None:
        ensemble = run_ensemble(config, workers)
    ext = np.stack([running_extremes_at(s, cps) for s in ensemble])  # (paths, 3, k)
    med = np.median(ext, axis=0)
    lt = np.log(cps)
    sv, iv = ols_slope(np.sqrt(lt), med[0])
    sh, ih = ols_slope(lt, med[1])
    return FluctuationReport(cps, med[0], med[1], med[2], sv, sh, iv, ih)
