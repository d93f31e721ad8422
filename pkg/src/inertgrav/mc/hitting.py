"""First passage of Brownian motion with drift, checked against its closed form."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, stats

from .. import _kernels
from ..analytic import bm_drift_hitting_cdf, bm_drift_hitting_density, bm_drift_hitting_prob
from ..seeding import bridge_key, derive_seed

_CHUNK = 8192
# paths drifting away are abandoned once the chance of ever coming back is < e^-34
_GIVE_UP_EXPONENT = 34.0


def _one_path(a, m, dt, n_steps, seed, bridge):
    level = abs(a)
    drift = math.copysign(1.0, a) * m
    give_up = level - _GIVE_UP_EXPONENT / (2.0 * -drift) if drift < 0 else -math.inf
    rng = np.random.default_rng(seed)
    key = np.uint64(bridge_key(seed))
    y = 0.0
    k0 = 0
    z = np.empty(_CHUNK)
    while k0 < n_steps:
        n = min(_CHUNK, n_steps - k0)
        rng.standard_normal(out=z[:n])
        status, k, y = _kernels.hit_scan(z[:n], y, k0, dt, level, drift, bridge, key, give_up)
        if status == 1:
            return (k + 0.5) * dt
        if status == -1:
            return math.nan
        k0 += n
    return math.nan


def hitting_times(a: float, m: float, dt: float, horizon: float, n: int, seed: int,
                  bridge: bool = True, workers: int = 1) -> np.ndarray:
    """First-passage times of ``B_t + m t`` to `a` on the grid ``k * dt``.

    Entry ``i`` is NaN when path ``i`` (seeded ``derive_seed(seed, i)``) does
    not reach `a` by `horizon`.  A crossing inside step k is reported at the
    step midpoint.  With `bridge`, crossings between grid points are sampled
    from the Brownian bridge; without it only grid values are monitored,
    which can only miss crossings.
    """
    if a == 0:
        raise ValueError("level must be non-zero")
    if not (dt > 0 and horizon >= dt and n >= 1):
        raise ValueError("need dt > 0, horizon >= dt and n >= 1")
    n_steps = int(math.floor(horizon / dt + 1e-9))
    job = lambda i: _one_path(a, m, dt, n_steps, derive_seed(seed, i), bridge)
    if workers == 1:
        return np.array([job(i) for i in range(n)])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(job, range(n))))


@dataclass
class HittingReport:
    a: float
    m: float
    n: int
    horizon: float
    hit_fraction: float
    hit_fraction_se: float
    oracle_prob: float  # quadrature of the density over (0, horizon]
    oracle_prob_inf: float  # exp(m a - |m a|)
    truncation_bias: float
    bin_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)  # hits per bin, then misses
    expected: np.ndarray = field(repr=False)
    density_hist: np.ndarray = field(repr=False)
    density_oracle: np.ndarray = field(repr=False)
    chi2: float = 0.0
    dof: int = 0
    p_value: float = 1.0
    note: str = ""


def _density_mass(a, m, lo, hi):
    f = lambda t: bm_drift_hitting_density(a, m, t)
    val, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=400)
    return val


def oracle_hit_probability(a: float, m: float, horizon: float) -> float:
    """P(first passage by `horizon`) by adaptive quadrature of the density."""
    scale = max(a * a, 1e-3)
    cuts = [c for c in (0.05 * scale, scale, 10 * scale, 100 * scale) if c < horizon]
    pts = [0.0, *cuts, horizon]
    return float(sum(_density_mass(a, m, lo, hi) for lo, hi in zip(pts[:-1], pts[1:])))


def equal_mass_edges(a: float, m: float, horizon: float, n_bins: int) -> np.ndarray:
    """Bin edges on (0, horizon] splitting the first-passage law into equal masses."""
    total = bm_drift_hitting_cdf(a, m, horizon)
    edges = [0.0]
    for q in np.arange(1, n_bins) / n_bins:
        target = q * total
        edges.append(optimize.brentq(lambda t: bm_drift_hitting_cdf(a, m, t) - target,
                                     1e-12, horizon, xtol=1e-12))
    edges.append(horizon)
    return np.array(edges)


def hitting_time_oracle_test(a: float, m: float, dt: float, horizon: float, n: int, seed: int,
                             n_bins: int = 30, bridge: bool = True,
                             workers: int = 1) -> HittingReport:
    """Simulated first passages against the density and total hitting probability.

    Hit times are binned on equal-mass bins of the exact law; the bins plus a
    "no hit by horizon" cell give a multinomial chi-square with `n_bins`
    degrees of freedom.
    """
    times = hitting_times(a, m, dt, horizon, n, seed, bridge=bridge, workers=workers)
    hit = times[~np.isnan(times)]
    frac = hit.size / n
    p_h = oracle_hit_probability(a, m, horizon)
    p_inf = bm_drift_hitting_prob(a, m)
    note = ""
    if m * a >= 0:
        note = ("drift points toward the level: every path hits eventually, so the "
                "horizon truncation is not negligible")
    edges = equal_mass_edges(a, m, horizon, n_bins)
    counts = np.histogram(hit, bins=edges)[0]
    masses = np.array([_density_mass(a, m, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
    counts = np.append(counts, n - hit.size)
    expected = n * np.append(masses, max(1.0 - masses.sum(), 0.0))
    cells = expected > 0
    chi2 = float(np.sum((counts[cells] - expected[cells]) ** 2 / expected[cells]))
    dof = int(np.count_nonzero(cells) - 1)
    widths = np.diff(edges)
    return HittingReport(
        a=a, m=m, n=n, horizon=horizon,
        hit_fraction=frac,
        hit_fraction_se=math.sqrt(max(frac * (1 - frac), 1e-300) / n),
        oracle_prob=p_h,
        oracle_prob_inf=p_inf,
        truncation_bias=p_inf - p_h,
        bin_edges=edges,
        counts=counts,
        expected=expected,
        density_hist=counts[:-1] / (n * widths),
        density_oracle=masses / widths,
        chi2=chi2,
        dof=dof,
        p_value=float(stats.chi2.sf(chi2, dof)),
        note=note,
    )
