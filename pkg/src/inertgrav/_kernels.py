"""Compiled inner loops.

Layout conventions shared with the Python side:

``fstate``  float64[6]: gap h, local time l, noise b, running max v,
            running min v, running max h.
``rec``     float64[n, 9]: rows of (t, x, s, v, l, b, vmax, vmin, hmax).
``det``     float64[9]: renewal detector state, see ``new_detector``.
``cyc``     float64[cap, 7]: (start, end, sup_v, inf_v, sup_h, i_start, i_end).

Positions are never accumulated directly.  With ``x0``, ``v0`` the initial
values, the loop carries (h, l, b) and derives

    v = v0 + l - g * k * dt,   x = x0 + b - l,   s = x + h,

so the velocity/local-time identity and the strong-law residual identity
hold up to one rounding per evaluation, with no drift over long runs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .seeding import GOLDEN as _GOLDEN_INT

REC_COLS = 9
T, X, S, V, L, B, VMAX, VMIN, HMAX = range(REC_COLS)

_GOLDEN = np.uint64(_GOLDEN_INT)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# beyond 2*h*e/var > 40 the bridge crossing probability is < 5e-18
_BRIDGE_CUTOFF = 20.0


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def counter_uniform(key, k):
    z = _mix64(key + np.uint64(k + 1) * _GOLDEN)
    return (np.float64(z >> _S11) + 0.5) * _INV53


@njit(inline="always")
def bridge_min(y, var, u):
    """Minimum of a Brownian bridge from 0 to y with variance `var`, at quantile u."""
    return 0.5 * (y - np.sqrt(y * y - 2.0 * var * np.log(u)))


def new_detector():
    # phase, prev_v, has_prev, start_t, sup_v, inf_v, sup_h, start_idx, overflow
    return np.zeros(9)


@njit(inline="always")
def renewal_point(det, t, v, h, idx, g, level, gap_tol, cyc, ncyc):
    """Feed one (t, v, h) point to the renewal detector; returns the cycle count.

    phase 0: looking for the first renewal point.
    phase 1: inside a cycle, waiting for |v + g| >= level.
    phase 2: armed, waiting for an up-crossing of -g with gap <= gap_tol.
    """
    target = -g
    if det[2] == 0.0:
        crossing = v == target and h <= gap_tol
    else:
        crossing = det[1] < target and v >= target and h <= gap_tol
    det[1] = v
    det[2] = 1.0
    phase = det[0]
    if phase == 2.0 and crossing:
        if ncyc < cyc.shape[0]:
            cyc[ncyc, 0] = det[3]
            cyc[ncyc, 1] = t
            cyc[ncyc, 2] = det[4]
            cyc[ncyc, 3] = det[5]
            cyc[ncyc, 4] = det[6]
            cyc[ncyc, 5] = det[7]
            cyc[ncyc, 6] = idx
            ncyc += 1
        else:
            det[8] = 1.0
        phase = 0.0
    if phase == 0.0:
        if crossing:
            det[0] = 1.0
            det[3] = t
            det[4] = v
            det[5] = v
            det[6] = h
            det[7] = idx
        else:
            det[0] = 0.0
        return ncyc
    if v > det[4]:
        det[4] = v
    if v < det[5]:
        det[5] = v
    if h > det[6]:
        det[6] = h
    if phase == 1.0 and abs(v - target) >= level:
        det[0] = 2.0
    return ncyc


@njit(nogil=True, cache=True)
def scan_renewals(t, v, h, g, level, gap_tol, det, cyc):
    ncyc = 0
    for i in range(t.shape[0]):
        ncyc = renewal_point(det, t[i], v[i], h[i], i, g, level, gap_tol, cyc, ncyc)
    return ncyc


@njit(nogil=True, cache=True)
def advance(z, sigma, bridge, key, dt, g, x0, v0, k0, fstate, rec, rec_every,
            detect, det, level, gap_tol, cyc, ncyc):
    """Run len(z) steps starting at step index k0.

    Step k takes the state at time k*dt to (k+1)*dt with noise increment
    sigma * z[k - k0].  Rows of `rec` are written for every step index that
    is a multiple of rec_every.  Returns the updated cycle count.
    """
    var = sigma * sigma
    drop = 0.5 * g * dt * dt
    h = fstate[0]
    l = fstate[1]
    b = fstate[2]
    vmax = fstate[3]
    vmin = fstate[4]
    hmax = fstate[5]
    for i in range(z.shape[0]):
        k = k0 + i
        v = v0 + l - g * (k * dt)
        dw = sigma * z[i]
        y = v * dt - drop - dw
        e = h + y
        dl = 0.0
        if bridge and var > 0.0:
            if e < 0.0 or h * e < _BRIDGE_CUTOFF * var:
                m = h + bridge_min(y, var, counter_uniform(key, k))
                if m < 0.0:
                    dl = -m
                if e + dl < 0.0:
                    dl = -e
        elif e < 0.0:
            dl = -e
        l += dl
        b += dw
        h = e + dl
        t1 = (k + 1) * dt
        v1 = v0 + l - g * t1
        if v1 > vmax:
            vmax = v1
        if v1 < vmin:
            vmin = v1
        if h > hmax:
            hmax = h
        if detect:
            ncyc = renewal_point(det, t1, v1, h, k + 1, g, level, gap_tol, cyc, ncyc)
        if (k + 1) % rec_every == 0:
            j = (k + 1) // rec_every
            x = x0 + b - l
            rec[j, T] = t1
            rec[j, X] = x
            rec[j, S] = x + h
            rec[j, V] = v1
            rec[j, L] = l
            rec[j, B] = b
            rec[j, VMAX] = vmax
            rec[j, VMIN] = vmin
            rec[j, HMAX] = hmax
    fstate[0] = h
    fstate[1] = l
    fstate[2] = b
    fstate[3] = vmax
    fstate[4] = vmin
    fstate[5] = hmax
    return ncyc


@njit(nogil=True, cache=True)
def hit_scan(z, y, k0, dt, level, drift, bridge, key, give_up):
    """First passage of y + drift*t + W_t above `level` (level > 0 side).

    Returns (status, k, y): status 1 = hit during step k, -1 = y fell below
    `give_up` (return probability negligible), 0 = still running.
    """
    var = dt
    mdt = drift * dt
    sq = np.sqrt(dt)
    for i in range(z.shape[0]):
        k = k0 + i
        y1 = y + mdt + sq * z[i]
        if y1 >= level:
            return 1, k, y1
        if bridge:
            gap0 = level - y
            gap1 = level - y1
            if gap0 * gap1 < _BRIDGE_CUTOFF * var:
                if counter_uniform(key, k) < np.exp(-2.0 * gap0 * gap1 / var):
                    return 1, k, y1
        y = y1
        if y < give_up:
            return -1, k, y
    return 0, k0 + z.shape[0] - 1, y
