"""State, time stepping and the zero-noise solution of the particle pair.

The Brownian particle X is reflected downward off the inert particle S.
The inert particle falls freely under constant acceleration ``g`` and its
velocity V jumps up by the collision local time L:

    dX = dB - dL,    dV = dL - g dt,    dS = V dt,    S >= X.

Two discretisations are available.  ``"projection"`` is the plain
end-of-step Skorokhod projection: S follows its exact free-fall parabola,
X takes the full Brownian increment, and any overlap is moved into L so
that the post-step gap is exactly zero.  ``"bridge"`` additionally samples
the minimum of the gap over the step from its Brownian bridge, so that
collisions which happen strictly inside a step are not missed; it removes
the O(sqrt(dt)) boundary bias of the projection scheme and is the default
for simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .seeding import bridge_key

SCHEMES = ("bridge", "projection")
_CHUNK = 1 << 16


@dataclass(frozen=True)
class GravParams:
    """Gravitational acceleration; the Brownian scale is fixed to one."""

    g: float

    def __post_init__(self):
        if not (math.isfinite(self.g) and self.g > 0):
            raise ValueError(f"g must be a positive finite number, got {self.g!r}")

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
        return 1.0 / (2.0 * self.g)


@dataclass(frozen=True)
class SystemState:
    t: float
    x: float
    s: float
    v: float
    l: float
    b: float

    @property
    def gap(self) -> float:
        return self.s - self.x


@dataclass(frozen=True)
class StepResult:
    state: SystemState
    collided: bool
    dl: float


@dataclass
class TimeSeries:
    """Strided record of one trajectory.

    Columns are sampled at step indices that are multiples of
    ``record_stride``.  ``vmax``, ``vmin`` and ``hmax`` are running extremes
    over *every* step up to the recorded time, not just over recorded rows.
    ``renewals`` holds the step-resolution renewal table when detection was
    requested (see `inertgrav.mc.renewal`).
    """

    t: np.ndarray
    x: np.ndarray
    s: np.ndarray
    v: np.ndarray
    l: np.ndarray
    b: np.ndarray
    vmax: np.ndarray
    vmin: np.ndarray
    hmax: np.ndarray
    dt: float
    record_stride: int
    g: float
    seed: Optional[int]
    scheme: str
    renewals: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def h(self) -> np.ndarray:
        return self.s - self.x

    @property
    def initial(self) -> SystemState:
        return self.state(0)

    def __len__(self) -> int:
        return self.t.shape[0]

    def state(self, i: int) -> SystemState:
        return SystemState(float(self.t[i]), float(self.x[i]), float(self.s[i]),
                           float(self.v[i]), float(self.l[i]), float(self.b[i]))

    def equals(self, other: "TimeSeries") -> bool:
        """Bitwise equality of all recorded columns and renewal tables."""
        cols = ("t", "x", "s", "v", "l", "b", "vmax", "vmin", "hmax")
        if any(not np.array_equal(getattr(self, c), getattr(other, c)) for c in cols):
            return False
        if (self.renewals is None) != (other.renewals is None):
            return False
        return self.renewals is None or np.array_equal(self.renewals, other.renewals)


def new_state(x0: float, s0: float, v0: float) -> SystemState:
    """Initial state at t = 0 with zero local time and noise."""
    for name, val in (("x0", x0), ("s0", s0), ("v0", v0)):
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val!r}")
    if s0 < x0:
        raise ValueError(f"inert particle must start above the Brownian one (s0={s0} < x0={x0})")
    return SystemState(0.0, float(x0), float(s0), float(v0), 0.0, 0.0)


def _check_state(state: SystemState) -> None:
    vals = (state.t, state.x, state.s, state.v, state.l, state.b)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"state has non-finite entries: {state}")
    if state.s < state.x:
        raise ValueError("state violates s >= x")
    if state.l < 0:
        raise ValueError("state has negative local time")


def step(state: SystemState, params: GravParams, dt: float, dw: float,
         u: Optional[float] = None) -> StepResult:
    """Advance one step of length `dt` with Brownian increment `dw`.

    Without `u` this is the end-of-step projection: the tentative gap
    ``s* - x*`` is computed from the free-fall parabola and the shifted
    Brownian particle, and a negative gap is pushed into the local time so
    the post-step gap is exactly 0.

    With `u` in (0, 1) the gap minimum over the step is sampled from the
    Brownian bridge at quantile `u`; any excursion of the minimum below
    zero becomes local time even if the endpoint gap is positive.
    """
    _check_state(state)
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    if not math.isfinite(dw):
        raise ValueError(f"dw must be finite, got {dw!r}")
    g = params.g
    s_star = state.s + state.v * dt - 0.5 * g * dt * dt
    v_star = state.v - g * dt
    x_star = state.x + dw
    gap = s_star - x_star
    dl = 0.0
    if u is not None:
        if not 0.0 < u < 1.0:
            raise ValueError("u must lie in (0, 1)")
        y = gap - state.gap
        low = state.gap + 0.5 * (y - math.sqrt(y * y - 2.0 * dt * math.log(u)))
        if low < 0.0:
            dl = -low
        dl = max(dl, -gap)
    elif gap < 0.0:
        dl = -gap
    if dl > 0.0:
        # projection lands exactly on the inert particle
        x_new = s_star if dl == -gap else min(x_star - dl, s_star)
        new = SystemState(state.t + dt, x_new, s_star, v_star + dl,
                          state.l + dl, state.b + dw)
        return StepResult(new, True, dl)
    return StepResult(SystemState(state.t + dt, x_star, s_star, v_star, state.l, state.b + dw),
                      False, 0.0)


def _num_steps(dt: float, horizon: float) -> int:
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    if not (math.isfinite(horizon) and horizon >= dt):
        raise ValueError(f"horizon must be >= dt (horizon={horizon}, dt={dt})")
    return int(math.floor(horizon / dt + 1e-9))


def simulate_path(initial: SystemState, params: GravParams, dt: float, horizon: float,
                  seed: Optional[int], record_stride: int = 1, *, scheme: str = "bridge",
                  zero_noise: bool = False, renewal_level: Optional[float] = None,
                  gap_tol: Optional[float] = None) -> TimeSeries:
    """Integrate one trajectory over ``[0, horizon]``.

    Increments are ``sqrt(dt) * N(0, 1)`` from ``numpy.random.default_rng(seed)``
    (ignored with ``zero_noise=True``).  Time is ``k * dt`` at step ``k``.
    Passing `renewal_level` runs the renewal detector at every step and
    stores its table in ``TimeSeries.renewals``; `gap_tol` defaults to
    ``10 * sqrt(dt)``.
    """
    _check_state(initial)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if int(record_stride) != record_stride or record_stride < 1:
        raise ValueError("record_stride must be a positive integer")
    record_stride = int(record_stride)
    if seed is None and not zero_noise:
        raise ValueError("a seed is required unless zero_noise=True")
    n_steps = _num_steps(dt, horizon)
    g = params.g
    n_rec = n_steps // record_stride + 1

    rec = np.empty((n_rec, _kernels.REC_COLS))
    h0 = initial.s - initial.x
    rec[0] = (0.0, initial.x, initial.s, initial.v, initial.l, initial.b,
              initial.v, initial.v, h0)
    # local time and noise are carried relative to the initial values
    fstate = np.array([h0, 0.0, 0.0, initial.v, initial.v, h0])
    x_ref = initial.x

    detect = renewal_level is not None
    det = _kernels.new_detector()
    if gap_tol is None:
        gap_tol = 10.0 * math.sqrt(dt)
    level = float(renewal_level) if detect else 1.0
    if detect and level <= 0:
        raise ValueError("renewal_level must be positive")
    cap = int(n_steps * dt * g / level) + 8 if detect else 1
    cyc = np.empty((cap, 7))
    ncyc = 0
    if detect:
        ncyc = _kernels.renewal_point(det, 0.0, initial.v, h0, 0, g, level, gap_tol, cyc, ncyc)

    sigma = 0.0 if zero_noise else math.sqrt(dt)
    rng = None if zero_noise else np.random.default_rng(seed)
    key = np.uint64(bridge_key(seed if seed is not None else 0))
    use_bridge = scheme == "bridge"
    buf = np.zeros(min(_CHUNK, n_steps))
    k0 = 0
    while k0 < n_steps:
        n = min(_CHUNK, n_steps - k0)
        z = buf[:n]
        if rng is not None:
            rng.standard_normal(out=z)
        ncyc = _kernels.advance(z, sigma, use_bridge, key, dt, g, x_ref, initial.v, k0,
                                fstate, rec, record_stride, detect, det, level,
                                gap_tol, cyc, ncyc)
        k0 += n
    if det[8]:
        raise RuntimeError("renewal table overflow")

    t0 = initial.t
    l_col = rec[:, _kernels.L]
    b_col = rec[:, _kernels.B]
    if t0 != 0.0 or initial.l != 0.0 or initial.b != 0.0:
        rec[1:, _kernels.T] += t0
        l_col[1:] += initial.l
        b_col[1:] += initial.b
    renewals = None
    if detect:
        renewals = cyc[:ncyc, :5].copy()
        renewals[:, :2] += t0
    return TimeSeries(
        t=rec[:, _kernels.T].copy(), x=rec[:, _kernels.X].copy(), s=rec[:, _kernels.S].copy(),
        v=rec[:, _kernels.V].copy(), l=l_col.copy(), b=b_col.copy(),
        vmax=rec[:, _kernels.VMAX].copy(), vmin=rec[:, _kernels.VMIN].copy(),
        hmax=rec[:, _kernels.HMAX].copy(), dt=float(dt), record_stride=record_stride,
        g=g, seed=seed, scheme="zero-noise" if zero_noise else scheme, renewals=renewals,
    )


def collision_time(gap: float, v: float, g: float) -> float:
    """First time a free-falling particle at height `gap` above a fixed point lands on it.

    Positive root of ``gap + v t - g t^2 / 2 = 0``; zero when ``gap == 0``
    and ``v <= 0``.
    """
    if gap == 0.0 and v <= 0.0:
        return 0.0
    disc = v * v + 2.0 * g * gap
    if disc < 0.0:
        if disc < -1e-12:
            raise ValueError("no collision: negative discriminant")
        disc = 0.0
    return (v + math.sqrt(disc)) / g


def zero_noise_path(initial: SystemState, params: GravParams, times) -> dict:
    """Closed-form noiseless solution at elapsed times `times` (array-like, >= 0).

    The inert particle flies freely until it lands on the (motionless)
    Brownian particle, after which the two stay in contact and the velocity
    relaxes exponentially to ``-g``.  Returns arrays keyed t, x, s, v, l, b.
    """
    _check_state(initial)
    g = params.g
    tau = np.asarray(times, dtype=float)
    if np.any(tau < 0):
        raise ValueError("times must be non-negative")
    h0 = initial.s - initial.x
    v0 = initial.v
    sigma = collision_time(h0, v0, g)

    free = tau < sigma
    s_free = initial.s + v0 * tau - 0.5 * g * tau * tau
    v_free = v0 - g * tau

    v_land = v0 - g * sigma
    s_land = initial.x
    r = np.where(free, 0.0, tau - sigma)
    decay = np.exp(-r)
    v_stuck = -g + (v_land + g) * decay
    s_stuck = s_land - g * r + (v_land + g) * (-np.expm1(-r))

    s = np.where(free, s_free, s_stuck)
    v = np.where(free, v_free, v_stuck)
    x = np.where(free, initial.x, s_stuck)
    l = initial.l + (initial.x - x)
    return {
        "t": initial.t + tau,
        "x": x,
        "s": s,
        "v": v,
        "l": l,
        "b": np.full_like(tau, initial.b),
    }


def zero_noise_solution(initial: SystemState, params: GravParams, t: float) -> SystemState:
    """Exact noiseless state after elapsed time `t`."""
    if not t >= 0:
        raise ValueError("t must be non-negative")
    p = zero_noise_path(initial, params, np.array([float(t)]))
    return SystemState(*(float(p[k][0]) for k in ("t", "x", "s", "v", "l", "b")))
