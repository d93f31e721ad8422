import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inertgrav import (
    GravParams,
    new_state,
    simulate_path,
    step,
    zero_noise_path,
    zero_noise_solution,
)
from inertgrav.model import collision_time

G1 = GravParams(1.0)


def reference_step(x, s, v, l, g, dt, dw):
    """Exact rational evaluation of the projection update."""
    x, s, v, l, g, dt, dw = map(Fraction, (x, s, v, l, g, dt, dw))
    s_star = s + v * dt - g * dt * dt / 2
    x_star = x + dw
    v_star = v - g * dt
    if x_star <= s_star:
        return x_star, s_star, v_star, l, Fraction(0)
    dl = x_star - s_star
    return s_star, s_star, v_star + dl, l + dl, dl


# ---------------------------------------------------------------- new_state


def test_new_state_renewal_point():
    st0 = new_state(0.0, 0.0, -1.0)
    assert (st0.t, st0.x, st0.s, st0.v, st0.l, st0.b) == (0.0, 0.0, 0.0, -1.0, 0.0, 0.0)


def test_new_state_gap():
    assert new_state(0.0, 1.0, 0.0).gap == 1.0


@pytest.mark.parametrize("args", [(1.0, 0.0, 0.0), (0.0, math.nan, 0.0), (0.0, 1.0, math.inf)])
def test_new_state_rejects(args):
    with pytest.raises(ValueError):
        new_state(*args)


def test_grav_params_rejects_nonpositive():
    for g in (0.0, -1.0, math.nan):
        with pytest.raises(ValueError):
            GravParams(g)


# ---------------------------------------------------------------- step


def test_step_free_fall():
    res = step(new_state(0.0, 1.0, 0.0), G1, 0.01, 0.0)
    assert not res.collided and res.dl == 0.0
    assert res.state.v == pytest.approx(-0.01, abs=1e-15)
    assert res.state.s == pytest.approx(1.0 - 0.00005, abs=1e-15)
    assert res.state.x == 0.0


def test_step_collision_matches_hand_values():
    res = step(new_state(0.0, 0.0, -1.0), G1, 0.01, 0.1)
    assert res.collided
    assert res.dl == pytest.approx(0.11005, abs=1e-14)
    assert res.state.x == res.state.s == pytest.approx(-0.01005, abs=1e-15)
    assert res.state.v == pytest.approx(-0.89995, abs=1e-14)
    ref = reference_step(0.0, 0.0, -1.0, 0.0, 1.0, 0.01, 0.1)
    assert res.state.v == pytest.approx(float(ref[2]), abs=1e-15)
    assert res.dl == pytest.approx(float(ref[4]), abs=1e-15)


def test_step_touching_is_not_a_collision():
    # s* = 0.5 - 0.125 = 0.375 is exact in binary, so dw = 0.375 lands on it
    res = step(new_state(0.0, 0.5, 0.0), G1, 0.5, 0.375)
    assert res.dl == 0.0 and not res.collided
    assert res.state.gap == 0.0


@pytest.mark.parametrize("dt", [0.0, -1.0, math.nan])
def test_step_rejects_bad_dt(dt):
    with pytest.raises(ValueError):
        step(new_state(0, 0, 0), G1, dt, 0.0)


def test_step_rejects_bad_dw():
    with pytest.raises(ValueError):
        step(new_state(0, 0, 0), G1, 0.1, math.inf)


def test_bridge_step_pushes_on_interior_contact():
    # endpoint gap stays positive but a bridge minimum at u -> 0 dips below zero
    state = new_state(0.0, 0.01, 0.0)
    res = step(state, G1, 0.01, 0.0, u=1e-12)
    assert res.dl > 0 and res.state.gap > 0
    assert step(state, G1, 0.01, 0.0, u=0.999999).dl == 0.0
    with pytest.raises(ValueError):
        step(state, G1, 0.01, 0.0, u=1.0)


@given(
    g=st.floats(0.1, 5.0),
    dt=st.sampled_from([1e-3, 1e-2, 0.05]),
    v0=st.floats(-3, 3),
    h0=st.floats(0, 2),
    dws=st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=60),
)
def test_step_properties(g, dt, v0, h0, dws):
    params = GravParams(g)
    state = new_state(0.0, h0, v0)
    for dw in dws:
        res = step(state, params, dt, dw)
        new = res.state
        assert new.s >= new.x
        assert new.l >= state.l
        assert (res.dl > 0) == res.collided
        if res.dl > 0:
            assert new.s - new.x == 0.0
        state = new
    assert state.v - v0 == pytest.approx(state.l - g * state.t, abs=1e-9 * (1 + abs(state.l)))


# ---------------------------------------------------------------- simulate_path


def test_simulate_path_counts_records():
    s = simulate_path(new_state(0, 0, -1), G1, 0.5, 1.0, seed=3, record_stride=1)
    assert len(s) == 3
    np.testing.assert_array_equal(s.t, [0.0, 0.5, 1.0])


def test_simulate_path_deterministic():
    a = simulate_path(new_state(0, 0, -1), G1, 1e-3, 5.0, seed=11, record_stride=7)
    b = simulate_path(new_state(0, 0, -1), G1, 1e-3, 5.0, seed=11, record_stride=7)
    c = simulate_path(new_state(0, 0, -1), G1, 1e-3, 5.0, seed=12, record_stride=7)
    assert a.equals(b)
    assert not np.array_equal(a.b, c.b)


def test_simulate_path_requires_seed():
    with pytest.raises(ValueError):
        simulate_path(new_state(0, 0, -1), G1, 1e-3, 1.0, seed=None)


def test_simulate_path_rejects_short_horizon():
    with pytest.raises(ValueError):
        simulate_path(new_state(0, 0, -1), G1, 1.0, 0.5, seed=1)


def test_time_is_index_times_dt():
    s = simulate_path(new_state(0, 0, -1), G1, 1e-3, 10.0, seed=2, record_stride=1)
    np.testing.assert_array_equal(s.t, np.arange(len(s)) * 1e-3)


def test_projection_path_matches_step_loop():
    """The compiled projection kernel against the reference `step`."""
    dt, n = 1e-3, 500
    init = new_state(0.0, 0.2, 0.3)
    sim = simulate_path(init, G1, dt, n * dt, seed=9, scheme="projection")
    dws = np.diff(sim.b)
    state = init
    for k, dw in enumerate(dws):
        state = step(state, G1, dt, float(dw)).state
        assert state.v == pytest.approx(sim.v[k + 1], abs=1e-12)
        assert state.x == pytest.approx(sim.x[k + 1], abs=1e-12)
        assert state.s == pytest.approx(sim.s[k + 1], abs=1e-12)


def test_increments_have_variance_dt():
    s = simulate_path(new_state(0, 0, -1), G1, 1e-3, 200.0, seed=4)
    db = np.diff(s.b)
    assert np.var(db) / 1e-3 == pytest.approx(1.0, abs=0.01)


def test_v_l_t_identity_over_a_million_steps():
    init = new_state(0.0, 0.0, -1.0)
    s = simulate_path(init, G1, 1e-3, 1000.0, seed=5, record_stride=1000)
    assert len(s) == 1001
    resid = s.v - (init.v + s.l - G1.g * s.t)
    assert np.max(np.abs(resid)) <= 1e-9 * max(1.0, np.max(np.abs(s.l)))


@pytest.mark.parametrize("scheme", ["bridge", "projection"])
def test_skorokhod_consistency(scheme):
    init = new_state(0.0, 0.3, 0.5)
    s = simulate_path(init, G1, 1e-3, 20.0, seed=21, record_stride=1, scheme=scheme)
    push = np.maximum(0.0, np.maximum.accumulate(s.b - s.s))
    tol = 2 * np.max(np.abs(np.diff(s.b)))
    assert np.max(np.abs(s.l - push)) <= tol


@pytest.mark.parametrize("scheme", ["bridge", "projection"])
def test_gap_nonnegative_and_local_time_monotone(scheme):
    s = simulate_path(new_state(0, 0, -2), GravParams(2.0), 1e-3, 50.0, seed=8, scheme=scheme)
    assert np.all(s.h >= 0)
    assert np.all(np.diff(s.l) >= 0)


def test_projection_support_condition():
    s = simulate_path(new_state(0, 0, -1), G1, 1e-3, 20.0, seed=8, scheme="projection")
    pushed = np.diff(s.l) > 0
    assert pushed.any()
    assert np.all(s.h[1:][pushed] == 0.0)


def test_running_extremes_cover_every_step():
    fine = simulate_path(new_state(0, 0, -1), G1, 1e-3, 30.0, seed=6, record_stride=1)
    coarse = simulate_path(new_state(0, 0, -1), G1, 1e-3, 30.0, seed=6, record_stride=1000)
    np.testing.assert_array_equal(coarse.vmax, np.maximum.accumulate(fine.v)[::1000])
    # recorded h = s - x may differ from the carried gap by one rounding
    np.testing.assert_allclose(coarse.hmax, np.maximum.accumulate(fine.h)[::1000], atol=1e-12)
    np.testing.assert_array_equal(coarse.vmin, np.minimum.accumulate(fine.v)[::1000])


def test_chunking_does_not_change_path():
    # 70000 steps span two noise chunks of 65536
    long = simulate_path(new_state(0, 0, -1), G1, 1e-3, 70.0, seed=13, record_stride=10)
    short = simulate_path(new_state(0, 0, -1), G1, 1e-3, 60.0, seed=13, record_stride=10)
    n = len(short)
    for col in ("x", "s", "v", "l", "b"):
        np.testing.assert_array_equal(getattr(long, col)[:n], getattr(short, col))


# ---------------------------------------------------------------- zero noise


def test_zero_noise_relaxation_at_ln2():
    sol = zero_noise_solution(new_state(0, 0, 0), G1, math.log(2))
    assert sol.v == pytest.approx(-0.5, abs=1e-14)


@pytest.mark.parametrize("t", [0.0, 0.3, 2.0, 17.5])
def test_zero_noise_fixed_point(t):
    g = 1.7
    sol = zero_noise_solution(new_state(0.0, 0.0, -g), GravParams(g), t)
    assert sol.v == pytest.approx(-g, abs=1e-14)
    assert sol.s == pytest.approx(-g * t, abs=1e-12)
    assert sol.l == pytest.approx(g * t, abs=1e-12)
    assert sol.x == sol.s


def test_zero_noise_free_fall_then_landing():
    g2 = GravParams(2.0)
    init = new_state(0.0, 1.0, 0.0)
    assert collision_time(1.0, 0.0, 2.0) == pytest.approx(1.0, abs=1e-15)
    sol = zero_noise_solution(init, g2, 1.0)
    assert sol.v == pytest.approx(-2.0, abs=1e-14)
    assert sol.s == pytest.approx(0.0, abs=1e-14)
    half = zero_noise_solution(init, g2, 0.5)
    assert half.l == 0.0 and half.x == 0.0 and half.v == pytest.approx(-1.0)
    # cross-check with a fine noiseless run
    sim = simulate_path(init, g2, 1e-4, 1.0, None, 1, zero_noise=True)
    assert sim.v[-1] == pytest.approx(-2.0, abs=1e-3)


def test_zero_noise_upward_start_flies_first():
    # v0 > 0 with contact: the inert particle leaves, lands at t = 2 v0 / g
    init = new_state(0.0, 0.0, 1.0)
    assert collision_time(0.0, 1.0, 1.0) == pytest.approx(2.0)
    sol = zero_noise_solution(init, G1, 1.0)
    assert sol.v == pytest.approx(0.0, abs=1e-14) and sol.l == 0.0
    sim = simulate_path(init, G1, 1e-4, 6.0, None, 1, zero_noise=True)
    exact = zero_noise_path(init, G1, sim.t)
    assert np.max(np.abs(sim.v - exact["v"])) < 5e-4


def test_collision_time_tangency_clamp():
    assert collision_time(0.0, -1.0, 1.0) == 0.0
    # discriminant -1e-13 is clamped, -1e-6 is not
    assert collision_time(-0.5e-13, 0.0, 1.0) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        collision_time(-1.0, 0.0, 1.0)


def test_zero_noise_first_order():
    init = new_state(0.0, 0.0, 0.0)
    errs = []
    for dt in (1e-3, 5e-4):
        sim = simulate_path(init, G1, dt, 10.0, None, 1, zero_noise=True)
        exact = zero_noise_path(init, G1, sim.t)
        errs.append(np.max(np.abs(sim.v - exact["v"])))
    assert errs[0] < 5e-3
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.2)


def test_zero_noise_path_rejects_negative_times():
    with pytest.raises(ValueError):
        zero_noise_path(new_state(0, 0, 0), G1, [-1.0])
