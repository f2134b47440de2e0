import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hydrotwin import hydronet
from hydrotwin.config import ConfigError, dump_flat_dataclass, load_flat_dataclass
from hydrotwin.hydronet import (
    DEFAULT_CONFIG,
    NOMINAL_THETA,
    ComponentVector,
    ControlVector,
    LoopConfig,
    NoConvergence,
    loop_closure_error,
    parallel_k,
    simulate,
    solve_operating_point,
)

# Independent restatement of the loop physics for the brute-force oracle.
AREA = math.pi * 0.025**2 / 4.0
G = 9.81


def _oracle_k(u2, th):
    if u2 == 0:
        kpar = th[2]
    else:
        kv = 2.0 / (u2 / 100.0) ** 2
        kpar = (1 / math.sqrt(th[2]) + 1 / math.sqrt(kv)) ** -2
    return th[0] + 0.5 + th[1] + kpar


def _oracle_residual(q, u1, u2, th):
    s = u1 / 100.0
    head = th[4] * (1.25 * s * s - 0.25 * (q / th[5]) ** 2)
    v = q / 3600.0 / AREA
    return head - _oracle_k(u2, th) * v * v / (2 * G)


def oracle_flow(u1, u2, th, step=1e-4):
    """Scan a flow grid for the sign change, then bisect inside the cell."""
    if u1 == 0:
        return 0.0
    grid = np.arange(0.0, math.sqrt(5.0) * th[5] + step, step)
    r = _oracle_residual(grid, u1, u2, th)
    i = int(np.flatnonzero(r <= 0)[0])
    lo, hi = grid[i - 1], grid[i]
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _oracle_residual(mid, u1, u2, th) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def closed_form_flow(u1, u2, th):
    s = u1 / 100.0
    chv = 1.0 / (3600.0 * AREA) ** 2 / (2 * G)
    return s * math.sqrt(th[4] * 1.25 / (th[4] * 0.25 / th[5] ** 2 + _oracle_k(u2, th) * chv))


def random_draw(rng):
    u = ControlVector(*rng.uniform(0, 100, 2))
    theta = ComponentVector.from_array(NOMINAL_THETA.as_array() * rng.uniform(0.4, 1.6, 6))
    return u, theta


def test_reference_point():
    y = simulate(ControlVector(54, 100), NOMINAL_THETA)
    expected = (5.208229890352436, 2.5668729052791033, 3.542356449118218,
                3.185097049026025, 15.205550314018154)
    np.testing.assert_allclose(y.as_array(), expected, rtol=0, atol=1e-12)


def test_flow_matches_grid_scan_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        u, theta = random_draw(rng)
        q = solve_operating_point(u, theta)
        th = theta.as_array()
        assert abs(q - oracle_flow(u.u1, u.u2, th)) < 1e-4
        assert q == pytest.approx(closed_form_flow(u.u1, u.u2, th), rel=1e-12, abs=1e-12)


def test_loop_closure_and_runtime():
    rng = np.random.default_rng(1)
    draws = [random_draw(rng) for _ in range(1000)]
    start = time.perf_counter()
    worst = max(abs(loop_closure_error(u, th, simulate(u, th), DEFAULT_CONFIG)) for u, th in draws)
    assert time.perf_counter() - start < 1.0
    assert worst < 1e-9


@given(st.floats(0, 100), st.floats(0, 100), st.floats(-2.0, 5.0))
def test_tank_shift_moves_pressures_only(u1, u2, delta):
    u = ControlVector(u1, u2)
    base = simulate(u, NOMINAL_THETA)
    shifted = simulate(u, NOMINAL_THETA.with_value(4, NOMINAL_THETA.p_tank + delta))
    assert shifted.fl == base.fl
    np.testing.assert_allclose(shifted.as_array()[:4] - base.as_array()[:4], delta, rtol=0, atol=1e-12)


def test_pump_stopped_gives_tank_pressure_everywhere():
    y = simulate(ControlVector(0, 50), NOMINAL_THETA)
    assert y.as_array().tolist() == [3.0, 3.0, 3.0, 3.0, 0.0]


def test_closed_valve_routes_everything_through_exchanger():
    assert parallel_k(0.0, NOMINAL_THETA) == NOMINAL_THETA.lossx
    assert parallel_k(50.0, NOMINAL_THETA) < NOMINAL_THETA.lossx


@given(st.floats(1, 99), st.floats(0, 99), st.floats(0.1, 1))
def test_flow_monotone_in_controls(u1, u2, du):
    q = solve_operating_point(ControlVector(u1, u2), NOMINAL_THETA)
    assert solve_operating_point(ControlVector(u1 + du, u2), NOMINAL_THETA) > q
    assert solve_operating_point(ControlVector(u1, u2 + du), NOMINAL_THETA) >= q


@given(st.sampled_from([1, 2, 3]), st.floats(1.05, 2.0))
def test_more_resistance_means_less_flow(index, mult):
    u = ControlVector(60, 50)
    theta = NOMINAL_THETA.with_value(index, NOMINAL_THETA.get(index) * mult)
    assert solve_operating_point(u, theta) < solve_operating_point(u, NOMINAL_THETA)


def test_pressures_ordered_around_loop():
    y = simulate(ControlVector(70, 40), NOMINAL_THETA)
    assert y.p1 > y.p3 > y.p4 > y.p2


@pytest.mark.parametrize("u1,u2", [(-1, 50), (101, 50), (50, -0.1), (50, 100.5), (float("nan"), 1)])
def test_control_range_checked(u1, u2):
    with pytest.raises(ValueError):
        ControlVector(u1, u2)


@pytest.mark.parametrize("value", [0.0, -1.0, float("inf"), float("nan")])
def test_component_values_must_be_positive_finite(value):
    with pytest.raises(ValueError):
        NOMINAL_THETA.with_value(3, value)


def test_component_indexing_is_one_based():
    assert NOMINAL_THETA.get(1) == 4.5 and NOMINAL_THETA.get(6) == 15.3
    for bad in (0, 7):
        with pytest.raises(IndexError):
            NOMINAL_THETA.get(bad)


def test_pump_coefficients_must_be_normalized():
    with pytest.raises(ValueError):
        LoopConfig(pump_c0=1.3, pump_c2=0.25)


def test_exhausted_budget_raises(monkeypatch):
    monkeypatch.setattr(hydronet, "MAX_BISECTION_ITERATIONS", 5)
    with pytest.raises(NoConvergence):
        simulate(ControlVector(50, 50), NOMINAL_THETA)


def test_loop_config_file_round_trip(tmp_path):
    cfg = LoopConfig(pipe_diameter=0.03, kv100=2.5)
    path = tmp_path / "loop.cfg"
    path.write_text(dump_flat_dataclass(cfg, "test") + "# trailing comment\n")
    assert load_flat_dataclass(LoopConfig, path) == cfg


def test_loop_config_file_errors(tmp_path):
    path = tmp_path / "loop.cfg"
    path.write_text("pipe_diameter = 0.02\nbogus = 1\n")
    with pytest.raises(ConfigError) as info:
        load_flat_dataclass(LoopConfig, path)
    assert info.value.line == 2
    path.write_text("pipe_diameter = -1\n")
    with pytest.raises(ConfigError):
        load_flat_dataclass(LoopConfig, path)


@given(st.floats(1, 100), st.floats(0, 100))
def test_residual_changes_sign_once(u1, u2):
    theta = NOMINAL_THETA
    s = u1 / 100.0
    k = hydronet.total_k(u2, theta)
    grid = np.linspace(0.0, math.sqrt(5.0) * theta.debit, 400)
    r = np.array([hydronet.pump_head(q, s, theta) - k * hydronet.velocity_head(q, DEFAULT_CONFIG)
                  for q in grid])
    assert r[0] > 0 and r[-1] < 0
    assert np.all(np.diff(r) < 0)
