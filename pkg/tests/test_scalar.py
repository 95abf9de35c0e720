import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinlag import flux as fluxmod
from kinlag import scalar
from kinlag.errors import ValidationError

from conftest import random_data


def test_pcf_evaluation_and_integral():
    u = scalar.PiecewiseConstantFn([0.0, 1.0], [2.0, 3.0, 5.0])
    np.testing.assert_array_equal(u(np.array([-1.0, 0.0, 0.5, 1.0, 7.0])), [2, 3, 3, 5, 5])
    assert u.integral(-1.0, 2.0) == 2 + 3 + 5
    assert u.total_variation() == 3.0
    with pytest.raises(ValidationError, match="data"):
        scalar.PiecewiseConstantFn([1.0, 0.0], [0, 1, 2])


def test_pcf_merges_equal_neighbours():
    u = scalar.PiecewiseConstantFn([0.0, 1.0], [1.0, 1.0, 2.0])
    np.testing.assert_array_equal(u.breakpoints, [1.0])


def test_burgers_shock_riemann():
    (w,) = scalar.solve_riemann_scalar(fluxmod.burgers(), 1.0, 0.0)
    assert w.kind == "shock" and w.speed == 0.5


def test_burgers_rarefaction_riemann():
    (w,) = scalar.solve_riemann_scalar(fluxmod.burgers(), 0.0, 1.0)
    assert w.kind == "rarefaction"
    assert (w.speed_left, w.speed_right) == (0.0, 1.0)


def test_cubic_riemann_tangent_shock():
    # chord from -1/2 to 1 is tangent to v^3 at -1/2: one shock of speed 3/4
    waves = scalar.solve_riemann_scalar(fluxmod.cubic((-1.0, 1.0)), 1.0, -0.5)
    assert len(waves) == 1 and waves[0].kind == "shock"
    assert abs(waves[0].speed - 0.75) < 1e-12


def test_cubic_riemann_shock_then_rarefaction():
    waves = scalar.solve_riemann_scalar(fluxmod.cubic((-1.0, 1.0)), 1.0, -1.0)
    assert [w.kind for w in waves] == ["shock", "rarefaction"]
    assert abs(waves[0].speed - 0.75) < 1e-6
    assert abs(waves[0].u_right + 0.5) < 1e-3
    assert abs(waves[1].speed_right - 3.0) < 1e-12


def test_riemann_domain_check():
    with pytest.raises(ValidationError, match="domain"):
        scalar.solve_riemann_scalar(fluxmod.burgers(), 2.0, 0.0)


def test_shock_front_track(shock_solution):
    assert shock_solution.n_fronts == 1
    u = shock_solution.snapshot(1.0)
    assert u(0.49) == 1.0 and u(0.51) == 0.0


def test_rarefaction_staircase(rarefaction_solution):
    u = rarefaction_solution.snapshot(1.0)
    x = np.linspace(0.01, 0.99, 50)
    assert np.max(np.abs(u(x) - x)) <= 1 / 256 + 1e-12


@pytest.mark.parametrize("seed", [0, 1])
def test_conservation_random(burgers, seed):
    u0 = random_data(seed, 20)
    sol = scalar.front_track(u0, burgers, 1.0, 1 / 64)
    a, b = -2.0, 3.0
    for t in (0.3, 1.0):
        expected = u0.integral(a, b) + t * (burgers.f(u0.left) - burgers.f(u0.right))
        assert abs(sol.mass(t, a, b) - expected) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(0, 16), min_size=2, max_size=6))
def test_front_track_entropy_jumps(levels):
    vals = np.array(levels, float) / 16
    u0 = scalar.PiecewiseConstantFn(0.2 * np.arange(vals.size - 1), vals)
    sol = scalar.front_track(u0, fluxmod.burgers(), 1.0, 1 / 16)
    # upward jumps of a Burgers entropy solution are single rarefaction steps
    u = sol.snapshot(1.0)
    assert np.all(np.diff(u.values) <= 1 / 16 + 1e-12)
    assert abs(u.integral(-5, 5) - u0.integral(-5, 5) - (vals[0] ** 2 - vals[-1] ** 2) / 2) < 1e-12


def test_oleinik_bound(shock_solution, rarefaction_solution):
    probes = np.linspace(-0.5, 1.5, 401)
    for t in (0.25, 0.5, 1.0):
        assert scalar.oleinik_check(rarefaction_solution, t, probes) <= 1 / t + 1e-9
        assert scalar.oleinik_check(shock_solution, t, probes) <= 1e-12


def test_random_piecewise_quantized():
    u = random_data(5)
    assert np.allclose(u.values * 64, np.round(u.values * 64))
    assert 0.0 <= u.breakpoints[0] and u.breakpoints[-1] <= 1.0
