import numpy as np
import pytest

from kinlag import besov, lagrangian, scalar
from kinlag.errors import ValidationError


def test_single_jump_seminorm():
    # int_0^1 |u(x+h) - u(x)| dx = h for one unit jump, so h^-1/2 * h peaks at the largest h
    u = scalar.PiecewiseConstantFn([0.5], [0.0, 1.0])
    h = np.geomspace(1e-3, 0.25, 9)
    val, _, prof = besov.besov_seminorm(u, 0.5, (0.0, 1.0), h_grid=h)
    np.testing.assert_allclose(prof, np.sqrt(h), rtol=1e-12)
    assert val == pytest.approx(0.5)


def test_ramp_seminorm_callable():
    h = np.array([0.1, 0.5])
    val, _, _ = besov.besov_seminorm(lambda x: 2 * x, 0.5, (0.0, 1.0), h_grid=h)
    assert val == pytest.approx(2 * np.sqrt(0.5), rel=1e-12)


def test_alpha_range():
    with pytest.raises(ValidationError, match="alpha"):
        besov.besov_seminorm(scalar.PiecewiseConstantFn([], [0.0]), 1.0, (0, 1))


def test_pcf_difference_integral_exact():
    f = scalar.PiecewiseConstantFn([0.2, 0.7], [0.0, 1.0, 0.0])
    g = scalar.PiecewiseConstantFn([], [0.25])
    # f(x+0.1) = 1 on [0.1, 0.6): |1 - 0.25| * 0.5 + 0.25 * 0.5
    assert besov._pcf_diff_integral(f, g, 0.1, (0.0, 1.0)) == pytest.approx(0.75 * 0.5 + 0.25 * 0.5)


def test_sawtooth_shape():
    u = besov.sawtooth(4, steps_per_tooth=4)
    assert u(0.0) == pytest.approx(0.125)
    assert u(0.24) == pytest.approx(0.875)
    assert u(0.25) == pytest.approx(0.125)
    assert u(-0.1) == 0.0 and u(1.0) == 0.0
    assert u.total_variation() == pytest.approx(4 * (0.75 + 0.75) + 0.125 + 0.875 - 0.75)


def test_ab_fronts_bracket_shock(shock_solution):
    fh = lagrangian.build_hypograph_rep(shock_solution, 64, dx=1 / 256)
    fe = lagrangian.build_epigraph_rep(shock_solution, 64, dx=1 / 256)
    a, b = besov.ab_fronts(fh, fe, 0.8, 0.2, (-0.2, 0.8), n_x=128)
    x = np.linspace(-0.15, 0.75, 200)
    x = x[np.abs(x - 0.4) > 0.02]
    u = shock_solution.snapshot(0.8)(x)
    assert np.max(np.abs(a(x) - u)) <= 1 / 64 + 1e-12
    assert np.max(np.abs(b(x) - u)) <= 1 / 64 + 1e-12
    pos, _ = besov.oleinik_gap(a, b, [0.01, 0.05], 0.2, (-0.2, 0.8))
    assert np.all(pos < 0.5)


def test_ab_fronts_slab_check(shock_family):
    with pytest.raises(ValidationError, match="slab"):
        besov.ab_fronts(shock_family, shock_family, 0.5, 0.6, (0, 1))


def test_time_scaling_report(shock_solution):
    rep = besov.besov_time_scaling(shock_solution, [0.1, 0.2, 0.4], window=(0.0, 1.0), n_t=8)
    # one unit jump inside the window: seminorm is sqrt(h_max) at every time
    assert np.allclose(np.diff(rep.integrals) < 0, True)
    assert rep.table().shape == (3, 3)
    with pytest.raises(ValidationError, match="delta"):
        besov.besov_time_scaling(shock_solution, [0.5, 1.5])
