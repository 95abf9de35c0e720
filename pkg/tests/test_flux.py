import numpy as np
import pytest

from kinlag import flux as fluxmod
from kinlag.errors import ValidationError


def test_burgers_values():
    f = fluxmod.burgers()
    v = np.array([0.0, 0.5, 1.0])
    np.testing.assert_allclose(f.f(v), v ** 2 / 2)
    np.testing.assert_allclose(f.df(v), v)
    np.testing.assert_allclose(f.d2f(v), 1.0)


def test_quadratic_entropy_flux_is_cubic():
    f = fluxmod.burgers()
    pair = fluxmod.quadratic_entropy(f)
    v = np.array([0.1, 0.4, 0.9])
    np.testing.assert_allclose(pair.q(v), v ** 3 / 3, rtol=1e-12)


def test_identity_entropy_flux_is_flux():
    f = fluxmod.cubic((-1.0, 1.0))
    pair = fluxmod.identity_entropy(f)
    v = np.array([-0.7, 0.2, 0.8])
    np.testing.assert_allclose(pair.q(v), v ** 3, rtol=1e-12)


@pytest.mark.parametrize("vbar", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("delta", [0.05, 0.1, 0.3])
@pytest.mark.parametrize("side", ["minus", "plus"])
def test_nondegeneracy_burgers_is_third_of_window(vbar, delta, side):
    # |{v in window: |v - vbar| >= 2h}| = delta - 2h, equal to h at h = delta/3
    h = fluxmod.nondegeneracy_h(fluxmod.burgers(), vbar, delta, side)
    assert abs(h - delta / 3) <= 1e-10


def test_nondegeneracy_affine_vanishes():
    assert fluxmod.nondegeneracy_h(fluxmod.affine(2.0), 0.5, 0.1, "plus") == 0.0


def test_nondegeneracy_rejects_bad_width():
    with pytest.raises(ValidationError, match="width"):
        fluxmod.nondegeneracy_h(fluxmod.burgers(), 0.5, 0.0, "plus")


def test_cubic_nondegeneracy_at_inflection():
    # f' = 3v^2 around 0: |{v in (0, d): 3 v^2 >= 2h}| = d - sqrt(2h/3) = h
    d = 0.3
    h = fluxmod.nondegeneracy_h(fluxmod.cubic((-1.0, 1.0)), 0.0, d, "plus")
    assert abs(d - np.sqrt(2 * h / 3) - h) < 1e-12


def test_convexity_intervals_cubic():
    dec = fluxmod.convexity_intervals(fluxmod.cubic((-1.0, 1.0)))
    assert dec.signs == ["-", "+"]
    assert dec.intervals[0][0] == -1.0 and dec.intervals[1][1] == 1.0
    assert abs(dec.intervals[0][1]) < 1e-6 and abs(dec.intervals[1][0]) < 1e-6


def test_wgn_burgers_passes_affine_fails():
    assert fluxmod.wgn_test(fluxmod.burgers()).passed
    assert not fluxmod.wgn_test(fluxmod.affine(1.0)).passed


def test_wgn_detects_flat_piece():
    f = fluxmod.piecewise_linear([[0.0, 0.0], [0.4, 0.2], [0.6, 0.3], [1.0, 0.8]])
    rep = fluxmod.wgn_test(f)
    assert not rep.passed
    assert rep.worst_measure > 0.19


def test_linearized_interpolates():
    f = fluxmod.burgers()
    pl = f.linearized(0.25)
    nodes = np.linspace(0, 1, 5)
    np.testing.assert_allclose(pl.f(nodes), nodes ** 2 / 2, atol=1e-15)
    assert abs(pl.f(0.125) - 0.5 * (0 + 0.03125)) < 1e-15
    with pytest.raises(ValidationError, match="width"):
        f.linearized(0.3)


@pytest.mark.parametrize("cfg", [
    {"name": "burgers"},
    {"name": "polynomial", "coefficients": [0.0, 0.1, 0.5, 0.2], "domain": [0.0, 1.0]},
    {"name": "piecewise_linear", "table": [[0.0, 0.0], [0.5, 0.1], [1.0, 0.5]]},
])
def test_config_round_trip(cfg):
    f = fluxmod.from_config(cfg)
    g = fluxmod.from_config(f.to_config())
    v = np.linspace(*f.domain, 11)
    np.testing.assert_allclose(f.f(v), g.f(v), atol=1e-15)


def test_config_errors():
    with pytest.raises(ValidationError, match="flux"):
        fluxmod.from_config({"name": "nope"})
    with pytest.raises(ValidationError, match="coefficients"):
        fluxmod.from_config({"name": "polynomial"})
