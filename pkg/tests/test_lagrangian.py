import numpy as np
import pytest
from scipy import integrate

from kinlag import lagrangian, scalar
from kinlag.errors import ValidationError


def test_shock_mu1_total_matches_quadrature(shock_measures):
    _, mu1 = shock_measures
    exact = integrate.quad(lambda v: v * (1 - v) / 2, 0, 1)[0]     # = 1/12 per unit time, T = 1
    assert abs(mu1.total() - exact) <= 0.01 * exact
    assert np.all(mu1.segments[:, 4] > 0)


def test_shock_mu1_v_profile(shock_measures):
    _, mu1 = shock_measures
    edges = np.linspace(0, 1, 9)
    hist = mu1.v_density(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    # bin average of v(1-v)/2 is mid(1-mid)/2 - h^2/24 for bin width h
    expected = mids * (1 - mids) / 2 - (1 / 8) ** 2 / 24
    np.testing.assert_allclose(hist, expected, atol=4e-3)


def test_shock_mu0_only_on_boundary(shock_measures, shock_solution):
    mu0, _ = shock_measures
    inner = lagrangian.interior(mu0, 1.0)
    assert inner.total_variation() < 1e-12


def test_kinetic_residual_small(shock_solution, shock_measures):
    mu0, mu1 = shock_measures
    dic = lagrangian.default_dictionary(1.0, (-0.5, 1.5))
    assert lagrangian.kinetic_residual(shock_solution, lagrangian.interior(mu0, 1.0), mu1, dic) < 1e-5


def test_residual_detects_wrong_measure(shock_solution, shock_measures):
    mu0, mu1 = shock_measures
    dic = lagrangian.default_dictionary(1.0, (-0.5, 1.5))
    assert lagrangian.kinetic_residual(shock_solution, lagrangian.interior(mu0, 1.0), mu1.scale(0.5), dic) > 1e-3


def test_dictionary_is_deterministic_and_inside():
    a = lagrangian.default_dictionary(1.0, (0.0, 2.0))
    b = lagrangian.default_dictionary(1.0, (0.0, 2.0))
    assert a == b
    for tf in a:
        lo, hi = tf.t_support()
        assert 0 < lo and hi < 1
        assert tf.xc - tf.rx >= 0 and tf.xc + tf.rx <= 2


def test_front_phi_integral_static_front():
    class F:
        t_birth = np.array([0.0])
        t_death = np.array([1.0])
        x_birth = np.array([0.5])
        speed = np.array([0.0])
    tf = lagrangian.TestFunction(0.5, 0.25, 0.5, 0.2, (1.0,))
    _, val = lagrangian.front_phi_integrals(F, tf)
    # int (1 - s^2)^3 ds over [-1, 1] = 32/35, scaled by rt
    assert val[0] == pytest.approx(0.25 * 32 / 35, rel=1e-12)


def test_family_budget_equals_mu1_variation(shock_family, shock_measures):
    assert shock_family.budget() == pytest.approx(shock_measures[1].total_variation(), rel=1e-12)


def test_curve_json_round_trip(shock_solution):
    fam = lagrangian.build_hypograph_rep(shock_solution, 16)
    back = lagrangian.WeightedCurveFamily.from_json_lines(fam.to_json_lines(), T=1.0)
    np.testing.assert_array_equal(back.ptr, fam.ptr)
    np.testing.assert_array_equal(back.knots_t, fam.knots_t)
    np.testing.assert_array_equal(back.knots_v[back.ptr[1:] - 2], fam.knots_v[fam.ptr[1:] - 2])
    assert back.to_json_lines() == fam.to_json_lines()


def test_goodness_shock(shock_solution):
    fh = lagrangian.build_hypograph_rep(shock_solution, 32)
    fe = lagrangian.build_epigraph_rep(shock_solution, 32)
    rep = lagrangian.goodness_check(fh, fe, lagrangian.default_dictionary(1.0, (-0.5, 1.5)))
    assert rep.passed
    assert rep.simultaneity_defect < 1e-12


def test_reproduction_of_chi(rarefaction_solution):
    fam = lagrangian.build_hypograph_rep(rarefaction_solution, 64)
    occ, vol = lagrangian.reproduction_defect(fam, rarefaction_solution, (0.2, 0.8, 0.1, 0.6, 0.1, 0.7))
    assert abs(occ - vol) < 0.02 * vol


def test_good_curve_fraction(shock_solution, shock_family):
    assert lagrangian.good_curve_fraction(shock_family, shock_solution) == 1.0


def test_curve_builder_argument_checks(shock_solution):
    with pytest.raises(ValidationError, match="levels"):
        lagrangian.build_hypograph_rep(shock_solution, 1)
    with pytest.raises(ValidationError, match="mode"):
        lagrangian.build_hypograph_rep(shock_solution, 8, mode="other")


def test_single_curve_measures():
    c = lagrangian.Curve(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.1, 0.2]), np.array([0.8, 0.3, 0.3]), 2.0)
    mu0, mu1 = c.measures()
    assert mu0.total() == 0.0
    np.testing.assert_allclose(mu1.segments, [[0.5, 0.1, 0.3, 0.8, 2.0]])
    assert c.total_variation_v() == pytest.approx(0.5)
