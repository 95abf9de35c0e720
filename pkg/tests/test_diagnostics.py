import numpy as np
import pytest

from kinlag import diagnostics, flux as fluxmod, lagrangian

RATIO = 2 / (12 * np.sqrt(1.25))    # nu_1 line density 1/12 per unit time, speed 1/2


def test_front_kinetic_density_burgers_shock():
    v = np.linspace(0, 1, 11)
    got = diagnostics.front_kinetic_density(lambda w: w, 1.0, 0.0, 0.5, v)
    np.testing.assert_allclose(got, v * (1 - v) / 2, atol=1e-15)


def test_exact_marginal_density_ratio(shock_solution):
    nu = diagnostics.exact_front_marginal(shock_solution, flux_df=lambda w: w)
    assert nu.total() == pytest.approx(1 / 12, rel=1e-12)
    np.testing.assert_allclose(diagnostics.density_ratio(nu, (0.5, 0.25), [0.2, 0.1, 0.05]), RATIO, rtol=1e-12)


def test_curve_marginal_density_ratio(shock_measures):
    nu = shock_measures[1].marginal_tx()
    r = diagnostics.density_ratio(nu, (0.5, 0.25), [0.2, 0.1])
    np.testing.assert_allclose(r, RATIO, rtol=0.02)


def test_density_ratio_off_front(shock_measures):
    nu = shock_measures[1].marginal_tx()
    assert diagnostics.density_ratio(nu, (0.5, 0.6), [0.1])[0] == 0.0


def test_concentration_shock_is_complete(shock_measures, shock_solution):
    nu = shock_measures[1].marginal_tx()
    frac = diagnostics.concentration_report(nu, shock_solution, [4 * shock_solution.front_tolerance()])
    assert frac[0] == 1.0


def test_jump_identity(shock_family, shock_solution, burgers):
    worst, table = diagnostics.jump_identity_check(shock_family, shock_solution, fluxmod.quadratic_entropy(burgers))
    assert table[0][2] == pytest.approx(-1 / 12, rel=1e-12)
    assert worst < 0.01 / 12


def test_vmo_rarefaction_vanishes(rarefaction_solution):
    osc, slope = diagnostics.vmo_test(rarefaction_solution, (0.5, 0.25), [0.1, 0.05, 0.025])
    assert slope > 0.8
    assert osc[-1] < osc[0]


def test_vmo_shock_persists(shock_solution):
    osc, slope = diagnostics.vmo_test(shock_solution, (0.5, 0.25), [0.1, 0.05, 0.025])
    assert abs(slope) < 0.05 and osc.min() > 0.5


def test_distance_to_fronts(shock_solution):
    d = diagnostics.distance_to_fronts(shock_solution, np.array([0.5, 1.0]), np.array([0.3, 0.5]))
    np.testing.assert_allclose(d, [0.05, 0.0], atol=1e-15)


def test_probe_radii():
    np.testing.assert_allclose(diagnostics.probe_radii(8.0, 3), [1.0, 0.5, 0.25])


def test_envelope_follows_shock(shock_solution):
    fh = lagrangian.build_hypograph_rep(shock_solution, 64)
    fe = lagrangian.build_epigraph_rep(shock_solution, 64)
    e = diagnostics.envelope_curve(fh, fe, (0.5, 0.25), (0.0, 1.0), 1.0)
    assert not e.degenerate
    assert e.hyp_violation == 0.0 and e.epi_violation == 0.0
    assert np.max(np.abs(e.envelope - e.times / 2)) < 0.05


def test_source_structure_shock(shock_measures, shock_solution):
    rep = diagnostics.source_structure_check(lagrangian.interior(shock_measures[0], 1.0), shock_solution)
    assert rep.passed


def test_three_alternative_near_shock(shock_family, shock_measures, shock_solution, burgers):
    n0, n1 = diagnostics.project_marginals(lagrangian.interior(shock_measures[0], 1.0), shock_measures[1])
    c = shock_family.curve(int(np.argmax(np.diff(shock_family.ptr))))
    res = diagnostics.three_alternative(c, c.knots_t[1], 0.1, n0, n1, shock_solution, burgers, 0.01)
    assert res.h == pytest.approx(0.1 / 3)
    assert any(res.holds)
