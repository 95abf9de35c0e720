import numpy as np
import pytest

from kinlag.measures import AtomicMeasure3, MeasureTX


def _sample():
    atoms = [[0.1, 0.2, 0.5, 2.0], [0.3, 0.4, 0.25, -1.0]]
    segs = [[0.5, 0.5, 0.0, 0.5, 1.0], [0.7, 0.1, 0.8, 0.2, 3.0]]   # second one is flipped on input
    return AtomicMeasure3(np.array(atoms), np.array(segs))


def test_segment_orientation_normalised():
    m = _sample()
    np.testing.assert_allclose(m.segments[1], [0.7, 0.1, 0.2, 0.8, -3.0])


def test_totals():
    m = _sample()
    assert m.total() == pytest.approx(2.0 - 1.0 + 0.5 - 1.8)
    assert m.total_variation() == pytest.approx(2.0 + 1.0 + 0.5 + 1.8)
    assert (m.positive_part().total() - m.negative_part().total()) == pytest.approx(m.total())


def test_rows_round_trip():
    m = _sample()
    back = AtomicMeasure3.from_rows(m.to_rows())
    np.testing.assert_allclose(back.atoms, m.atoms)
    np.testing.assert_allclose(back.segments, m.segments, rtol=1e-15)


def test_restrict_clips_v():
    m = AtomicMeasure3(np.zeros((0, 4)), np.array([[0.5, 0.0, 0.0, 1.0, 2.0]]))
    r = m.restrict(v_range=(0.25, 0.5))
    assert r.total() == pytest.approx(0.5)


def test_v_density_of_uniform_segment():
    m = AtomicMeasure3(np.zeros((0, 4)), np.array([[0.5, 0.0, 0.0, 1.0, 2.0]]))
    np.testing.assert_allclose(m.v_density(np.linspace(0, 1, 5)), 2.0)


def test_integrate_derivative_mode_exact():
    m = AtomicMeasure3(np.zeros((0, 4)), np.array([[0.5, 0.0, 0.0, 1.0, 2.0]]))
    from numpy.polynomial import Polynomial
    rho = Polynomial([0, 0, 1.0])
    got = m.integrate(lambda t, x: np.ones_like(t), rho, rho.deriv(), mode="derivative")
    assert got == pytest.approx(2.0 * (1.0 - 0.0))


def test_consolidate_merges_duplicates():
    m = AtomicMeasure3(np.array([[0, 0, 0.5, 1.0], [0, 0, 0.5, -1.0], [0, 1, 0.5, 1.0]]))
    c = m.consolidate()
    assert c.atoms.shape[0] == 1 and c.total() == 1.0


def test_ball_mass_of_line():
    # line x = t/2 with density 1 per unit time; ball centred on it
    nu = MeasureTX(np.zeros((0, 3)), np.array([[0.0, 0.0, 1.0, 0.5, 1.0]]))
    r = 0.1
    assert nu.ball_mass(0.5, 0.25, r) == pytest.approx(2 * r / np.sqrt(1.25), rel=1e-12)
    assert nu.total() == pytest.approx(1.0)


def test_ball_mass_atoms():
    nu = MeasureTX(np.array([[0.0, 0.0, 1.0], [0.0, 0.3, 2.0]]))
    assert nu.ball_mass(0.0, 0.0, 0.2) == 1.0
    assert nu.ball_mass(0.0, 0.0, 0.3) == 3.0
