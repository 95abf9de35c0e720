import numpy as np
import pytest

from kinlag import currents, scalar
from kinlag.errors import NumericalError


def _empty(shape):
    nt, nx, nv = shape
    return np.zeros((nt + 1, nx, nv)), np.zeros((nt, nx + 1, nv)), np.zeros((nt, nx, nv + 1))


def _grid(shape):
    return currents.GridSpec.uniform((0, 1), (0, 1), (0, 1), shape)


def test_circulation_is_all_cycle():
    shape = (1, 2, 2)
    Ft, Fx, Fv = _empty(shape)
    Fx[0, 1, 0] = 1.0      # (0,0) -> (1,0)
    Fv[0, 1, 1] = 1.0      # (1,0) -> (1,1)
    Fx[0, 1, 1] = -1.0     # (1,1) -> (0,1)
    Fv[0, 0, 1] = -1.0     # (0,1) -> (0,0)
    cur = currents.DiscreteCurrent(_grid(shape), Ft, Fx, Fv)
    assert np.all(cur.divergence() == 0)
    assert cur.mass() == pytest.approx(2 * 0.5 + 2 * 0.5)
    rep = currents.check_normal_acyclic(cur)
    assert not rep.acyclic
    assert rep.cycle_residual == pytest.approx(rep.mass)
    assert rep.boundary_mass == 0.0


def test_straight_column_is_one_path():
    shape = (4, 3, 2)
    Ft, Fx, Fv = _empty(shape)
    Ft[:, 1, 0] = 0.7
    cur = currents.DiscreteCurrent(_grid(shape), Ft, Fx, Fv)
    paths = currents.smirnov_decompose(cur)
    assert len(paths) == 1
    assert paths.weights[0] == pytest.approx(0.7)
    assert paths.lengths[0] == pytest.approx(1.0)
    rep = currents.verify_decomposition(cur, paths)
    assert rep.mass_error < 1e-15 and rep.boundary_error < 1e-15 and rep.cone_violations == 0
    curve = currents.reparametrize(paths, 0)
    np.testing.assert_allclose(curve.knots_x, 1.5 / 3)
    assert curve.weight == pytest.approx(0.7)


def test_two_sources_split():
    shape = (2, 2, 1)
    Ft, Fx, Fv = _empty(shape)
    Ft[0, 0, 0] = 1.0
    Ft[1, 0, 0] = 1.0
    Fx[1, 1, 0] = 1.0     # second slab moves right
    Ft[2, 1, 0] = 1.0
    Ft[:, 1, 0][:2] += 0.5
    Ft[2, 1, 0] += 0.5
    cur = currents.DiscreteCurrent(_grid(shape), Ft, Fx, Fv)
    assert np.max(np.abs(cur.divergence())) < 1e-15
    paths = currents.smirnov_decompose(cur)
    assert sorted(paths.weights.tolist()) == pytest.approx([0.5, 1.0])
    rep = currents.verify_decomposition(cur, paths)
    assert rep.boundary_error < 1e-15 and rep.cone_violations == 0


def test_shock_current_small_grid(shock_solution):
    grid = currents.GridSpec.uniform((0, 1), (-0.5, 1.0), (0, 1), (16, 16, 8))
    cur = currents.build_current(shock_solution, grid)
    assert np.max(np.abs(cur.divergence())) < 1e-14
    assert abs(cur.boundary_measure().total()) < 1e-13
    # v-flux is minus mu_1 and mu_1 >= 0 for this shock
    assert np.all(cur.Fv <= 1e-15)
    assert -cur.Fv.sum() * grid.spacing[2] == pytest.approx(1 / 12, rel=0.02)
    paths = currents.smirnov_decompose(cur)
    rep = currents.verify_decomposition(cur, paths)
    assert rep.mass_error < 1e-9 and rep.boundary_error < 1e-9 and rep.cone_violations == 0


def test_cell_sink_ends_paths():
    shape = (2, 1, 1)
    Ft, Fx, Fv = _empty(shape)
    Ft[0, 0, 0] = 1.0
    cur = currents.DiscreteCurrent(_grid(shape), Ft, Fx, Fv)
    # inflow stops in the first cell, which is then a sink
    paths = currents.smirnov_decompose(cur)
    assert paths.total_mass() == pytest.approx(0.25)      # half a t-spacing from the inflow face
    assert paths.sink[0, 0] == currents.E_DIV


def test_path_json_lines(shock_solution):
    grid = currents.GridSpec.uniform((0, 1), (-0.5, 1.0), (0, 1), (4, 4, 2))
    paths = currents.smirnov_decompose(currents.build_current(shock_solution, grid))
    lines = paths.to_json_lines().splitlines()
    assert len(lines) == len(paths)
    import json
    rec = json.loads(lines[0])
    assert set(rec) == {"weight", "cells", "source", "sink"}


def test_support_check(shock_solution):
    grid = currents.GridSpec.uniform((0, 1), (-0.5, 1.0), (0, 0.5), (4, 4, 2))
    with pytest.raises(Exception, match="support"):
        currents.build_current(shock_solution, grid)


def test_cell_source_starts_paths():
    shape = (2, 1, 1)
    Ft, Fx, Fv = _empty(shape)
    Ft[1:, 0, 0] = 2.0                  # created in the first cell, leaves through the top
    cur = currents.DiscreteCurrent(_grid(shape), Ft, Fx, Fv)
    paths = currents.smirnov_decompose(cur)
    assert len(paths) == 1 and paths.source[0, 0] == currents.E_DIV
    assert currents.verify_decomposition(cur, paths).boundary_error == 0.0


def test_consistent_current_never_stuck():
    shape = (1, 1, 2)
    Ft, Fx, Fv = _empty(shape)
    Ft[0, 0, 0] = 1.0
    Fv[0, 0, 1] = 1.0
    cur = currents.DiscreteCurrent(_grid(shape), Ft, Fx, Fv)
    # a consistent current never gets stuck: the v-move ends at a divergence sink
    paths = currents.smirnov_decompose(cur)
    assert paths.stuck_mass == 0.0
