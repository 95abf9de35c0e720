import os
import subprocess
import sys

import kinlag

SCRIPT = """
import numpy as np
from kinlag import backend, currents, diagnostics, flux, lagrangian, measures, scalar
f = flux.burgers()
u0 = scalar.random_piecewise(6, np.random.default_rng(2), dv=1 / 16)
sol = scalar.front_track(u0, f, 1.0, 1 / 16)
fam = lagrangian.build_hypograph_rep(sol, 16)
mu0, mu1 = lagrangian.aggregate_measures(fam)
shock = scalar.front_track(scalar.PiecewiseConstantFn([0.0], [1.0, 0.0]), f, 1.0, 1 / 16)
cur = currents.build_current(shock, currents.GridSpec.uniform((0, 1), (-0.5, 1.0), (0, 1), (6, 6, 4)))
paths = currents.smirnov_decompose(cur)
d = diagnostics.distance_to_fronts(sol, np.linspace(0.1, 0.9, 7), np.linspace(0, 1, 7))
print(backend())
print(fam.to_json_lines())
print(paths.to_json_lines())
print(repr(mu1.marginal_tx().ball_mass(0.5, 0.5, 0.3)), repr(d.tolist()))
"""


def _run(flag):
    env = dict(os.environ, KINLAG_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    first, rest = out.stdout.split("\n", 1)
    return first, rest


def test_backend_flag_is_read():
    assert kinlag.backend() in ("numba", "numpy")


def test_numpy_fallback_matches_numba():
    b0, out0 = _run("0")
    b1, out1 = _run("1")
    assert (b0, b1) == ("numba", "numpy")
    assert out0 == out1
