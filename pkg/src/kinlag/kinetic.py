"""Grid-based engines used as independent cross-checks of front tracking.

* :func:`transport_collapse_step` -- free streaming of the kinetic indicator
  followed by the collapse back to an indicator.
* :func:`godunov_solve` -- first-order Godunov scheme with the exact Riemann
  flux for convex polynomial fluxes.

Both inner loops are numba kernels (see :mod:`kinlag._accel`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import optional_njit
from .errors import ValidationError
from .scalar import PiecewiseConstantFn


@dataclass
class KineticDensity:
    """Cell values of ``chi(x, v) = 1[v <= u(x)]`` on a tensor grid.

    Columns are stored collapsed: full cells below ``u``, one partial cell,
    empty cells above.  ``chi[i, k]`` is the filled fraction of cell ``(i, k)``.
    """

    x_edges: np.ndarray
    v_edges: np.ndarray
    chi: np.ndarray

    @property
    def dx(self):
        return float(self.x_edges[1] - self.x_edges[0])

    @property
    def dv(self):
        return float(self.v_edges[1] - self.v_edges[0])

    @property
    def x_centers(self):
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:])

    @property
    def v_centers(self):
        return 0.5 * (self.v_edges[:-1] + self.v_edges[1:])

    def column_values(self):
        """``u_i = v_lo + sum_k chi[i, k] dv``."""
        return self.v_edges[0] + self.chi.sum(axis=1) * self.dv

    def as_function(self):
        return PiecewiseConstantFn.from_cells(self.x_edges, self.column_values())

    def copy(self):
        return KineticDensity(self.x_edges.copy(), self.v_edges.copy(), self.chi.copy())


def indicator_columns(u, v_edges):
    """Collapsed kinetic columns for cell values ``u``."""
    dv = v_edges[1] - v_edges[0]
    frac = (np.asarray(u, float)[:, None] - v_edges[None, :-1]) / dv
    return np.clip(frac, 0.0, 1.0)


def kinetic_density(u_fn, x_edges, v_edges):
    """Cell-averaged profile of ``u_fn`` (exact for piecewise constant) as a density."""
    x_edges = np.asarray(x_edges, float)
    v_edges = np.asarray(v_edges, float)
    u = np.array([u_fn.integral(a, b) / (b - a) for a, b in zip(x_edges[:-1], x_edges[1:])]) \
        if isinstance(u_fn, PiecewiseConstantFn) else np.asarray(u_fn(0.5 * (x_edges[:-1] + x_edges[1:])), float)
    return KineticDensity(x_edges, v_edges, indicator_columns(u, v_edges))


@optional_njit(cache=True)
def _stream_collapse(chi, shifts, v_lo, dv):
    nx, nv = chi.shape
    out = np.empty_like(chi)
    for k in range(nv):
        s = shifts[k]
        if s >= 0.0:
            for i in range(nx):
                up = chi[i - 1, k] if i > 0 else chi[0, k]
                out[i, k] = (1.0 - s) * chi[i, k] + s * up
        else:
            a = -s
            for i in range(nx):
                up = chi[i + 1, k] if i + 1 < nx else chi[nx - 1, k]
                out[i, k] = (1.0 - a) * chi[i, k] + a * up
    # collapse: keep column mass, rebuild the indicator of [v_lo, u_bar]
    for i in range(nx):
        mass = 0.0
        for k in range(nv):
            mass += out[i, k]
        for k in range(nv):
            fill = mass - k
            if fill >= 1.0:
                out[i, k] = 1.0
            elif fill > 0.0:
                out[i, k] = fill
            else:
                out[i, k] = 0.0
    return out


def transport_collapse_step(density, flux, dt):
    """One free-streaming + collapse step of length ``dt``.

    Each v-slab is shifted by ``f'(v) dt`` with conservative remapping onto
    the x-cells, then every column is collapsed to the indicator of
    ``[v_lo, u_bar]`` with the same mass.
    """
    if not dt > 0:
        raise ValidationError("time", "dt must be positive")
    shifts = flux.df(density.v_centers) * dt / density.dx
    if np.max(np.abs(shifts)) > 1.0 + 1e-12:
        raise ValidationError("cfl", f"dt*max|f'|/dx = {np.max(np.abs(shifts)):.4g} > 1")
    chi = _stream_collapse(np.ascontiguousarray(density.chi, dtype=np.float64),
                           np.ascontiguousarray(shifts, dtype=np.float64),
                           float(density.v_edges[0]), density.dv)
    return KineticDensity(density.x_edges, density.v_edges, chi)


def transport_collapse(density, flux, dt, n_steps):
    for _ in range(n_steps):
        density = transport_collapse_step(density, flux, dt)
    return density


# -- Godunov ----------------------------------------------------------------------

@optional_njit(cache=True)
def _poly(c, v):
    acc = 0.0
    for j in range(c.size - 1, -1, -1):
        acc = acc * v + c[j]
    return acc


@optional_njit(cache=True)
def _godunov_flux(c, vmin, ul, ur):
    # exact Riemann flux for a convex flux with minimiser vmin
    if ul <= ur:
        v = min(max(vmin, ul), ur)
        return _poly(c, v)
    return max(_poly(c, ul), _poly(c, ur))


@optional_njit(cache=True)
def _godunov_run(u, coef, vmin, dt, dx, n_steps):
    n = u.size
    fl = np.empty(n + 1)
    for _ in range(n_steps):
        fl[0] = _godunov_flux(coef, vmin, u[0], u[0])
        for i in range(1, n):
            fl[i] = _godunov_flux(coef, vmin, u[i - 1], u[i])
        fl[n] = _godunov_flux(coef, vmin, u[n - 1], u[n - 1])
        lam = dt / dx
        for i in range(n):
            u[i] -= lam * (fl[i + 1] - fl[i])
    return u


def godunov_solve(u0_fn, flux, x_range, n_cells, T, cfl=0.5, snapshots=()):
    """Godunov solution on ``n_cells`` cells with transmissive boundaries.

    Requires a convex polynomial flux.  Returns ``(x_edges, u_T, snaps)`` where
    ``snaps`` maps each requested time to the cell values at that time.
    """
    if flux.poly is None or np.any(flux.d2f(np.linspace(*flux.domain, 257)) < 0):
        raise ValidationError("flux", "godunov oracle needs a convex polynomial flux")
    a, b = x_range
    edges = np.linspace(a, b, n_cells + 1)
    dx = (b - a) / n_cells
    u = np.array([u0_fn.integral(l, r) / dx for l, r in zip(edges[:-1], edges[1:])])
    smax = flux.max_speed()
    dt_nom = cfl * dx / max(smax, 1e-12)
    coef = np.ascontiguousarray(flux.poly.coef, dtype=np.float64)
    grid = np.linspace(*flux.domain, 100_001)
    vmin = float(grid[np.argmin(flux.f(grid))])
    if flux.poly.degree() == 2:
        vmin = -coef[1] / (2 * coef[2])
    stops = sorted(set([float(s) for s in snapshots if 0 < s < T] + [float(T)]))
    snaps = {}
    t = 0.0
    for stop in stops:
        n = int(np.ceil((stop - t) / dt_nom - 1e-12))
        if n > 0:
            u = _godunov_run(u, coef, vmin, (stop - t) / n, dx, n)
        t = stop
        snaps[stop] = u.copy()
    return edges, u, snaps


def godunov_entropy_rate(u0_fn, flux, pair, x_range, n_cells, t0, t1):
    """Mean entropy production rate on ``[t0, t1]`` from a Godunov run.

    ``(E(t1) - E(t0)) / (t1 - t0) + q(u_right) - q(u_left)`` with
    ``E = int eta(u) dx``; the window must be wide enough that the far states
    sit at both ends for the whole run.
    """
    if not 0 < t0 < t1:
        raise ValidationError("time", "need 0 < t0 < t1")
    edges, u1, snaps = godunov_solve(u0_fn, flux, x_range, n_cells, t1, snapshots=[t0])
    dx = edges[1] - edges[0]
    u0 = snaps[t0]
    energy = lambda u: float(np.sum(pair.eta(u)) * dx)
    q = pair.q(np.array([u1[0], u1[-1]]))
    return (energy(u1) - energy(u0)) / (t1 - t0) + float(q[1] - q[0])
