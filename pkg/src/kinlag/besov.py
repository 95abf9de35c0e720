"""Slab fronts ``a``/``b`` built from curve families, and Besov-type seminorms.

``a(t, .)`` is the largest level among hypograph curves that have been alive
through the whole slab ``[t - dt, t]`` and sit in a given x-cell at time ``t``;
``b`` is the analogous smallest epigraph level.  For entropy solutions both
track ``u(t, .)`` to within one level spacing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scalar import PiecewiseConstantFn


def _slab_levels(family, t, dt, x_edges, reducer, empty):
    t0, t1, x0, x1, v, w, cid = family.plateaus()
    ts, te = family.t_start, family.t_end
    alive = (ts[cid] <= t - dt + 1e-14) & (te[cid] >= t - 1e-14)
    # plateau containing t (the last one when a curve ends exactly at t)
    hit = alive & (t0 <= t) & ((t < t1) | ((t1 == te[cid]) & (t1 >= t) & (t0 < t1)))
    frac = np.where(t1[hit] > t0[hit], (t - t0[hit]) / np.where(t1[hit] > t0[hit], t1[hit] - t0[hit], 1.0), 0.0)
    x = x0[hit] + frac * (x1[hit] - x0[hit])
    lev = v[hit]
    nx = x_edges.size - 1
    cell = np.searchsorted(x_edges, x, side="right") - 1
    ok = (cell >= 0) & (cell < nx)
    out = np.full(nx, empty, float)
    reducer.at(out, cell[ok], lev[ok])
    return out


def ab_fronts(family_h, family_e, t, dt, window, n_x=1024):
    """Piecewise-constant ``(a, b)`` on ``n_x`` cells of ``window`` at time ``t``.

    Cells must be at least as wide as the curve spacing of the families,
    otherwise empty cells fall back to the domain bounds.  Raises ``slab``
    when ``dt`` is not in ``(0, t)``.
    """
    if not (0 < dt < t):
        raise ValidationError("slab", f"need 0 < dt < t, got dt={dt}, t={t}")
    edges = np.linspace(window[0], window[1], n_x + 1)
    lo, hi = _domain(family_h, family_e)
    a = _slab_levels(family_h, t, dt, edges, np.maximum, lo)
    b = _slab_levels(family_e, t, dt, edges, np.minimum, hi)
    return PiecewiseConstantFn.from_cells(edges, a), PiecewiseConstantFn.from_cells(edges, b)


def _domain(fh, fe):
    vs = np.concatenate([fh.knots_v, fe.knots_v])
    if vs.size == 0:
        return 0.0, 1.0
    return float(np.floor(vs.min())), float(np.ceil(vs.max()))


def _pcf_diff_integral(f, g, h, window, power=1.0, positive=False):
    """``int_window |f(x + h) - g(x)|^p dx`` exactly for piecewise-constant f, g."""
    a, b = window
    bp = np.concatenate([[a, b], f.breakpoints - h, g.breakpoints])
    bp = np.unique(bp[(bp >= a) & (bp <= b)])
    mid = 0.5 * (bp[:-1] + bp[1:])
    d = f(mid + h) - g(mid)
    if positive:
        d = np.maximum(d, 0.0)
    return float(np.sum(np.abs(d) ** power * np.diff(bp)))


def oleinik_gap(a, b, h_grid, dt, window, source_mass=0.0):
    """Ratios ``int (a(x+h) - b(x))^+ dx / (h/dt + source_mass)`` over ``h_grid``.

    Returns ``(positive_ratio, absolute_ratio)`` arrays; the second uses the
    absolute value of the difference.
    """
    h_grid = np.asarray(h_grid, float)
    pos = np.array([_pcf_diff_integral(a, b, h, window, positive=True) for h in h_grid])
    ab = np.array([_pcf_diff_integral(a, b, h, window) for h in h_grid])
    den = h_grid / dt + source_mass
    return pos / den, ab / den


def default_h_grid(dx, window, n=20):
    return np.geomspace(dx, 0.5 * (window[1] - window[0]), n)


def besov_seminorm(u, alpha, window, p=1.0, h_grid=None, dx=1.0 / 1024, n_quad=4096):
    """``sup_h h^{-alpha p} int_window |u(x+h) - u(x)|^p dx`` over a geometric h-grid.

    Exact for :class:`PiecewiseConstantFn`; callables use a midpoint rule with
    ``n_quad`` nodes.  Returns ``(value, h_grid, profile)``.
    """
    if not (0 < alpha < 1):
        raise ValidationError("alpha", f"smoothness must lie in (0, 1), got {alpha}")
    if h_grid is None:
        h_grid = default_h_grid(dx, window)
    h_grid = np.asarray(h_grid, float)
    if isinstance(u, PiecewiseConstantFn):
        vals = np.array([_pcf_diff_integral(u, u, h, window, power=p) for h in h_grid])
    else:
        a, b = window
        xm = a + (np.arange(n_quad) + 0.5) * (b - a) / n_quad
        ux = np.asarray(u(xm), float)
        vals = np.array([np.sum(np.abs(np.asarray(u(xm + h), float) - ux) ** p) * (b - a) / n_quad for h in h_grid])
    prof = vals / h_grid ** (alpha * p)
    return float(prof.max()), h_grid, prof


@dataclass
class BesovReport:
    deltas: np.ndarray
    integrals: np.ndarray
    ratios: np.ndarray          # integral * min(delta, 1)
    exponent: float             # slope of log(integral) against log(delta)
    spread: float               # max/min of ratios

    def table(self):
        return np.column_stack([self.deltas, self.integrals, self.ratios])


def seminorm_in_time(solution, times, alpha, window, p=1.0, h_grid=None):
    return np.array([besov_seminorm(solution.snapshot(t), alpha, window, p, h_grid)[0] for t in times])


def besov_time_scaling(solution, deltas, alpha=0.5, window=(0.25, 0.75), p=1.0, T=None, n_t=48, h_grid=None):
    """``int_delta^T ||u(t)|| dt`` for each delta, with the scaling fit.

    The time integral uses the trapezoid rule in ``log t`` on ``n_t`` nodes
    per delta; all deltas share the node set above the largest one.
    """
    deltas = np.sort(np.asarray(deltas, float))
    T = solution.T if T is None else T
    if deltas[0] <= 0 or deltas[-1] >= T:
        raise ValidationError("delta", "deltas must lie in (0, T)")
    nodes = np.unique(np.concatenate([np.geomspace(d, T, n_t) for d in deltas]))
    norms = seminorm_in_time(solution, nodes, alpha, window, p, h_grid)
    ints = []
    for d in deltas:
        m = nodes >= d
        ints.append(np.trapezoid(norms[m] * nodes[m], np.log(nodes[m])))
    ints = np.array(ints)
    ratios = ints * np.minimum(deltas, 1.0)
    slope = float(np.polyfit(np.log(deltas), np.log(ints), 1)[0])
    return BesovReport(deltas, ints, ratios, slope, float(ratios.max() / ratios.min()))


def sawtooth(n_teeth, steps_per_tooth=16, x_range=(0.0, 1.0), lo=0.0, hi=1.0):
    """Rising staircase teeth with a drop at the end of each tooth, zero outside."""
    a, b = x_range
    width = (b - a) / n_teeth
    edges = a + width * np.arange(n_teeth)[:, None] + width * np.arange(steps_per_tooth)[None, :] / steps_per_tooth
    levels = lo + (hi - lo) * (np.arange(steps_per_tooth) + 0.5) / steps_per_tooth
    vals = np.tile(levels, n_teeth)
    bps = np.concatenate([edges.ravel(), [b]])
    return PiecewiseConstantFn(bps, np.concatenate([[lo], vals, [lo]]))
