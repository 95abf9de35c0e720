"""Scalar fluxes, entropy pairs and nonlinearity diagnostics.

A :class:`FluxSpec` bundles vectorised evaluators for ``f``, ``f'`` and
``f''`` on a state interval (normally ``[0, 1]``).  The remaining functions
measure how nonlinear a flux is: the ``h^{+/-}`` nondegeneracy functionals,
the weak-genuine-nonlinearity test and the decomposition of the state domain
into intervals of strict convexity / concavity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

from .errors import ValidationError

KINDS = ("burgers", "polynomial", "piecewise_linear", "sampled")


@dataclass(frozen=True, eq=False)
class FluxSpec:
    """A scalar flux on a closed state interval.

    ``kind`` is one of ``burgers``, ``polynomial`` (includes cubic and affine
    fluxes), ``piecewise_linear`` (breakpoint table) or ``sampled`` (C^2
    cubic spline through tabulated values).  Polynomial fluxes are analytic,
    so their evaluators are valid outside ``domain`` as well (``extendable``).
    """

    kind: str
    domain: tuple = (0.0, 1.0)
    poly: Optional[Polynomial] = None
    breakpoints: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    name: str = ""
    _spline: Optional[CubicSpline] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError("flux", f"unknown kind {self.kind!r}")
        lo, hi = self.domain
        if not hi > lo:
            raise ValidationError("flux", "empty domain")
        if self.kind == "piecewise_linear":
            bp = np.asarray(self.breakpoints, dtype=float)
            if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
                raise ValidationError("flux", "breakpoints must be strictly increasing")
            if bp[0] > lo + 1e-14 or bp[-1] < hi - 1e-14:
                raise ValidationError("flux", "breakpoints must span the domain")

    # -- evaluators -----------------------------------------------------
    def f(self, v):
        v = np.asarray(v, dtype=float)
        if self.poly is not None:
            return self.poly(v)
        if self.kind == "piecewise_linear":
            return _pl_eval(self.breakpoints, self.values, v)
        return self._spline(v)

    def df(self, v):
        v = np.asarray(v, dtype=float)
        if self.poly is not None:
            return self.poly.deriv(1)(v)
        if self.kind == "piecewise_linear":
            slopes = np.diff(self.values) / np.diff(self.breakpoints)
            idx = np.clip(np.searchsorted(self.breakpoints, v, side="right") - 1, 0, slopes.size - 1)
            return slopes[idx]
        return self._spline(v, 1)

    def d2f(self, v):
        v = np.asarray(v, dtype=float)
        if self.poly is not None:
            return self.poly.deriv(2)(v)
        if self.kind == "piecewise_linear":
            return np.zeros_like(v)
        return self._spline(v, 2)

    @property
    def extendable(self):
        return self.poly is not None

    @property
    def is_smooth(self):
        return self.kind != "piecewise_linear"

    def max_speed(self, lo=None, hi=None, n=2049):
        lo = self.domain[0] if lo is None else lo
        hi = self.domain[1] if hi is None else hi
        if self.kind == "piecewise_linear":
            mask = (self.breakpoints[1:] > lo) & (self.breakpoints[:-1] < hi)
            slopes = np.diff(self.values) / np.diff(self.breakpoints)
            return float(np.max(np.abs(slopes[mask])))
        return float(np.max(np.abs(self.df(np.linspace(lo, hi, n)))))

    def linearized(self, dv):
        """Piecewise-linear interpolant on the nodes ``lo + k*dv``."""
        if dv <= 0:
            raise ValidationError("width", "rarefaction step must be positive")
        if self.kind == "piecewise_linear":
            return self
        lo, hi = self.domain
        n = int(round((hi - lo) / dv))
        if not np.isclose(lo + n * dv, hi, rtol=0, atol=1e-12):
            raise ValidationError("width", "dv must divide the state domain")
        nodes = lo + dv * np.arange(n + 1)
        nodes[-1] = hi
        return FluxSpec("piecewise_linear", self.domain, breakpoints=nodes, values=self.f(nodes),
                        name=f"{self.name or self.kind}~pl{n}")

    def inverse_df(self, s, lo, hi):
        """Solve ``f'(v) = s`` on ``[lo, hi]`` assuming ``f'`` monotone there (clipped)."""
        a, b = float(self.df(lo)), float(self.df(hi))
        if (s - a) * (s - b) >= 0:
            return lo if abs(s - a) <= abs(s - b) else hi
        return optimize.brentq(lambda v: float(self.df(v)) - s, lo, hi, xtol=1e-15, rtol=4e-16)

    def to_config(self):
        if self.kind == "burgers":
            return {"name": "burgers"}
        if self.kind == "polynomial":
            return {"name": "polynomial", "coefficients": [float(c) for c in self.poly.coef],
                    "domain": list(self.domain)}
        if self.kind == "piecewise_linear":
            return {"name": "piecewise_linear",
                    "table": [[float(a), float(b)] for a, b in zip(self.breakpoints, self.values)]}
        return {"name": "sampled", "table": [[float(a), float(b)] for a, b in
                                             zip(self._spline.x, self._spline(self._spline.x))]}


def _pl_eval(bp, vals, v):
    slopes = np.diff(vals) / np.diff(bp)
    idx = np.clip(np.searchsorted(bp, v, side="right") - 1, 0, slopes.size - 1)
    return vals[idx] + slopes[idx] * (v - bp[idx])


# -- constructors ---------------------------------------------------------

def burgers(domain=(0.0, 1.0)):
    return FluxSpec("burgers", tuple(domain), poly=Polynomial([0.0, 0.0, 0.5]), name="burgers")


def polynomial(coefficients, domain=(0.0, 1.0), name="polynomial"):
    """Polynomial flux, coefficients in increasing degree order."""
    return FluxSpec("polynomial", tuple(domain), poly=Polynomial(np.asarray(coefficients, float)), name=name)


def affine(c, domain=(0.0, 1.0)):
    return polynomial([0.0, c], domain, name="affine")


def cubic(domain=(0.0, 1.0)):
    return polynomial([0.0, 0.0, 0.0, 1.0], domain, name="cubic")


def piecewise_linear(table, domain=None):
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2:
        raise ValidationError("flux", "breakpoint table must be a list of (v, f(v)) pairs")
    bp, vals = table[:, 0].copy(), table[:, 1].copy()
    dom = (bp[0], bp[-1]) if domain is None else tuple(domain)
    return FluxSpec("piecewise_linear", dom, breakpoints=bp, values=vals, name="piecewise_linear")


def sampled(v, fvals, name="sampled"):
    v = np.asarray(v, dtype=float)
    if np.any(np.diff(v) <= 0):
        raise ValidationError("flux", "sample points must be strictly increasing")
    spline = CubicSpline(v, np.asarray(fvals, dtype=float), bc_type="natural")
    return FluxSpec("sampled", (float(v[0]), float(v[-1])), name=name, _spline=spline)


def from_config(cfg):
    """Build a flux from a scenario ``flux`` block (name + parameters or table)."""
    if isinstance(cfg, str):
        cfg = {"name": cfg}
    name = cfg.get("name")
    domain = tuple(cfg.get("domain", (0.0, 1.0)))
    if name == "burgers":
        return burgers(domain)
    if name == "cubic":
        return cubic(domain)
    if name == "affine":
        return affine(float(cfg.get("c", 1.0)), domain)
    need = {"polynomial": "coefficients", "piecewise_linear": "table", "sampled": "table"}.get(name)
    if need is not None and cfg.get(need) is None:
        raise ValidationError("flux", f"flux {name!r} needs flux.{need}")
    if name == "polynomial":
        return polynomial(cfg["coefficients"], domain)
    if name == "piecewise_linear":
        return piecewise_linear(cfg["table"])
    if name == "sampled":
        t = np.asarray(cfg["table"], dtype=float)
        return sampled(t[:, 0], t[:, 1])
    raise ValidationError("flux", f"unknown flux name {name!r}")


# -- entropy pairs --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EntropyPair:
    eta: Callable
    deta: Callable
    d2eta: Optional[Callable]
    flux: FluxSpec

    def q(self, v):
        """Entropy flux ``q(v) = int_0^v f'(s) eta'(s) ds`` (adaptive quadrature)."""
        v = np.atleast_1d(np.asarray(v, dtype=float))
        order = np.argsort(v)
        pts = np.concatenate([[0.0], v[order]])
        integrand = lambda s: float(self.flux.df(s)) * float(self.deta(s))
        pieces = np.array([integrate.quad(integrand, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
                           for a, b in zip(pts[:-1], pts[1:])])
        out = np.empty_like(v)
        out[order] = np.cumsum(pieces)
        return out

    def dq(self, v):
        return self.flux.df(v) * self.deta(v)


def entropy_flux(flux, eta, deta, d2eta=None, domain=None):
    """Pair an entropy ``eta`` with its flux for ``flux``.

    ``domain`` is the interval on which ``eta`` is defined; it must contain the
    flux domain.
    """
    if domain is not None:
        lo, hi = domain
        if lo > flux.domain[0] or hi < flux.domain[1]:
            raise ValidationError("domain", f"entropy defined on {domain}, flux on {flux.domain}")
    return EntropyPair(eta, deta, d2eta, flux)


def identity_entropy(flux):
    return EntropyPair(lambda v: np.asarray(v, float), lambda v: np.ones_like(np.asarray(v, float)),
                       lambda v: np.zeros_like(np.asarray(v, float)), flux)


def quadratic_entropy(flux):
    return EntropyPair(lambda v: 0.5 * np.asarray(v, float) ** 2, lambda v: np.asarray(v, float),
                       lambda v: np.ones_like(np.asarray(v, float)), flux)


# -- nondegeneracy functional h^{+/-} ----------------------------------------

def _level_measure_poly(dpoly, center, h, a, b):
    """Exact measure of {v in (a,b): |dpoly(v) - center| >= 2h} for polynomial dpoly."""
    cuts = [a, b]
    for level in (center + 2 * h, center - 2 * h):
        roots = (dpoly - level).roots()
        for r in np.atleast_1d(roots):
            if abs(r.imag) < 1e-12 and a < r.real < b:
                cuts.append(r.real)
    cuts = np.unique(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    keep = np.abs(dpoly(mids) - center) >= 2 * h
    return float(np.sum(np.diff(cuts)[keep]))


def _level_measure_grid(flux, center, h, a, b, n=10_000):
    edges = np.linspace(a, b, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return float(np.sum(np.abs(flux.df(mids) - center) >= 2 * h)) * (b - a) / n


def nondegeneracy_h(flux, vbar, delta, side):
    """Largest ``h`` with ``|(v-window) ∩ {|f'(vbar)-f'(v)| >= 2h}| >= h``.

    The window is ``(vbar-delta, vbar)`` for ``side="minus"`` and
    ``(vbar, vbar+delta)`` for ``side="plus"``.  Returns 0 when no positive
    ``h`` qualifies.
    """
    if not delta > 0:
        raise ValidationError("width", "delta must be positive")
    if side not in ("minus", "plus"):
        raise ValidationError("side", f"side must be 'minus' or 'plus', got {side!r}")
    a, b = (vbar - delta, vbar) if side == "minus" else (vbar, vbar + delta)
    if not flux.extendable and (a < flux.domain[0] - 1e-14 or b > flux.domain[1] + 1e-14):
        raise ValidationError("domain", f"window ({a}, {b}) leaves flux domain {flux.domain}")
    center = float(flux.df(vbar))
    if flux.poly is not None:
        dpoly = flux.poly.deriv(1)
        measure = lambda h: _level_measure_poly(dpoly, center, h, a, b)
    else:
        measure = lambda h: _level_measure_grid(flux, center, h, a, b)

    lo, hi = 0.0, delta
    if measure(hi) >= hi:
        return hi
    # m(h) - h is strictly decreasing; bisect on the sign of m(h) >= h.
    if measure(delta * 1e-14) < delta * 1e-14:
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if measure(mid) >= mid:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * delta:
            break
    return lo


# -- weak genuine nonlinearity ---------------------------------------------

@dataclass
class WGNReport:
    passed: bool
    worst_measure: float
    worst_direction: tuple
    cell: float


def wgn_test(flux, direction_samples=64, n_grid=10_000, cell_tol=2.0):
    """Estimate the measure of ``{v : tau + xi f'(v) = 0}`` over sampled directions.

    Besides ``direction_samples`` uniformly spaced directions on the unit
    circle, the directions annihilating each flat run of ``f'`` are added,
    since a plateau is only seen by the direction aligned with it.
    """
    if direction_samples < 8:
        raise ValidationError("samples", "need at least 8 directions")
    lo, hi = flux.domain
    edges = np.linspace(lo, hi, n_grid + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    cell = (hi - lo) / n_grid
    d = flux.df(mids)
    scale = max(1.0, float(np.max(np.abs(d))))
    flat_tol = 1e-9 * scale

    thetas = np.pi * np.arange(direction_samples) / direction_samples
    dirs = [(np.cos(th), np.sin(th)) for th in thetas]
    # plateau directions: xi = -1, tau = c, normalised
    same = np.abs(np.diff(d)) <= flat_tol
    if np.any(same):
        for c in np.unique(np.round(d[:-1][same], 12)):
            nrm = np.hypot(1.0, c)
            dirs.append((-1.0 / nrm, c / nrm))

    worst, worst_dir = -1.0, dirs[0]
    for xi, tau in dirs:
        g = tau + xi * d
        meas = float(np.sum(np.abs(g) <= flat_tol)) * cell
        if meas > worst:
            worst, worst_dir = meas, (float(xi), float(tau))
    return WGNReport(worst <= cell_tol * cell, worst, worst_dir, cell)


# -- convexity decomposition ----------------------------------------------

@dataclass
class ConvexityDecomposition:
    intervals: list
    signs: list
    residual: list
    domain: tuple

    def locate(self, v):
        for k, (a, b) in enumerate(self.intervals):
            if a < v < b:
                return k
        return None


def convexity_intervals(flux, tol=None, n_grid=10_000):
    """Maximal open intervals on which ``f''`` has a constant nonzero sign."""
    lo, hi = flux.domain
    grid = np.linspace(lo, hi, n_grid + 1)
    d2 = flux.d2f(grid)
    if tol is None:
        tol = 1e-9 * float(np.max(np.abs(d2))) if np.any(d2) else 0.0
    sgn = np.where(d2 > tol, 1, np.where(d2 < -tol, -1, 0))

    def refine(i, target):
        # boundary between grid[i] and grid[i+1]; locate |f''| = tol crossing
        a, b = grid[i], grid[i + 1]
        g = lambda v: abs(float(flux.d2f(v))) - tol
        if g(a) * g(b) < 0:
            return optimize.brentq(g, a, b, xtol=1e-15)
        return a if target == "start" else b

    intervals, signs = [], []
    i = 0
    n = grid.size
    while i < n:
        if sgn[i] == 0:
            i += 1
            continue
        s = sgn[i]
        j = i
        while j + 1 < n and sgn[j + 1] == s:
            j += 1
        a = grid[i] if i == 0 else refine(i - 1, "start")
        b = grid[j] if j == n - 1 else refine(j, "end")
        intervals.append((float(a), float(b)))
        signs.append("+" if s > 0 else "-")
        i = j + 1
    residual = []
    cursor = lo
    for a, b in intervals:
        if a > cursor:
            residual.append((cursor, a))
        cursor = b
    if cursor < hi:
        residual.append((cursor, hi))
    return ConvexityDecomposition(intervals, signs, residual, (lo, hi))
