"""Exact front tracking for scalar conservation laws in one space dimension.

The flux is replaced by its piecewise-linear interpolant on a ``dv`` grid;
for that flux, Riemann problems with piecewise-constant data are solved
exactly by finitely many fronts (shocks and contact discontinuities), and the
whole evolution reduces to a finite sequence of front interactions processed
in time order.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .flux import FluxSpec

SHOCK, CONTACT = "shock", "contact"
KIND_CODES = {SHOCK: 0, CONTACT: 1, "rarefaction": 2}


class PiecewiseConstantFn:
    """``u(x) = values[i]`` on ``[breakpoints[i-1], breakpoints[i])``.

    ``values`` has one more entry than ``breakpoints``; the first and last
    entries are the constant extensions to ``-inf`` and ``+inf``.
    """

    def __init__(self, breakpoints, values, merge=True):
        bp = np.asarray(breakpoints, dtype=float).ravel()
        vals = np.asarray(values, dtype=float).ravel()
        if vals.size != bp.size + 1:
            raise ValidationError("data", "need len(values) == len(breakpoints) + 1")
        if bp.size and np.any(np.diff(bp) <= 0):
            raise ValidationError("data", "breakpoints must be strictly increasing")
        if merge and bp.size:
            keep = vals[1:] != vals[:-1]
            bp = bp[keep]
            vals = np.concatenate([vals[:1], vals[1:][keep]])
        self.breakpoints = bp
        self.values = vals

    @classmethod
    def from_cells(cls, edges, cell_values, left=None, right=None):
        """Build from cell values on ``edges``; outside the cells use the end values."""
        edges = np.asarray(edges, float)
        cv = np.asarray(cell_values, float)
        left = cv[0] if left is None else left
        right = cv[-1] if right is None else right
        return cls(edges, np.concatenate([[left], cv, [right]]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.values[np.searchsorted(self.breakpoints, x, side="right")]

    @property
    def left(self):
        return float(self.values[0])

    @property
    def right(self):
        return float(self.values[-1])

    def total_variation(self):
        return float(np.sum(np.abs(np.diff(self.values))))

    def integral(self, a, b, offset=0.0):
        """``int_a^b (u(x) - offset) dx``, exact."""
        pts = np.concatenate([[a], self.breakpoints[(self.breakpoints > a) & (self.breakpoints < b)], [b]])
        mids = 0.5 * (pts[:-1] + pts[1:])
        return float(np.sum((self(mids) - offset) * np.diff(pts)))

    def l1_distance(self, other, a, b):
        pts = np.unique(np.concatenate([[a, b], self.breakpoints, other.breakpoints]))
        pts = pts[(pts >= a) & (pts <= b)]
        mids = 0.5 * (pts[:-1] + pts[1:])
        return float(np.sum(np.abs(self(mids) - other(mids)) * np.diff(pts)))

    def to_table(self):
        return np.column_stack([self.breakpoints, self.values[1:]]), self.values[0]


# -- Riemann problems ---------------------------------------------------------

@dataclass
class Wave:
    kind: str            # "shock", "contact" or "rarefaction"
    u_left: float
    u_right: float
    speed_left: float
    speed_right: float

    @property
    def speed(self):
        return 0.5 * (self.speed_left + self.speed_right)


def _hull(vs, fs, lower):
    """Monotone-chain lower (convex) or upper (concave) hull; vs ascending."""
    out = []
    for v, f in zip(vs, fs):
        while len(out) >= 2:
            (v1, f1), (v2, f2) = out[-2], out[-1]
            cross = (v2 - v1) * (f - f1) - (f2 - f1) * (v - v1)
            if (lower and cross <= 0) or (not lower and cross >= 0):
                out.pop()
            else:
                break
        out.append((v, f))
    return out


def _envelope_points(flux, a, b, n_smooth):
    lo, hi = min(a, b), max(a, b)
    if flux.kind == "piecewise_linear":
        bp = flux.breakpoints
        inner = bp[(bp > lo) & (bp < hi)]
    else:
        inner = np.linspace(lo, hi, n_smooth)[1:-1]
    vs = np.concatenate([[lo], inner, [hi]])
    return vs, flux.f(vs)


def riemann_fronts(flux, ul, ur, n_smooth=2049):
    """Waves solving the Riemann problem ``(ul, ur)`` from the envelope of ``f``.

    For a piecewise-linear flux every hull edge is a front: a ``contact`` if
    it lies on the graph of ``f`` (one linear piece), else a ``shock``.  For
    smooth fluxes consecutive sampled hull edges that follow the graph are
    merged into ``rarefaction`` waves.  Waves are ordered left to right.
    """
    if ul == ur:
        return []
    vs, fs = _envelope_points(flux, ul, ur, n_smooth)
    increasing = ul < ur
    hull = _hull(vs, fs, lower=increasing)
    if not increasing:
        hull = hull[::-1]
    pl = flux.kind == "piecewise_linear"
    idx = {float(v): i for i, v in enumerate(vs)}
    waves = []
    for (v1, f1), (v2, f2) in zip(hull[:-1], hull[1:]):
        s = (f2 - f1) / (v2 - v1)
        adjacent = abs(idx[float(v1)] - idx[float(v2)]) == 1
        if pl:
            kind = CONTACT if adjacent else SHOCK
            waves.append(Wave(kind, float(v1), float(v2), s, s))
        else:
            if adjacent:
                waves.append(Wave("rarefaction", float(v1), float(v2), float(flux.df(v1)), float(flux.df(v2))))
            else:
                waves.append(Wave(SHOCK, float(v1), float(v2), s, s))
    if pl:
        return waves
    merged = []
    for w in waves:
        if merged and w.kind == "rarefaction" and merged[-1].kind == "rarefaction":
            m = merged[-1]
            merged[-1] = Wave("rarefaction", m.u_left, w.u_right, m.speed_left, w.speed_right)
        else:
            merged.append(w)
    return merged


def solve_riemann_scalar(flux, ul, ur):
    """Self-similar entropy solution of the Riemann problem.

    Returns a list of :class:`Wave` with nondecreasing speeds.  Shocks carry
    their Rankine-Hugoniot speed; rarefactions the characteristic speeds at
    their two ends.
    """
    for u in (ul, ur):
        if not flux.domain[0] - 1e-12 <= u <= flux.domain[1] + 1e-12:
            raise ValidationError("domain", f"state {u} outside flux domain {flux.domain}")
    waves = riemann_fronts(flux, float(ul), float(ur))
    if flux.kind == "piecewise_linear" or not waves:
        return waves
    # sharpen shock/rarefaction junctions for nonconvex smooth fluxes
    out = []
    for w in waves:
        if w.kind == SHOCK:
            s = (float(flux.f(w.u_right)) - float(flux.f(w.u_left))) / (w.u_right - w.u_left)
            w = Wave(SHOCK, w.u_left, w.u_right, s, s)
        out.append(w)
    return out


# -- front tracking -------------------------------------------------------------

@dataclass
class FrontTrackingSolution:
    """Exact front-tracking solution on ``[0, T]``.

    Front arrays are indexed by front id.  A front lives on
    ``[t_birth, t_death]`` and moves as ``x_birth + speed * (t - t_birth)``.
    ``origin_t/origin_x`` is the point of the Riemann problem that created the
    front (used to rebuild centred fans).
    """

    flux: FluxSpec                 # flux the fronts are exact for (piecewise linear)
    base_flux: FluxSpec            # the flux being approximated
    T: float
    dv: float
    t_birth: np.ndarray
    t_death: np.ndarray
    x_birth: np.ndarray
    speed: np.ndarray
    u_left: np.ndarray
    u_right: np.ndarray
    kind: np.ndarray               # codes, see KIND_CODES
    origin_t: np.ndarray
    origin_x: np.ndarray
    far_left: float
    far_right: float
    events: list = field(default_factory=list)
    initial: PiecewiseConstantFn = None

    @property
    def n_fronts(self):
        return self.t_birth.size

    def position(self, ids, t):
        return self.x_birth[ids] + self.speed[ids] * (t - self.t_birth[ids])

    def active(self, t):
        """Ids of fronts alive at time ``t``, sorted by position."""
        if t <= 0:
            mask = self.t_birth <= 0
        else:
            mask = (self.t_birth < t) & (self.t_death >= t)
        ids = np.nonzero(mask)[0]
        pos = self.position(ids, t)
        order = np.lexsort((self.speed[ids], pos))
        return ids[order]

    def snapshot(self, t):
        if not 0 <= t <= self.T + 1e-12:
            raise ValidationError("time", f"t={t} outside [0, {self.T}]")
        if t == 0 and self.initial is not None:
            return self.initial
        ids = self.active(t)
        pos = self.position(ids, t)
        if ids.size == 0:
            return PiecewiseConstantFn([], [self.far_left])
        vals = np.concatenate([[self.u_left[ids[0]]], self.u_right[ids]])
        # coincident positions (fans at their birth instant) collapse to one jump
        keep = np.concatenate([np.diff(pos) > 0, [True]])
        bp = pos[keep]
        vals = np.concatenate([[vals[0]], vals[1:][keep]])
        return PiecewiseConstantFn(bp, vals)

    def __call__(self, t, x):
        return self.snapshot(t)(x)

    def segments(self):
        """Front segments as arrays (t0, t1, x0, speed, u_left, u_right, kind)."""
        return (self.t_birth, self.t_death, self.x_birth, self.speed, self.u_left, self.u_right, self.kind)

    def mass(self, t, a, b):
        return self.snapshot(t).integral(a, b)

    def shock_ids(self):
        return np.nonzero(self.kind == KIND_CODES[SHOCK])[0]

    def front_tolerance(self):
        return 1e-9 * max(1.0, float(np.max(np.abs(self.x_birth))) if self.n_fronts else 1.0)


class _Front:
    __slots__ = ("id", "t0", "t1", "x0", "s", "ul", "ur", "kind", "ot", "ox", "prev", "next", "alive")

    def __init__(self, fid, t0, x0, s, ul, ur, kind, ot, ox):
        self.id, self.t0, self.x0, self.s = fid, t0, x0, s
        self.ul, self.ur, self.kind, self.ot, self.ox = ul, ur, kind, ot, ox
        self.prev = self.next = None
        self.t1 = None
        self.alive = True

    def x(self, t):
        return self.x0 + self.s * (t - self.t0)


def front_track(initial, flux, T, dv=1.0 / 256, max_fronts=200_000, time_tol=1e-12):
    """Front-tracking solution of ``u_t + f(u)_x = 0`` on ``[0, T]``.

    ``initial`` is a :class:`PiecewiseConstantFn`; ``flux`` is replaced by its
    piecewise-linear interpolant on a ``dv`` grid (unless already piecewise
    linear).  Fronts meeting at one point are resolved together by a single
    Riemann problem; simultaneous interactions are processed leftmost first.
    """
    if not dv > 0:
        raise ValidationError("width", "dv must be positive")
    if not T > 0:
        raise ValidationError("time", "T must be positive")
    pl = flux.linearized(dv)
    fronts = []          # all fronts ever created
    events = []
    heap = []
    counter = 0

    def new_front(t0, x0, w, ot, ox):
        f = _Front(len(fronts), t0, x0, w.speed, w.u_left, w.u_right, KIND_CODES[w.kind], ot, ox)
        fronts.append(f)
        if len(fronts) > max_fronts:
            raise NumericalError("complexity budget", f"more than {max_fronts} fronts")
        return f

    def schedule(a, b):
        nonlocal counter
        if a is None or b is None or a.s <= b.s:
            return
        tc = max(a.t0, b.t0)
        gap = b.x(tc) - a.x(tc)
        t_hit = tc + max(gap, 0.0) / (a.s - b.s)
        if t_hit <= T:
            counter += 1
            heapq.heappush(heap, (t_hit, a.x(t_hit), counter, a, b))

    # initial Riemann problems
    head = None
    tail = None
    bp, vals = initial.breakpoints, initial.values
    for i, x0 in enumerate(bp):
        for w in riemann_fronts(pl, float(vals[i]), float(vals[i + 1])):
            f = new_front(0.0, float(x0), w, 0.0, float(x0))
            if tail is None:
                head = f
            else:
                tail.next, f.prev = f, tail
            tail = f
    node = head
    while node is not None and node.next is not None:
        schedule(node, node.next)
        node = node.next

    while heap:
        t_hit, x_hit, _, a, b = heapq.heappop(heap)
        if not (a.alive and b.alive and a.next is b):
            continue
        scale = max(1.0, abs(x_hit))
        group = [a, b]
        left, right = a.prev, b.next
        while left is not None and abs(left.x(t_hit) - x_hit) <= 1e-11 * scale and left.t0 < t_hit - time_tol:
            group.insert(0, left)
            left = left.prev
        while right is not None and abs(right.x(t_hit) - x_hit) <= 1e-11 * scale and right.t0 < t_hit - time_tol:
            group.append(right)
            right = right.next
        for g in group:
            g.alive = False
            g.t1 = t_hit
        ul, ur = group[0].ul, group[-1].ur
        new = [new_front(t_hit, x_hit, w, t_hit, x_hit) for w in riemann_fronts(pl, ul, ur)]
        events.append({"time": t_hit, "position": x_hit, "incoming": [g.id for g in group],
                       "outgoing": [f.id for f in new]})
        # splice
        chain_prev = left
        for f in new:
            f.prev = chain_prev
            if chain_prev is not None:
                chain_prev.next = f
            chain_prev = f
        if chain_prev is not None:
            chain_prev.next = right
        if right is not None:
            right.prev = chain_prev
        if new:
            schedule(left, new[0])
            schedule(new[-1], right)
        else:
            schedule(left, right)

    n = len(fronts)
    t1 = np.array([T if f.alive else f.t1 for f in fronts], dtype=float) if n else np.zeros(0)
    arr = lambda attr: np.array([getattr(f, attr) for f in fronts], dtype=float) if n else np.zeros(0)
    return FrontTrackingSolution(
        flux=pl, base_flux=flux, T=float(T), dv=float(dv),
        t_birth=arr("t0"), t_death=t1, x_birth=arr("x0"), speed=arr("s"),
        u_left=arr("ul"), u_right=arr("ur"),
        kind=np.array([f.kind for f in fronts], dtype=np.int64) if n else np.zeros(0, np.int64),
        origin_t=arr("ot"), origin_x=arr("ox"),
        far_left=initial.left, far_right=initial.right, events=events, initial=initial)


def quantize(initial, dv, lo=0.0):
    """Round the values of a piecewise-constant function to the ``dv`` grid."""
    vals = lo + np.round((initial.values - lo) / dv) * dv
    return PiecewiseConstantFn(initial.breakpoints, vals)


def random_piecewise(n_pieces, rng, x_range=(0.0, 1.0), dv=None, lo=0.0, hi=1.0):
    """Random data with ``n_pieces`` cells of random length and value."""
    a, b = x_range
    cuts = np.sort(rng.uniform(a, b, n_pieces - 1))
    bp = np.concatenate([[a], cuts, [b]])
    vals = rng.uniform(lo, hi, n_pieces)
    if dv is not None:
        vals = lo + np.round((vals - lo) / dv) * dv
    return PiecewiseConstantFn(bp, np.concatenate([[vals[0]], vals, [vals[-1]]]))


# -- Oleinik diagnostics ----------------------------------------------------------

def fan_reconstruction(solution, t, x):
    """Evaluate ``u(t, x)`` with centred-fan staircases replaced by exact fans.

    Each increasing contact front born at ``(t0, x0)`` with values ``a < b`` is
    replaced by the continuous profile ``(f')^{-1}((x - x0)/(t - t0))`` on the
    interval where that profile lies in ``[a, b]``, clipped to the
    neighbouring fronts.
    """
    x = np.asarray(x, dtype=float)
    snap = solution.snapshot(t)
    u = snap(x).astype(float)
    ids = solution.active(t)
    if ids.size == 0:
        return u
    pos = solution.position(ids, t)
    base = solution.base_flux
    contact = KIND_CODES[CONTACT]
    for k, fid in enumerate(ids):
        if solution.kind[fid] != contact:
            continue
        a, b = solution.u_left[fid], solution.u_right[fid]
        if not a < b:
            continue
        tau = t - solution.origin_t[fid]
        if tau <= 0:
            continue
        x0 = solution.origin_x[fid]
        lo = x0 + float(base.df(a)) * tau
        hi = x0 + float(base.df(b)) * tau
        if k > 0:
            lo = max(lo, pos[k - 1])
        if k + 1 < ids.size:
            hi = min(hi, pos[k + 1])
        sel = (x >= lo) & (x <= hi)
        if not np.any(sel):
            continue
        speeds = (x[sel] - x0) / tau
        if base.poly is not None and base.poly.degree() == 2:
            c1, c2 = base.poly.coef[1], base.poly.coef[2]
            vals = (speeds - c1) / (2 * c2)
        else:
            vals = np.array([base.inverse_df(s, a, b) for s in speeds])
        u[sel] = np.clip(vals, a, b)
    return u


def oleinik_check(solution, t, probes):
    """Maximal forward difference quotient ``(u(y) - u(x)) / (y - x)`` over probe pairs."""
    if not t > 0:
        raise ValidationError("time", "t must be positive")
    probes = np.sort(np.asarray(probes, dtype=float))
    u = fan_reconstruction(solution, t, probes)
    best = -np.inf
    # all pairs, blocked to bound memory
    n = probes.size
    for i0 in range(0, n, 512):
        xi = probes[i0:i0 + 512, None]
        ui = u[i0:i0 + 512, None]
        dx = probes[None, :] - xi
        du = u[None, :] - ui
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dx > 0, du / np.where(dx > 0, dx, 1.0), -np.inf)
        best = max(best, float(np.max(q)))
    return best
