"""Curve families representing the hypograph / epigraph of a front-tracked solution.

A curve at level ``v`` moves with speed ``f'(v)`` inside the region
``{v < u}``.  When it reaches a front that bounds this region it jumps to the
reflected level ``v*`` on the same side of the front, defined by
``f(v) - s v = f(v*) - s v*`` (``s`` the front speed).  This map preserves the
flux measure ``(f' - s) dv`` so weights are carried over unchanged.

Two modes:

* ``"entropy"`` -- every incoming level must have a reflection; a missing
  one raises ``reflection``.
* ``"quasi"`` -- unmatched incoming levels terminate and unmatched outgoing
  levels are fed by births along the front.  Starts and ends in the interior
  are the interior part of ``mu_0``.

The per-curve measures are ``mu_0 = w (delta_start - delta_end)`` and, for
every jump, a vertical segment of density ``+w`` (downward jump) or ``-w``
(upward jump) on ``[min, max]`` of the two levels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import Polynomial

from . import flux as fluxmod
from ._accel import optional_njit
from .errors import NumericalError, ValidationError
from .measures import AtomicMeasure3

END_T = 0
END_TERMINATED = 1
END_NO_REFLECTION = 2
END_STEP_LIMIT = 3
START_INITIAL = 0
START_BIRTH = 1


# -- curves -----------------------------------------------------------------------

@dataclass
class Curve:
    """``knots_t/x/v``: start, jumps, end.  ``knots_v[i]`` is the level on ``[t_i, t_{i+1})``."""

    knots_t: np.ndarray
    knots_x: np.ndarray
    knots_v: np.ndarray
    weight: float = 1.0

    @property
    def interval(self):
        return float(self.knots_t[0]), float(self.knots_t[-1])

    @property
    def jump_times(self):
        return self.knots_t[1:-1]

    def v_at(self, t):
        i = np.clip(np.searchsorted(self.knots_t, t, side="right") - 1, 0, self.knots_t.size - 2)
        return self.knots_v[i]

    def x_at(self, t):
        return np.interp(t, self.knots_t, self.knots_x)

    def total_variation_v(self):
        return float(np.sum(np.abs(np.diff(self.knots_v[:-1])))) if self.knots_v.size > 2 else 0.0

    def measures(self):
        return curve_measures(self, self.weight)

    def to_record(self):
        return {"interval": list(self.interval), "x_knots": [[float(t), float(x)] for t, x in zip(self.knots_t, self.knots_x)],
                "v_plateaus": [[float(t), float(v)] for t, v in zip(self.knots_t[:-1], self.knots_v[:-1])],
                "weight": float(self.weight)}


def curve_measures(curve, weight):
    """``(mu_0, mu_1)`` parts of a single curve as :class:`AtomicMeasure3`."""
    t, x, v = curve.knots_t, curve.knots_x, curve.knots_v
    mu0 = AtomicMeasure3(np.array([[t[0], x[0], v[0], weight], [t[-1], x[-1], v[-2] if v.size > 1 else v[0], -weight]]))
    segs = []
    for k in range(1, t.size - 1):
        before, after = v[k - 1], v[k]
        if before == after:
            continue
        sign = 1.0 if after < before else -1.0
        segs.append((t[k], x[k], min(before, after), max(before, after), sign * weight))
    return mu0, AtomicMeasure3(np.zeros((0, 4)), np.array(segs).reshape(-1, 5))


@dataclass
class WeightedCurveFamily:
    """Curves in CSR layout: curve ``i`` owns knots ``ptr[i]:ptr[i+1]``."""

    ptr: np.ndarray
    knots_t: np.ndarray
    knots_x: np.ndarray
    knots_v: np.ndarray
    knot_front: np.ndarray      # front id at each jump knot, -1 otherwise
    weight: np.ndarray
    start_kind: np.ndarray
    end_kind: np.ndarray
    side: str = "hypograph"
    T: float = 1.0
    dx: float = 0.0
    n_levels: int = 0

    def __len__(self):
        return self.weight.size

    @property
    def t_start(self):
        return self.knots_t[self.ptr[:-1]]

    @property
    def t_end(self):
        return self.knots_t[self.ptr[1:] - 1]

    def curve(self, i):
        a, b = self.ptr[i], self.ptr[i + 1]
        return Curve(self.knots_t[a:b], self.knots_x[a:b], self.knots_v[a:b], float(self.weight[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self.curve(i)

    def n_jumps(self):
        return int(np.sum(np.diff(self.ptr) - 2))

    def plateaus(self):
        """Arrays ``(t0, t1, x0, x1, v, weight, curve)`` for every plateau."""
        n = self.knots_t.size
        last = np.zeros(n, bool)
        last[self.ptr[1:] - 1] = True
        i0 = np.nonzero(~last)[0]
        cid = np.repeat(np.arange(len(self)), np.diff(self.ptr) - 1)
        return (self.knots_t[i0], self.knots_t[i0 + 1], self.knots_x[i0], self.knots_x[i0 + 1],
                self.knots_v[i0], self.weight[cid], cid)

    def jumps(self):
        """Arrays ``(t, x, v_before, v_after, weight, front)`` for every jump."""
        n = self.knots_t.size
        inner = np.ones(n, bool)
        inner[self.ptr[:-1]] = False
        inner[self.ptr[1:] - 1] = False
        idx = np.nonzero(inner)[0]
        cid = np.repeat(np.arange(len(self)), np.maximum(np.diff(self.ptr) - 2, 0))
        return (self.knots_t[idx], self.knots_x[idx], self.knots_v[idx - 1], self.knots_v[idx],
                self.weight[cid], self.knot_front[idx])

    def endpoints(self):
        """``(start, end)`` rows ``(t, x, v, weight)``."""
        s = self.ptr[:-1]
        e = self.ptr[1:] - 1
        start = np.column_stack([self.knots_t[s], self.knots_x[s], self.knots_v[s], self.weight])
        end = np.column_stack([self.knots_t[e], self.knots_x[e], self.knots_v[e - 1], self.weight])
        return start, end

    def budget(self):
        """``sum weight * TV(gamma^v)``."""
        t, x, vb, va, w, _ = self.jumps()
        return float(np.sum(w * np.abs(va - vb)))

    def to_json_lines(self):
        return "\n".join(json.dumps(c.to_record(), sort_keys=True) for c in self) + ("\n" if len(self) else "")

    @classmethod
    def from_json_lines(cls, text, side="hypograph", T=None):
        ptr, kt, kx, kv, w = [0], [], [], [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            xs = np.array(rec["x_knots"], float)
            vs = np.array(rec["v_plateaus"], float)
            kt.extend(xs[:, 0])
            kx.extend(xs[:, 1])
            kv.extend(list(vs[:, 1]) + [vs[-1, 1]])
            w.append(rec["weight"])
            ptr.append(len(kt))
        n = len(w)
        kt = np.array(kt, float)
        return cls(np.array(ptr, np.int64), kt, np.array(kx, float), np.array(kv, float),
                   np.full(kt.size, -1, np.int64), np.array(w, float), np.zeros(n, np.int64),
                   np.zeros(n, np.int64), side, float(T if T is not None else (kt.max() if kt.size else 0.0)))


# -- tracing kernel -----------------------------------------------------------------

@optional_njit(cache=True)
def _pl_speed(nv, nf, v):
    n = nv.size
    i = np.searchsorted(nv, v, side="right") - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    return (nf[i + 1] - nf[i]) / (nv[i + 1] - nv[i])


@optional_njit(cache=True)
def _speed(kind, nv, nf, qc, v):
    if kind == 0:
        return _pl_speed(nv, nf, v)
    return 2.0 * qc[2] * v + qc[1]


@optional_njit(cache=True)
def _reflect(kind, nv, nf, qc, v, s, a, b, from_left):
    """Reflected level on ``[a, b]`` or NaN."""
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    if kind == 1:
        vstar = (s - qc[1]) / qc[2] - v
        if vstar < a - tol or vstar > b + tol:
            return np.nan
        rel = 2.0 * qc[2] * vstar + qc[1] - s
        if (from_left and rel >= 0.0) or ((not from_left) and rel <= 0.0):
            return np.nan
        return min(max(vstar, a), b)
    # piecewise linear
    n = nv.size
    i = np.searchsorted(nv, v, side="right") - 1
    i = min(max(i, 0), n - 2)
    g_target = nf[i] + (nf[i + 1] - nf[i]) / (nv[i + 1] - nv[i]) * (v - nv[i]) - s * v
    best = np.nan
    bestd = np.inf
    k = np.searchsorted(nv, a, side="right") - 1
    k = min(max(k, 0), n - 2)
    while k < n - 1 and nv[k] < b:
        lo = max(nv[k], a)
        hi = min(nv[k + 1], b)
        if hi > lo:
            slope = (nf[k + 1] - nf[k]) / (nv[k + 1] - nv[k])
            gs = slope - s
            ok = gs < 0.0 if from_left else gs > 0.0
            if ok:
                glo = nf[k] + slope * (lo - nv[k]) - s * lo
                root = lo + (g_target - glo) / gs
                if root >= lo - tol and root <= hi + tol:
                    root = min(max(root, lo), hi)
                    d = abs(root - v)
                    if d < bestd:
                        bestd = d
                        best = root
        k += 1
    return best


@optional_njit(cache=True)
def _trace_kernel(st_t, st_x, st_v, st_f, tb, td, xb, sp, ul, ur, edges, bptr, bids,
                  T, kind, nv, nf, qc, quasi, max_steps):
    n = st_t.size
    cap = n * 4 + 16
    kt = np.empty(cap)
    kx = np.empty(cap)
    kv = np.empty(cap)
    kf = np.empty(cap, np.int64)
    ptr = np.empty(n + 1, np.int64)
    endc = np.zeros(n, np.int64)
    m = 0
    nb = edges.size - 1
    for c in range(n):
        ptr[c] = m
        t = st_t[c]
        x = st_x[c]
        v = st_v[c]
        if m + 2 >= cap:
            cap *= 2
            kt2 = np.empty(cap); kt2[:m] = kt[:m]; kt = kt2
            kx2 = np.empty(cap); kx2[:m] = kx[:m]; kx = kx2
            kv2 = np.empty(cap); kv2[:m] = kv[:m]; kv = kv2
            kf2 = np.empty(cap, np.int64); kf2[:m] = kf[:m]; kf = kf2
        kt[m] = t; kx[m] = x; kv[m] = v; kf[m] = st_f[c]
        m += 1
        steps = 0
        end_front = -1
        while True:
            cs = _speed(kind, nv, nf, qc, v)
            eps = 1e-13 * max(1.0, abs(t))
            best_t = T
            best_f = -1
            best_left = True
            band = np.searchsorted(edges, v, side="right") - 1
            if band >= 0 and band < nb:
                for idx in range(bptr[band], bptr[band + 1]):
                    f = bids[idx]
                    if tb[f] > best_t:
                        break           # band lists are sorted by birth time
                    if td[f] < t:
                        continue
                    s = sp[f]
                    if s == cs:
                        continue
                    th = (xb[f] - s * tb[f] - x + cs * t) / (cs - s)
                    if th <= t + eps or th >= best_t:
                        continue
                    if th < tb[f] - eps or th > td[f] + eps:
                        continue
                    from_left = cs > s
                    if from_left:
                        inside = v < ul[f] and v > ur[f]
                    else:
                        inside = v < ur[f] and v > ul[f]
                    if not inside:
                        continue
                    best_t = th
                    best_f = f
                    best_left = from_left
            if best_f < 0:
                x = x + cs * (T - t)
                t = T
                endc[c] = 0
                break
            x = x + cs * (best_t - t)
            t = best_t
            f = best_f
            a = min(ul[f], ur[f])
            b = max(ul[f], ur[f])
            vstar = _reflect(kind, nv, nf, qc, v, sp[f], a, b, best_left)
            if np.isnan(vstar):
                endc[c] = 1 if quasi else 2
                end_front = f
                break
            if m + 2 >= cap:
                cap *= 2
                kt2 = np.empty(cap); kt2[:m] = kt[:m]; kt = kt2
                kx2 = np.empty(cap); kx2[:m] = kx[:m]; kx = kx2
                kv2 = np.empty(cap); kv2[:m] = kv[:m]; kv = kv2
                kf2 = np.empty(cap, np.int64); kf2[:m] = kf[:m]; kf = kf2
            kt[m] = t; kx[m] = x; kv[m] = vstar; kf[m] = f
            m += 1
            v = vstar
            steps += 1
            if steps >= max_steps:
                endc[c] = 3
                break
        if m + 1 >= cap:
            cap *= 2
            kt2 = np.empty(cap); kt2[:m] = kt[:m]; kt = kt2
            kx2 = np.empty(cap); kx2[:m] = kx[:m]; kx = kx2
            kv2 = np.empty(cap); kv2[:m] = kv[:m]; kv = kv2
            kf2 = np.empty(cap, np.int64); kf2[:m] = kf[:m]; kf = kf2
        kt[m] = t; kx[m] = x; kv[m] = v; kf[m] = end_front
        m += 1
    ptr[n] = m
    return ptr, kt[:m].copy(), kx[:m].copy(), kv[:m].copy(), kf[:m].copy(), endc


def _band_index(sol):
    """CSR lists of fronts per value band, each list sorted by birth time."""
    lo = np.minimum(sol.u_left, sol.u_right)
    hi = np.maximum(sol.u_left, sol.u_right)
    keep = np.nonzero(hi > lo)[0]
    edges = np.unique(np.concatenate([lo[keep], hi[keep]])) if keep.size else np.array([0.0, 1.0])
    k0 = np.searchsorted(edges, lo[keep])
    k1 = np.searchsorted(edges, hi[keep])
    counts = np.zeros(edges.size, np.int64)
    ids_list = []
    band_list = []
    for f, a, b in zip(keep, k0, k1):
        band_list.append(np.arange(a, b))
        ids_list.append(np.full(b - a, f))
    if ids_list:
        bands = np.concatenate(band_list)
        ids = np.concatenate(ids_list)
    else:
        bands = np.zeros(0, np.int64)
        ids = np.zeros(0, np.int64)
    order = np.lexsort((ids, sol.t_birth[ids], bands))
    bands, ids = bands[order], ids[order]
    np.add.at(counts, bands, 1)
    bptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return edges.astype(float), bptr, ids.astype(np.int64)


# -- solution views ------------------------------------------------------------------

def _mirror_flux(flux, lo, hi):
    """``g(w) = -f(lo + hi - w)`` as a :class:`FluxSpec`."""
    if flux.kind == "piecewise_linear":
        bp = (lo + hi - flux.breakpoints)[::-1]
        vals = (-flux.values)[::-1]
        return fluxmod.piecewise_linear(np.column_stack([bp, vals]), domain=(lo, hi))
    if flux.poly is not None:
        g = -flux.poly(Polynomial([lo + hi, -1.0]))
        return fluxmod.polynomial(g.coef, domain=(lo, hi), name=f"mirror({flux.name})")
    grid = np.linspace(lo, hi, 4097)
    return fluxmod.sampled(grid, -flux.f(lo + hi - grid), name=f"mirror({flux.name})")


def mirror_solution(sol):
    """``u -> lo + hi - u`` with flux ``g(w) = -f(lo + hi - w)`` (the epigraph view)."""
    lo, hi = sol.base_flux.domain
    return replace(sol, flux=_mirror_flux(sol.flux, lo, hi), base_flux=_mirror_flux(sol.base_flux, lo, hi),
                   u_left=lo + hi - sol.u_left, u_right=lo + hi - sol.u_right,
                   far_left=lo + hi - sol.far_left, far_right=lo + hi - sol.far_right,
                   initial=None if sol.initial is None else type(sol.initial)(
                       sol.initial.breakpoints, lo + hi - sol.initial.values))


def _kernel_flux(flux, quasi):
    if quasi:
        if flux.poly is None or flux.poly.degree() != 2:
            raise ValidationError("flux", "quasi-entropy curves need a quadratic flux")
        qc = np.zeros(3)
        qc[:3] = flux.poly.coef[:3]
        return 1, np.zeros(2), np.zeros(2), qc
    if flux.kind != "piecewise_linear":
        raise ValidationError("flux", "entropy-mode curves need the piecewise-linear tracking flux")
    return 0, np.ascontiguousarray(flux.breakpoints, float), np.ascontiguousarray(flux.values, float), np.zeros(3)


def _levels(n_levels, lo, hi):
    dv = (hi - lo) / n_levels
    return lo + (np.arange(n_levels) + 0.5) * dv, dv


def _initial_starts(sol, n_levels, dx, x_range):
    lo, hi = sol.base_flux.domain
    levels, dvl = _levels(n_levels, lo, hi)
    if x_range is None:
        bp = sol.initial.breakpoints if sol.initial is not None and sol.initial.breakpoints.size else np.array([0.0])
        L = sol.base_flux.max_speed()
        x_range = (float(bp.min()) - L * sol.T - 2 * dx, float(bp.max()) + L * sol.T + 2 * dx)
    a, b = x_range
    # cells aligned with the pieces of the data so no tube straddles a jump
    inner = sol.initial.breakpoints if sol.initial is not None else np.zeros(0)
    cuts = np.unique(np.concatenate([[a], inner[(inner > a) & (inner < b)], [b]]))
    xs, widths = [], []
    for lo_x, hi_x in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(np.ceil((hi_x - lo_x) / dx - 1e-9)))
        h = (hi_x - lo_x) / n
        xs.append(lo_x + (np.arange(n) + 0.5) * h)
        widths.append(np.full(n, h))
    xs, widths = np.concatenate(xs), np.concatenate(widths)
    u0 = sol.initial(xs) if sol.initial is not None else sol.snapshot(0.0)(xs)
    # levels strictly below u0, one curve per (cell, level)
    counts = np.searchsorted(levels, u0, side="left")
    x_rep = np.repeat(xs, counts)
    w_rep = np.repeat(widths, counts) * dvl
    v_rep = np.concatenate([levels[:c] for c in counts]) if counts.sum() else np.zeros(0)
    return x_rep, v_rep, w_rep, levels, dvl


def _quasi_births(sol, flux, n_levels, dx):
    """Birth points along fronts for outgoing levels that receive no reflected curve."""
    lo_d, hi_d = flux.domain
    dvl = (hi_d - lo_d) / n_levels
    c2, c1 = flux.poly.coef[2], flux.poly.coef[1]
    rows = []
    for f in range(sol.n_fronts):
        a, b = sorted((sol.u_left[f], sol.u_right[f]))
        life = sol.t_death[f] - sol.t_birth[f]
        if not b > a or life <= 0:
            continue
        s = sol.speed[f]
        sonic = (s - c1) / (2 * c2)           # level moving with the front
        inside_left = sol.u_left[f] > sol.u_right[f]
        up = c2 > 0
        # outgoing: speed < s on the left side, speed > s on the right side
        out_below = (inside_left and up) or ((not inside_left) and not up)
        if out_below:
            outgoing = (a, min(b, sonic))
            incoming = (max(a, sonic), b)
        else:
            outgoing = (max(a, sonic), b)
            incoming = (a, min(b, sonic))
        if outgoing[1] <= outgoing[0]:
            continue
        if incoming[1] > incoming[0]:
            img = sorted((2 * sonic - incoming[0], 2 * sonic - incoming[1]))
        else:
            img = (np.inf, np.inf)
        pieces = []
        p, q = outgoing
        if img[0] > p:
            pieces.append((p, min(q, img[0])))
        if img[1] < q:
            pieces.append((max(p, img[1]), q))
        for p, q in pieces:
            if q - p <= 1e-14:
                continue
            k0 = int(np.floor((p - lo_d) / dvl))
            k1 = int(np.ceil((q - lo_d) / dvl))
            for k in range(k0, k1):
                pl, ql = max(p, lo_d + k * dvl), min(q, lo_d + (k + 1) * dvl)
                if ql <= pl:
                    continue
                lev = 0.5 * (pl + ql)
                rel = abs(2 * c2 * lev + c1 - s)
                if rel <= 0:
                    continue
                n = max(1, int(np.ceil(life * rel / dx)))
                ts = sol.t_birth[f] + (np.arange(n) + 0.5) * life / n
                wt = (life / n) * rel * (ql - pl)
                xs = sol.x_birth[f] + s * (ts - sol.t_birth[f])
                rows.append(np.column_stack([ts, xs, np.full(n, lev), np.full(n, wt), np.full(n, f)]))
    return np.vstack(rows) if rows else np.zeros((0, 5))


def build_hypograph_rep(solution, n_levels=256, dx=None, mode="entropy", x_range=None, max_steps=100_000):
    """Weighted curve family representing ``{v < u}`` for a front-tracked solution.

    Initial curves sit at level midpoints ``(j - 1/2)/N_v`` (on the flux domain)
    and at x-cell midpoints of spacing ``dx`` (default ``1/N_v``), each with
    weight ``dx * (domain length)/N_v``.
    """
    if n_levels < 2:
        raise ValidationError("levels", "need at least two levels")
    if mode not in ("entropy", "quasi"):
        raise ValidationError("mode", f"unknown mode {mode!r}")
    quasi = mode == "quasi"
    lo, hi = solution.base_flux.domain
    dx = (hi - lo) / n_levels if dx is None else float(dx)
    tracking_flux = solution.base_flux if quasi else solution.flux
    kind, nv, nf, qc = _kernel_flux(tracking_flux, quasi)
    x_rep, v_rep, w0, levels, dvl = _initial_starts(solution, n_levels, dx, x_range)
    st = [np.column_stack([np.zeros(x_rep.size), x_rep, v_rep, w0, np.full(x_rep.size, -1.0)])]
    if quasi:
        st.append(_quasi_births(solution, tracking_flux, n_levels, dx))
    st = np.vstack(st)
    start_kind = np.concatenate([np.zeros(x_rep.size, np.int64), np.ones(st.shape[0] - x_rep.size, np.int64)])
    edges, bptr, bids = _band_index(solution)
    ptr, kt, kx, kv, kf, endc = _trace_kernel(
        np.ascontiguousarray(st[:, 0]), np.ascontiguousarray(st[:, 1]), np.ascontiguousarray(st[:, 2]),
        np.ascontiguousarray(st[:, 4]).astype(np.int64),
        solution.t_birth, solution.t_death, solution.x_birth, solution.speed,
        solution.u_left, solution.u_right, edges, bptr, bids,
        float(solution.T), kind, nv, nf, qc, quasi, max_steps)
    if np.any(endc == END_NO_REFLECTION):
        i = int(np.nonzero(endc == END_NO_REFLECTION)[0][0])
        e = ptr[i + 1] - 1
        raise NumericalError("reflection", f"no reflected level at t={kt[e]:.6g}, x={kx[e]:.6g}, v={kv[e]:.6g}")
    if np.any(endc == END_STEP_LIMIT):
        raise NumericalError("complexity budget", "curve exceeded the jump limit")
    return WeightedCurveFamily(ptr, kt, kx, kv, kf, st[:, 3].copy(), start_kind, endc,
                               "hypograph", float(solution.T), dx, n_levels)


def build_epigraph_rep(solution, n_levels=256, dx=None, mode="entropy", x_range=None):
    """Curves filling ``{v > u}``: the hypograph construction for the mirrored solution, mapped back."""
    lo, hi = solution.base_flux.domain
    fam = build_hypograph_rep(mirror_solution(solution), n_levels, dx, mode, x_range)
    return replace(fam, knots_v=lo + hi - fam.knots_v, side="epigraph")


# -- measures --------------------------------------------------------------------------

def family_measures(family):
    """Unconsolidated ``(mu_0, mu_1)`` of a family (sum of per-curve measures)."""
    start, end = family.endpoints()
    end = end.copy()
    end[:, 3] *= -1
    mu0 = AtomicMeasure3(np.vstack([start, end]))
    t, x, vb, va, w, _ = family.jumps()
    sign = np.where(va < vb, 1.0, -1.0)
    segs = np.column_stack([t, x, np.minimum(va, vb), np.maximum(va, vb), sign * w])
    return mu0, AtomicMeasure3(np.zeros((0, 4)), segs[va != vb])


def aggregate_measures(family):
    """Consolidated ``(mu_0, mu_1)`` of the family."""
    mu0, mu1 = family_measures(family)
    return mu0.consolidate(), mu1.consolidate()


def interior(mu, T, tol=1e-12):
    """Restriction to ``0 < t < T``."""
    return mu.restrict(t_range=(tol, T - tol), closed=True)


# -- test functions and the kinetic balance ---------------------------------------------

_GL_T, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_V, _GL_VW = np.polynomial.legendre.leggauss(24)


def _bump(s):
    s = np.asarray(s, float)
    return np.where(np.abs(s) < 1, (1 - s * s) ** 3, 0.0)


def _dbump(s):
    s = np.asarray(s, float)
    return np.where(np.abs(s) < 1, -6 * s * (1 - s * s) ** 2, 0.0)


@dataclass(frozen=True)
class TestFunction:
    """``psi(t, x, v) = B((t-tc)/rt) B((x-xc)/rx) rho(v)`` with ``B(s) = (1-s^2)^3_+`` and polynomial ``rho``."""

    tc: float
    rt: float
    xc: float
    rx: float
    rho_coef: tuple

    __test__ = False    # keep pytest from collecting this class

    @property
    def rho(self):
        return Polynomial(self.rho_coef)

    def phi(self, t, x):
        return _bump((np.asarray(t) - self.tc) / self.rt) * _bump((np.asarray(x) - self.xc) / self.rx)

    def t_support(self):
        return self.tc - self.rt, self.tc + self.rt


def default_dictionary(T, x_range, n=20, seed=12345):
    """Deterministic dictionary of ``n`` bump x polynomial test functions inside ``(0, T) x x_range``."""
    rng = np.random.default_rng(seed)
    a, b = x_range
    out = []
    for k in range(n):
        rt = T * rng.uniform(0.15, 0.45)
        tc = rng.uniform(rt, T - rt)
        rx = (b - a) * rng.uniform(0.1, 0.35)
        xc = rng.uniform(a + rx, b - rx)
        deg = k % 4
        coef = np.zeros(deg + 1)
        coef[deg] = 1.0
        if deg == 0:
            coef = np.array([0.0, 1.0])
        out.append(TestFunction(tc, rt, xc, rx, tuple(float(c) for c in rng.uniform(-1, 1, deg + 1) + coef)))
    return out


def _antiderivs(rho, dflux, u):
    """``G(u) = int_0^u rho`` and ``H(u) = int_0^u f' rho`` by Gauss-Legendre."""
    u = np.asarray(u, float)
    s = 0.5 * u[:, None] * (_GL_V[None, :] + 1.0)
    wts = 0.5 * u[:, None] * _GL_VW[None, :]
    r = rho(s)
    return np.sum(wts * r, axis=1), np.sum(wts * r * dflux(s), axis=1)


def front_phi_integrals(fronts, tf, active=None):
    """``int phi(t, X(t)) dt`` along each front, clipped to the support of ``phi``.

    ``fronts`` needs ``t_birth, t_death, x_birth, speed``; returns
    ``(ids, integrals)`` for the fronts that meet the support.
    """
    t0 = np.maximum(fronts.t_birth, tf.tc - tf.rt)
    t1 = np.minimum(fronts.t_death, tf.tc + tf.rt)
    s = fronts.speed
    xb = fronts.x_birth - s * fronts.t_birth
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = np.where(s != 0, (tf.xc - tf.rx - xb) / s, -np.inf)
        tb = np.where(s != 0, (tf.xc + tf.rx - xb) / s, np.inf)
    lo_x = np.where(s > 0, ta, np.where(s < 0, tb, -np.inf))
    hi_x = np.where(s > 0, tb, np.where(s < 0, ta, np.inf))
    still = (s == 0) & (np.abs(xb - tf.xc) >= tf.rx)
    t0 = np.maximum(t0, lo_x)
    t1 = np.minimum(t1, hi_x)
    ok = (t1 > t0) & ~still
    if active is not None:
        ok &= active
    sel = np.nonzero(ok)[0]
    a, b = t0[sel], t1[sel]
    tt = 0.5 * (b - a)[:, None] * (_GL_T[None, :] + 1) + a[:, None]
    xx = xb[sel][:, None] + s[sel][:, None] * tt
    return sel, np.sum(_GL_W[None, :] * tf.phi(tt, xx), axis=1) * 0.5 * (b - a)


def transport_term(solution, tf, dflux=None):
    """``A = int chi (psi_t + f'(v) psi_x)`` assembled exactly from the fronts.

    Integrating by parts on each piece of constant ``u``,
    ``A = -sum_fronts int phi(t, X(t)) ([H] - s [G]) dt``.
    """
    dflux = solution.base_flux.df if dflux is None else dflux
    sel, integ = front_phi_integrals(solution, tf, solution.u_left != solution.u_right)
    if sel.size == 0:
        return 0.0
    s = solution.speed
    vals = np.unique(np.concatenate([solution.u_left[sel], solution.u_right[sel]]))
    G, H = _antiderivs(tf.rho, dflux, vals)
    iL = np.searchsorted(vals, solution.u_left[sel])
    iR = np.searchsorted(vals, solution.u_right[sel])
    jump = (H[iR] - H[iL]) - s[sel] * (G[iR] - G[iL])
    return float(-np.sum(integ * jump))


def balance_terms(solution, mu0, mu1, tf, dflux=None):
    """``(A, int phi rho' dmu_1, int phi rho dmu_0)``."""
    rho = tf.rho
    drho = rho.deriv()
    A = transport_term(solution, tf, dflux)
    m1 = mu1.integrate(tf.phi, rho, drho, mode="derivative")
    a = mu0.atoms
    m0 = float(np.sum(tf.phi(a[:, 0], a[:, 1]) * rho(a[:, 2]) * a[:, 3])) if a.shape[0] else 0.0
    return A, m1, m0


def kinetic_residual(solution, mu0, mu1, dictionary, dflux=None):
    """Max over the dictionary of ``|-A + int phi rho' dmu_1 - int phi rho dmu_0|``.

    This is the weak form of ``chi_t + f'(v) chi_x = d_v mu_1 + mu_0`` with
    ``chi = 1[v <= u]``.
    """
    worst = 0.0
    for tf in dictionary:
        A, m1, m0 = balance_terms(solution, mu0, mu1, tf, dflux)
        worst = max(worst, abs(-A + m1 - m0))
    return worst


# -- checks ---------------------------------------------------------------------------------

@dataclass
class GoodnessReport:
    passed: bool
    cancellation_mu1: float
    cancellation_mu0: float
    simultaneity_defect: float
    violations: list


def _cancellation(mu):
    raw = mu.total_variation()
    net = mu.consolidate().total_variation()
    return raw - net


def _cancel_pairs(mu, limit=10):
    s = mu.segments
    if s.shape[0] < 2:
        return []
    key = np.round(s[:, :2], 12)
    order = np.lexsort((key[:, 1], key[:, 0]))
    out = []
    for i, j in zip(order[:-1], order[1:]):
        if np.all(key[i] == key[j]) and np.sign(s[i, 4]) != np.sign(s[j, 4]) \
                and min(s[i, 3], s[j, 3]) > max(s[i, 2], s[j, 2]):
            out.append((int(i), int(j)))
            if len(out) >= limit:
                break
    return out


def goodness_check(family_h, family_e, dictionary=None, solution=None, tol=1e-9, sim_tol=None):
    """No-cancellation and simultaneity checks for a hypograph / epigraph pair.

    Simultaneity compares ``(mu_0, mu_1)`` of the hypograph with ``-(mu_0, mu_1)``
    of the epigraph weakly, on the test dictionary.
    """
    violations = []
    c1 = c0 = 0.0
    measures = []
    for fam in (family_h, family_e):
        if fam is None or len(fam) == 0:
            measures.append((AtomicMeasure3(), AtomicMeasure3()))
            continue
        mu0, mu1 = family_measures(fam)
        measures.append((mu0, mu1))
        c1 = max(c1, _cancellation(mu1))
        c0 = max(c0, _cancellation(interior(mu0, fam.T)))
        violations.extend((fam.side, p) for p in _cancel_pairs(mu1))
    sim = 0.0
    if dictionary and family_h is not None and family_e is not None and len(family_h) and len(family_e):
        (h0, h1), (e0, e1) = measures
        T = family_h.T
        for tf in dictionary:
            drho = tf.rho.deriv()
            a = tf.rho
            d1 = h1.integrate(tf.phi, a, drho, mode="derivative") + e1.integrate(tf.phi, a, drho, mode="derivative")
            hi0, ei0 = interior(h0, T), interior(e0, T)
            d0 = (np.sum(tf.phi(hi0.atoms[:, 0], hi0.atoms[:, 1]) * a(hi0.atoms[:, 2]) * hi0.atoms[:, 3])
                  + np.sum(tf.phi(ei0.atoms[:, 0], ei0.atoms[:, 1]) * a(ei0.atoms[:, 2]) * ei0.atoms[:, 3]))
            sim = max(sim, abs(d1), abs(d0))
    scale = max(1.0, *(m[1].total_variation() for m in measures))
    ok = c1 <= tol * scale and c0 <= tol * scale and not violations
    if sim_tol is not None:
        ok = ok and sim <= sim_tol
    return GoodnessReport(bool(ok), float(c1), float(c0), float(sim), violations)


def reproduction_defect(family, solution, box, n_t=256):
    """``(curve occupation of box, int_box chi)`` for ``box = (t0, t1, x0, x1, v0, v1)``."""
    t0, t1, x0, x1, v0, v1 = box
    pt0, pt1, px0, px1, pv, pw, _ = family.plateaus()
    sel = (pv > v0) & (pv < v1) & (pt1 > t0) & (pt0 < t1)
    a, b = np.maximum(pt0[sel], t0), np.minimum(pt1[sel], t1)
    dur = pt1[sel] - pt0[sel]
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(dur > 0, (px1[sel] - px0[sel]) / dur, 0.0)
    xs = px0[sel] - c * pt0[sel]
    # time spent with x in [x0, x1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = np.where(c != 0, (x0 - xs) / c, -np.inf)
        tb = np.where(c != 0, (x1 - xs) / c, np.inf)
    lo = np.where(c > 0, ta, np.where(c < 0, tb, np.where((xs >= x0) & (xs <= x1), -np.inf, np.inf)))
    hi = np.where(c > 0, tb, np.where(c < 0, ta, np.where((xs >= x0) & (xs <= x1), np.inf, -np.inf)))
    occ = np.clip(np.minimum(b, hi) - np.maximum(a, lo), 0.0, None)
    occupation = float(np.sum(pw[sel] * occ))
    ts = t0 + (np.arange(n_t) + 0.5) * (t1 - t0) / n_t
    vol = 0.0
    for t in ts:
        snap = solution.snapshot(t)
        edges = np.concatenate([[x0], snap.breakpoints[(snap.breakpoints > x0) & (snap.breakpoints < x1)], [x1]])
        mids = 0.5 * (edges[:-1] + edges[1:])
        if family.side == "hypograph":
            h = np.clip(np.minimum(snap(mids), v1) - v0, 0.0, None)
        else:
            h = np.clip(v1 - np.maximum(snap(mids), v0), 0.0, None)
        vol += np.sum(h * np.diff(edges))
    vol *= (t1 - t0) / n_t
    return occupation, vol


def good_curve_fraction(family, solution, n_t=16):
    """Fraction of curve weight sampled strictly inside its region (``v < u`` for hypographs)."""
    ts = (np.arange(n_t) + 0.5) * family.T / n_t
    pt0, pt1, px0, px1, pv, pw, _ = family.plateaus()
    good = total = 0.0
    for t in ts:
        sel = (pt0 <= t) & (pt1 > t)
        if not np.any(sel):
            continue
        dur = pt1[sel] - pt0[sel]
        x = px0[sel] + (px1[sel] - px0[sel]) * (t - pt0[sel]) / dur
        u = solution.snapshot(t)(x)
        ok = pv[sel] < u if family.side == "hypograph" else pv[sel] > u
        good += np.sum(pw[sel][ok])
        total += np.sum(pw[sel])
    return good / total if total > 0 else 1.0
