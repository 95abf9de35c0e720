"""Discrete 1-currents on a ``(t, x, v)`` grid and their path decomposition.

The current has components ``(chi, f'(v) chi, -mu_1)``; its divergence is
``mu_0``.  Face fluxes are integrated exactly from a front-tracking solution
so the per-cell divergence vanishes up to rounding away from sources.

:func:`smirnov_decompose` peels source-to-sink paths with bottleneck
subtraction.  Mass is the l1 form ``sum |F_e| l_e`` with ``l_e`` the spacing
between cell centres (half of it on boundary faces), so that the path masses
add up to the current's mass when no cycles remain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import optional_njit
from .diagnostics import front_kinetic_density
from .errors import NumericalError, ValidationError
from .lagrangian import Curve
from .measures import AtomicMeasure3

# edge kinds used in path descriptors
E_T, E_X, E_V, E_DIV = 0, 1, 2, 3


@dataclass
class GridSpec:
    t_edges: np.ndarray
    x_edges: np.ndarray
    v_edges: np.ndarray

    @classmethod
    def uniform(cls, t_range, x_range, v_range, shape):
        nt, nx, nv = shape
        return cls(np.linspace(*t_range, nt + 1), np.linspace(*x_range, nx + 1), np.linspace(*v_range, nv + 1))

    @property
    def shape(self):
        return self.t_edges.size - 1, self.x_edges.size - 1, self.v_edges.size - 1

    @property
    def spacing(self):
        return (float(self.t_edges[1] - self.t_edges[0]), float(self.x_edges[1] - self.x_edges[0]),
                float(self.v_edges[1] - self.v_edges[0]))

    def centers(self):
        c = lambda e: 0.5 * (e[:-1] + e[1:])
        return c(self.t_edges), c(self.x_edges), c(self.v_edges)


@dataclass
class DiscreteCurrent:
    """Face fluxes ``Ft (nt+1, nx, nv)``, ``Fx (nt, nx+1, nv)``, ``Fv (nt, nx, nv+1)``."""

    grid: GridSpec
    Ft: np.ndarray
    Fx: np.ndarray
    Fv: np.ndarray

    def divergence(self):
        """Net outflow per cell."""
        return (self.Ft[1:] - self.Ft[:-1]) + (self.Fx[:, 1:] - self.Fx[:, :-1]) + (self.Fv[:, :, 1:] - self.Fv[:, :, :-1])

    def interior_divergence(self):
        return self.divergence()

    def mass(self):
        dt, dx, dv = self.grid.spacing
        m = 0.0
        for F, h in ((self.Ft, dt), (self.Fx, dx), (self.Fv, dv)):
            a = np.abs(F)
            inner = np.sum(a) - 0.5 * _boundary_sum(a, F is self.Ft, F is self.Fx)
            m += inner * h
        return float(m)

    def boundary_measure(self):
        """:class:`AtomicMeasure3` of boundary-face inflow (+) / outflow (-) and cell divergence."""
        tc, xc, vc = self.grid.centers()
        te, xe, ve = self.grid.t_edges, self.grid.x_edges, self.grid.v_edges
        rows = []
        T0 = np.meshgrid(xc, vc, indexing="ij")
        rows.append(np.column_stack([np.full(T0[0].size, te[0]), T0[0].ravel(), T0[1].ravel(), self.Ft[0].ravel()]))
        rows.append(np.column_stack([np.full(T0[0].size, te[-1]), T0[0].ravel(), T0[1].ravel(), -self.Ft[-1].ravel()]))
        X0 = np.meshgrid(tc, vc, indexing="ij")
        rows.append(np.column_stack([X0[0].ravel(), np.full(X0[0].size, xe[0]), X0[1].ravel(), self.Fx[:, 0].ravel()]))
        rows.append(np.column_stack([X0[0].ravel(), np.full(X0[0].size, xe[-1]), X0[1].ravel(), -self.Fx[:, -1].ravel()]))
        V0 = np.meshgrid(tc, xc, indexing="ij")
        rows.append(np.column_stack([V0[0].ravel(), V0[1].ravel(), np.full(V0[0].size, ve[0]), self.Fv[:, :, 0].ravel()]))
        rows.append(np.column_stack([V0[0].ravel(), V0[1].ravel(), np.full(V0[0].size, ve[-1]), -self.Fv[:, :, -1].ravel()]))
        C = np.meshgrid(tc, xc, vc, indexing="ij")
        rows.append(np.column_stack([C[0].ravel(), C[1].ravel(), C[2].ravel(), self.divergence().ravel()]))
        a = np.vstack(rows)
        return AtomicMeasure3(a[a[:, 3] != 0])


def _boundary_sum(a, is_t, is_x):
    if is_t:
        return np.sum(a[0]) + np.sum(a[-1])
    if is_x:
        return np.sum(a[:, 0]) + np.sum(a[:, -1])
    return np.sum(a[:, :, 0]) + np.sum(a[:, :, -1])


# -- assembly -----------------------------------------------------------------------------

def _clip_int(F, lo, hi, u):
    """``int_lo^{min(hi, u)} F'`` for a primitive ``F`` (zero when ``u <= lo``)."""
    top = np.clip(u, lo, hi)
    return F(top) - F(lo)


def build_current(solution, grid, mu1=None, check_support=True):
    """Current of a front-tracking solution on ``grid``.

    ``Ft`` and ``Fx`` are exact integrals of ``chi`` and ``f'(v) chi`` (with the
    solution's piecewise-linear flux).  ``Fv`` is ``-mu_1`` integrated over the
    ``(t, x)`` cell from the exact per-front kinetic densities; passing an
    explicit ``mu1`` instead bins its segments to the nearest v-face.
    """
    te, xe, ve = grid.t_edges, grid.x_edges, grid.v_edges
    nt, nx, nv = grid.shape
    lo_v, hi_v = solution.base_flux.domain
    if check_support and (ve[0] > lo_v + 1e-12 or ve[-1] < hi_v - 1e-12 or te[0] < 0 or te[-1] > solution.T + 1e-12):
        raise ValidationError("support", "grid must cover the state domain and lie in [0, T]")
    fl = solution.flux
    ident = lambda v: np.asarray(v, float)
    # t-faces
    Ft = np.zeros((nt + 1, nx, nv))
    for k, t in enumerate(te):
        snap = solution.snapshot(t)
        for i in range(nx):
            bps = snap.breakpoints[(snap.breakpoints > xe[i]) & (snap.breakpoints < xe[i + 1])]
            ed = np.concatenate([[xe[i]], bps, [xe[i + 1]]])
            u = snap(0.5 * (ed[:-1] + ed[1:]))
            w = np.diff(ed)
            Ft[k, i] = np.sum(w[:, None] * _clip_int(ident, ve[None, :-1], ve[None, 1:], u[:, None]), axis=0)
    # x-faces: piecewise constant u(t, x_i) in t
    Fx = np.zeros((nt, nx + 1, nv))
    s = solution.speed
    for i, x in enumerate(xe):
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = np.where(s != 0, solution.t_birth + (x - solution.x_birth) / s, np.nan)
        ok = (tc > solution.t_birth) & (tc < solution.t_death)
        cuts = np.unique(np.concatenate([te, tc[ok & (tc > te[0]) & (tc < te[-1])]]))
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        dur = np.diff(cuts)
        u = np.array([solution.snapshot(m)(x) for m in mids]).reshape(-1)
        contrib = dur[:, None] * _clip_int(fl.f, ve[None, :-1], ve[None, 1:], u[:, None])
        cell = np.clip(np.searchsorted(te, mids, side="right") - 1, 0, nt - 1)
        np.add.at(Fx[:, i], cell, contrib)
    # v-faces
    Fv = np.zeros((nt, nx, nv + 1))
    if mu1 is None:
        for f in range(solution.n_fronts):
            if solution.u_left[f] == solution.u_right[f]:
                continue
            dens = front_kinetic_density(fl.df, solution.u_left[f], solution.u_right[f], s[f], ve)
            if not np.any(np.abs(dens) > 0):
                continue
            t0, t1 = max(solution.t_birth[f], te[0]), min(solution.t_death[f], te[-1])
            if t1 <= t0:
                continue
            # split the front's life at t-edges and x-edges
            xt = lambda t: solution.x_birth[f] + s[f] * (t - solution.t_birth[f])
            cuts = [t0, t1] + [t for t in te if t0 < t < t1]
            if s[f] != 0:
                tx = solution.t_birth[f] + (xe - solution.x_birth[f]) / s[f]
                cuts += [t for t in tx if t0 < t < t1]
            cuts = np.unique(cuts)
            mids = 0.5 * (cuts[:-1] + cuts[1:])
            dur = np.diff(cuts)
            kc = np.searchsorted(te, mids, side="right") - 1
            ic = np.searchsorted(xe, xt(mids), side="right") - 1
            inside = (kc >= 0) & (kc < nt) & (ic >= 0) & (ic < nx)
            if check_support and not np.all(inside):
                raise ValidationError("support", f"front {f} leaves the grid box")
            for k, i, d in zip(kc[inside], ic[inside], dur[inside]):
                Fv[k, i] -= d * dens
    else:
        seg = mu1.segments
        for t, x, a, b, dns in seg:
            k = np.searchsorted(te, t, side="right") - 1
            i = np.searchsorted(xe, x, side="right") - 1
            if not (0 <= k < nt and 0 <= i < nx):
                if check_support:
                    raise ValidationError("support", f"mu_1 segment at ({t}, {x}) outside the grid")
                continue
            # faces strictly inside (a, b) carry -density
            j0 = np.searchsorted(ve, a, side="right")
            j1 = np.searchsorted(ve, b, side="left")
            Fv[k, i, j0:j1] -= dns
    return DiscreteCurrent(grid, Ft, Fx, Fv)


# -- decomposition ---------------------------------------------------------------------

@optional_njit(cache=True)
def _peel(Ft, Fx, Fv, div, dt, dx, dv, tol, max_len):
    nt1, nx, nv = Ft.shape
    nt = nt1 - 1
    ncell = nt * nx * nv
    # path storage
    cap = 1024
    w_out = np.empty(cap)
    len_out = np.empty(cap)
    ptr = np.zeros(cap + 1, np.int64)
    cells = np.empty(cap * 8, np.int64)
    src = np.empty((cap, 2), np.int64)
    dst = np.empty((cap, 2), np.int64)
    n_paths = 0
    m = 0
    cycle_mass = 0.0
    stuck_mass = 0.0
    on_path = np.full(ncell, -1, np.int64)
    pc = np.empty(max_len, np.int64)           # cells on path
    pek = np.empty(max_len + 1, np.int64)      # edge kind into each cell / final
    pei = np.empty(max_len + 1, np.int64)      # flat edge index
    pes = np.empty(max_len + 1, np.float64)    # edge sign (+1 positive flux direction)
    pel = np.empty(max_len + 1, np.float64)    # edge length

    # enumerate sources: boundary inflow faces then positive divergence
    n_src = 2 * nx * nv + 2 * nt * nv + 2 * nt * nx + ncell
    for sidx in range(n_src):
        while True:
            # decode the source edge and first cell
            k0 = -1
            if sidx < nx * nv:
                r = sidx
                i = r // nv; j = r % nv
                kind = 0; flat = (0 * nx + i) * nv + j; val = Ft[0, i, j]; sg = 1.0; cell = (0 * nx + i) * nv + j; ln = 0.5 * dt
            elif sidx < 2 * nx * nv:
                r = sidx - nx * nv
                i = r // nv; j = r % nv
                kind = 0; flat = (nt * nx + i) * nv + j; val = -Ft[nt, i, j]; sg = -1.0; cell = ((nt - 1) * nx + i) * nv + j; ln = 0.5 * dt
            elif sidx < 2 * nx * nv + nt * nv:
                r = sidx - 2 * nx * nv
                k = r // nv; j = r % nv
                kind = 1; flat = (k * (nx + 1) + 0) * nv + j; val = Fx[k, 0, j]; sg = 1.0; cell = (k * nx + 0) * nv + j; ln = 0.5 * dx
            elif sidx < 2 * nx * nv + 2 * nt * nv:
                r = sidx - 2 * nx * nv - nt * nv
                k = r // nv; j = r % nv
                kind = 1; flat = (k * (nx + 1) + nx) * nv + j; val = -Fx[k, nx, j]; sg = -1.0; cell = (k * nx + nx - 1) * nv + j; ln = 0.5 * dx
            elif sidx < 2 * nx * nv + 2 * nt * nv + nt * nx:
                r = sidx - 2 * nx * nv - 2 * nt * nv
                k = r // nx; i = r % nx
                kind = 2; flat = (k * nx + i) * (nv + 1) + 0; val = Fv[k, i, 0]; sg = 1.0; cell = (k * nx + i) * nv + 0; ln = 0.5 * dv
            elif sidx < 2 * nx * nv + 2 * nt * nv + 2 * nt * nx:
                r = sidx - 2 * nx * nv - 2 * nt * nv - nt * nx
                k = r // nx; i = r % nx
                kind = 2; flat = (k * nx + i) * (nv + 1) + nv; val = -Fv[k, i, nv]; sg = -1.0; cell = (k * nx + i) * nv + nv - 1; ln = 0.5 * dv
            else:
                c = sidx - (2 * nx * nv + 2 * nt * nv + 2 * nt * nx)
                kind = 3; flat = c; val = div[c]; sg = 1.0; cell = c; ln = 0.0
            if val <= tol:
                break
            # walk
            depth = 0
            pek[0] = kind; pei[0] = flat; pes[0] = sg; pel[0] = ln
            pc[0] = cell
            on_path[cell] = 0
            end_kind = -1
            while True:
                c = pc[depth]
                k = c // (nx * nv); i = (c // nv) % nx; j = c % nv
                best = tol
                bk = -1; bflat = 0; bsg = 0.0; bnext = -1; bl = 0.0
                # t+
                v = Ft[k + 1, i, j]
                if v > best:
                    best = v; bk = 0; bflat = ((k + 1) * nx + i) * nv + j; bsg = 1.0
                    bnext = ((k + 1) * nx + i) * nv + j if k + 1 < nt else -1
                    bl = dt if k + 1 < nt else 0.5 * dt
                v = -Ft[k, i, j]
                if v > best:
                    best = v; bk = 0; bflat = (k * nx + i) * nv + j; bsg = -1.0
                    bnext = ((k - 1) * nx + i) * nv + j if k > 0 else -1
                    bl = dt if k > 0 else 0.5 * dt
                v = Fx[k, i + 1, j]
                if v > best:
                    best = v; bk = 1; bflat = (k * (nx + 1) + i + 1) * nv + j; bsg = 1.0
                    bnext = (k * nx + i + 1) * nv + j if i + 1 < nx else -1
                    bl = dx if i + 1 < nx else 0.5 * dx
                v = -Fx[k, i, j]
                if v > best:
                    best = v; bk = 1; bflat = (k * (nx + 1) + i) * nv + j; bsg = -1.0
                    bnext = (k * nx + i - 1) * nv + j if i > 0 else -1
                    bl = dx if i > 0 else 0.5 * dx
                v = Fv[k, i, j + 1]
                if v > best:
                    best = v; bk = 2; bflat = (k * nx + i) * (nv + 1) + j + 1; bsg = 1.0
                    bnext = (k * nx + i) * nv + j + 1 if j + 1 < nv else -1
                    bl = dv if j + 1 < nv else 0.5 * dv
                v = -Fv[k, i, j]
                if v > best:
                    best = v; bk = 2; bflat = (k * nx + i) * (nv + 1) + j; bsg = -1.0
                    bnext = (k * nx + i) * nv + j - 1 if j > 0 else -1
                    bl = dv if j > 0 else 0.5 * dv
                v = -div[c]
                if v > best:
                    best = v; bk = 3; bflat = c; bsg = -1.0; bnext = -1; bl = 0.0
                if bk < 0:
                    end_kind = -2          # stuck
                    break
                pek[depth + 1] = bk; pei[depth + 1] = bflat; pes[depth + 1] = bsg; pel[depth + 1] = bl
                if bnext < 0:
                    end_kind = bk
                    break
                if on_path[bnext] >= 0:
                    # cancel the cycle bnext -> ... -> c -> bnext
                    d0 = on_path[bnext]
                    bott = np.inf
                    for q in range(d0 + 1, depth + 2):
                        val_e = _edge_val(Ft, Fx, Fv, div, pek[q], pei[q]) * pes[q]
                        if val_e < bott:
                            bott = val_e
                    clen = 0.0
                    for q in range(d0 + 1, depth + 2):
                        _edge_sub(Ft, Fx, Fv, div, pek[q], pei[q], pes[q] * bott)
                        clen += pel[q]
                    cycle_mass += bott * clen
                    for q in range(d0 + 1, depth + 1):
                        on_path[pc[q]] = -1
                    depth = d0
                    continue
                depth += 1
                if depth >= max_len - 1:
                    end_kind = -2
                    break
                pc[depth] = bnext
                on_path[bnext] = depth
            last = depth + 1 if end_kind >= 0 else depth
            bott = np.inf
            for q in range(0, last + 1):
                val_e = _edge_val(Ft, Fx, Fv, div, pek[q], pei[q]) * pes[q]
                if val_e < bott:
                    bott = val_e
            length = 0.0
            for q in range(0, last + 1):
                _edge_sub(Ft, Fx, Fv, div, pek[q], pei[q], pes[q] * bott)
                length += pel[q]
            for q in range(depth + 1):
                on_path[pc[q]] = -1
            if end_kind == -2:
                stuck_mass += bott
            # store
            if n_paths + 1 >= cap:
                cap2 = cap * 2
                w2 = np.empty(cap2); w2[:n_paths] = w_out[:n_paths]; w_out = w2
                l2 = np.empty(cap2); l2[:n_paths] = len_out[:n_paths]; len_out = l2
                p2 = np.zeros(cap2 + 1, np.int64); p2[:n_paths + 1] = ptr[:n_paths + 1]; ptr = p2
                s2 = np.empty((cap2, 2), np.int64); s2[:n_paths] = src[:n_paths]; src = s2
                d2 = np.empty((cap2, 2), np.int64); d2[:n_paths] = dst[:n_paths]; dst = d2
                cap = cap2
            while m + depth + 1 > cells.size:
                c2 = np.empty(cells.size * 2, np.int64); c2[:m] = cells[:m]; cells = c2
            for q in range(depth + 1):
                cells[m] = pc[q]
                m += 1
            w_out[n_paths] = bott
            len_out[n_paths] = length
            src[n_paths, 0] = pek[0]; src[n_paths, 1] = pei[0]
            if end_kind >= 0:
                dst[n_paths, 0] = pek[last]; dst[n_paths, 1] = pei[last]
            else:
                dst[n_paths, 0] = -1; dst[n_paths, 1] = pc[depth]
            n_paths += 1
            ptr[n_paths] = m
    return (w_out[:n_paths].copy(), len_out[:n_paths].copy(), ptr[:n_paths + 1].copy(), cells[:m].copy(),
            src[:n_paths].copy(), dst[:n_paths].copy(), cycle_mass, stuck_mass)


@optional_njit(cache=True)
def _edge_val(Ft, Fx, Fv, div, kind, flat):
    if kind == 0:
        return Ft.ravel()[flat]
    if kind == 1:
        return Fx.ravel()[flat]
    if kind == 2:
        return Fv.ravel()[flat]
    return div[flat]


@optional_njit(cache=True)
def _edge_sub(Ft, Fx, Fv, div, kind, flat, amount):
    if kind == 0:
        Ft.ravel()[flat] -= amount
    elif kind == 1:
        Fx.ravel()[flat] -= amount
    elif kind == 2:
        Fv.ravel()[flat] -= amount
    else:
        div[flat] -= amount


@dataclass
class PathFamily:
    """Paths as cell sequences (flat ``(k, i, j)`` indices) with weights.

    ``source``/``sink`` rows are ``(edge kind, flat edge index)``; kind 3 is a
    cell divergence, ``-1`` marks a path that got stuck.
    """

    grid: GridSpec
    weights: np.ndarray
    lengths: np.ndarray
    ptr: np.ndarray
    cells: np.ndarray
    source: np.ndarray
    sink: np.ndarray
    cycle_mass: float
    stuck_mass: float
    residual_mass: float

    def __len__(self):
        return self.weights.size

    def path_cells(self, p):
        nt, nx, nv = self.grid.shape
        c = self.cells[self.ptr[p]:self.ptr[p + 1]]
        return np.column_stack([c // (nx * nv), (c // nv) % nx, c % nv])

    def total_mass(self):
        return float(np.sum(self.weights * self.lengths))

    def to_json_lines(self):
        import json
        out = []
        for p in range(len(self)):
            out.append(json.dumps({"weight": float(self.weights[p]), "cells": self.path_cells(p).tolist(),
                                   "source": self.source[p].tolist(), "sink": self.sink[p].tolist()}, sort_keys=True))
        return "\n".join(out) + ("\n" if out else "")


def _remaining_mass(Ft, Fx, Fv, spacing):
    dt, dx, dv = spacing
    m = 0.0
    for F, h, is_t, is_x in ((Ft, dt, True, False), (Fx, dx, False, True), (Fv, dv, False, False)):
        a = np.abs(F)
        m += (np.sum(a) - 0.5 * _boundary_sum(a, is_t, is_x)) * h
    return float(m)


def smirnov_decompose(current, tol_rel=1e-13, strict=True):
    """Bottleneck path peeling from sources to sinks.

    Sources are inflow boundary faces and cells of positive divergence; sinks
    are outflow faces and cells of negative divergence.  Raises
    ``nonconservative`` when a path gets stuck with non-negligible weight.
    """
    Ft, Fx, Fv = (np.ascontiguousarray(a, dtype=np.float64).copy() for a in (current.Ft, current.Fx, current.Fv))
    div = np.ascontiguousarray(current.divergence().ravel())
    scale = max(np.max(np.abs(Ft)) if Ft.size else 0.0, np.max(np.abs(Fx)) if Fx.size else 0.0,
                np.max(np.abs(Fv)) if Fv.size else 0.0)
    if scale == 0:
        return PathFamily(current.grid, np.zeros(0), np.zeros(0), np.zeros(1, np.int64), np.zeros(0, np.int64),
                          np.zeros((0, 2), np.int64), np.zeros((0, 2), np.int64), 0.0, 0.0, 0.0)
    dt, dx, dv = current.grid.spacing
    nt, nx, nv = current.grid.shape
    w, ln, ptr, cells, src, dst, cyc, stuck = _peel(Ft, Fx, Fv, div, dt, dx, dv, tol_rel * scale,
                                                     nt * nx * nv + 2)
    residual = _remaining_mass(Ft, Fx, Fv, current.grid.spacing)
    if strict and stuck > 1e-9 * max(current.mass(), 1e-300):
        raise NumericalError("nonconservative", f"stuck path weight {stuck:.3e}")
    return PathFamily(current.grid, w, ln, ptr, cells, src, dst, float(cyc), float(stuck), residual)


@dataclass
class AcyclicReport:
    mass: float
    boundary_mass: float
    cycle_residual: float
    acyclic: bool


def check_normal_acyclic(current):
    """Mass, boundary mass and the mass left over after source-to-sink peeling."""
    mass = current.mass()
    bm = current.boundary_measure().total_variation()
    fam = smirnov_decompose(current, strict=False)
    cyc = fam.cycle_mass + fam.residual_mass
    return AcyclicReport(mass, bm, cyc, bool(cyc <= 1e-9 * max(mass, 1e-300)))


# -- checks on the decomposition -----------------------------------------------------

def _edge_capacities(current):
    """Source and sink capacities keyed by ``(kind, flat)``."""
    Ft, Fx, Fv = current.Ft, current.Fx, current.Fv
    nt, nx, nv = current.grid.shape
    div = current.divergence().ravel()
    srcs, snks = {}, {}

    def put(d, key, val):
        if val > 0:
            d[key] = d.get(key, 0.0) + val

    for i in range(nx):
        for j in range(nv):
            put(srcs, (0, (0 * nx + i) * nv + j), Ft[0, i, j])
            put(snks, (0, (0 * nx + i) * nv + j), -Ft[0, i, j])
            put(snks, (0, (nt * nx + i) * nv + j), Ft[nt, i, j])
            put(srcs, (0, (nt * nx + i) * nv + j), -Ft[nt, i, j])
    for k in range(nt):
        for j in range(nv):
            put(srcs, (1, (k * (nx + 1)) * nv + j), Fx[k, 0, j])
            put(snks, (1, (k * (nx + 1)) * nv + j), -Fx[k, 0, j])
            put(snks, (1, (k * (nx + 1) + nx) * nv + j), Fx[k, nx, j])
            put(srcs, (1, (k * (nx + 1) + nx) * nv + j), -Fx[k, nx, j])
        for i in range(nx):
            put(srcs, (2, (k * nx + i) * (nv + 1)), Fv[k, i, 0])
            put(snks, (2, (k * nx + i) * (nv + 1)), -Fv[k, i, 0])
            put(snks, (2, (k * nx + i) * (nv + 1) + nv), Fv[k, i, nv])
            put(srcs, (2, (k * nx + i) * (nv + 1) + nv), -Fv[k, i, nv])
    for c in np.nonzero(div)[0]:
        put(srcs, (3, int(c)), div[c])
        put(snks, (3, int(c)), -div[c])
    return srcs, snks


@dataclass
class DecompositionReport:
    mass: float
    path_mass: float
    mass_error: float
    boundary_error: float
    cone_violations: int


def verify_decomposition(current, paths):
    """Mass additivity, endpoint/boundary matching and the flux-cone property."""
    mass = current.mass()
    pm = paths.total_mass()
    srcs, snks = _edge_capacities(current)
    got_s, got_k = {}, {}
    for p in range(len(paths)):
        ks = (int(paths.source[p, 0]), int(paths.source[p, 1]))
        kk = (int(paths.sink[p, 0]), int(paths.sink[p, 1]))
        got_s[ks] = got_s.get(ks, 0.0) + paths.weights[p]
        got_k[kk] = got_k.get(kk, 0.0) + paths.weights[p]
    err = 0.0
    for want, got in ((srcs, got_s), (snks, got_k)):
        for key in set(want) | set(got):
            err = max(err, abs(want.get(key, 0.0) - got.get(key, 0.0)))
    scale = max(max(srcs.values(), default=0.0), 1e-300)
    # cone: every step follows a face with flux in the direction of motion
    nt, nx, nv = current.grid.shape
    bad = 0
    for p in range(len(paths)):
        c = paths.path_cells(p)
        if c.shape[0] < 2:
            continue
        d = np.diff(c, axis=0)
        for (k, i, j), (a, b, e) in zip(c[:-1], d):
            if a == 1:
                f = current.Ft[k + 1, i, j]
            elif a == -1:
                f = -current.Ft[k, i, j]
            elif b == 1:
                f = current.Fx[k, i + 1, j]
            elif b == -1:
                f = -current.Fx[k, i, j]
            elif e == 1:
                f = current.Fv[k, i, j + 1]
            elif e == -1:
                f = -current.Fv[k, i, j]
            else:
                f = -1.0
            if not f > 0 or abs(a) + abs(b) + abs(e) != 1:
                bad += 1
    return DecompositionReport(mass, pm, abs(pm - mass) / max(mass, 1e-300), err / scale, bad)


def reparametrize(paths, p):
    """Curve read off path ``p`` at slab midpoints, or ``None`` for single-slab paths."""
    c = paths.path_cells(p)
    tc, xc, vc = paths.grid.centers()
    ks = np.unique(c[:, 0])
    if ks.size < 2:
        return None
    kt, kx, kv = [], [], []
    for k in ks:
        rows = c[c[:, 0] == k]
        # the level entering the slab, then the one leaving it: a v-run is a jump at the midpoint
        if kv and kv[-1] != vc[rows[0, 2]]:
            kt.append(tc[k]); kx.append(xc[rows[0, 1]]); kv.append(vc[rows[0, 2]])
        kt.append(tc[k]); kx.append(xc[rows[-1, 1]]); kv.append(vc[rows[-1, 2]])
    kt.append(kt[-1]); kx.append(kx[-1]); kv.append(kv[-1])
    kt, kx, kv = np.array(kt), np.array(kx), np.array(kv)
    # merge knots at equal times into jumps: keep the first x, the later level
    return Curve(kt, kx, kv, float(paths.weights[p]))
