"""Signed measures with atomic and segment parts.

:class:`AtomicMeasure3` lives on ``(t, x, v)`` and stores point atoms plus
vertical segments ``{t} x {x} x [v_lo, v_hi]`` with a constant linear density.
:class:`MeasureTX` lives on ``(t, x)`` and stores point atoms plus straight
line pieces carrying a density per unit time; it supports exact ball masses.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import optional_njit

_ATOM_COLS = ("t", "x", "v", "weight")
_SEG_COLS = ("t", "x", "v_lo", "v_hi", "density")


def _f64(a):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64).reshape(-1))


@dataclass
class AtomicMeasure3:
    """Signed measure on ``(t, x, v)``: point atoms and vertical segments."""

    atoms: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    segments: np.ndarray = field(default_factory=lambda: np.zeros((0, 5)))

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float).reshape(-1, 4)
        self.segments = np.asarray(self.segments, dtype=float).reshape(-1, 5)
        if self.segments.size:
            flip = self.segments[:, 3] < self.segments[:, 2]
            if np.any(flip):
                seg = self.segments.copy()
                seg[flip, 2], seg[flip, 3] = self.segments[flip, 3], self.segments[flip, 2]
                seg[flip, 4] = -seg[flip, 4]
                self.segments = seg

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def from_parts(cls, atoms=(), segments=()):
        atoms = [np.asarray(a, float).reshape(-1, 4) for a in atoms if np.size(a)]
        segs = [np.asarray(s, float).reshape(-1, 5) for s in segments if np.size(s)]
        return cls(np.vstack(atoms) if atoms else np.zeros((0, 4)),
                   np.vstack(segs) if segs else np.zeros((0, 5)))

    def __add__(self, other):
        return AtomicMeasure3(np.vstack([self.atoms, other.atoms]),
                              np.vstack([self.segments, other.segments]))

    def __neg__(self):
        a, s = self.atoms.copy(), self.segments.copy()
        a[:, 3] *= -1
        s[:, 4] *= -1
        return AtomicMeasure3(a, s)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        a, s = self.atoms.copy(), self.segments.copy()
        a[:, 3] *= c
        s[:, 4] *= c
        return AtomicMeasure3(a, s)

    @property
    def is_empty(self):
        return self.atoms.shape[0] == 0 and self.segments.shape[0] == 0

    def segment_masses(self):
        s = self.segments
        return (s[:, 3] - s[:, 2]) * s[:, 4]

    def total(self):
        """Signed total mass."""
        return float(self.atoms[:, 3].sum() + self.segment_masses().sum())

    def total_variation(self):
        """Sum of |atom weights| plus segment lengths times |density| (no cancellation)."""
        return float(np.abs(self.atoms[:, 3]).sum() + np.abs(self.segment_masses()).sum())

    def positive_part(self):
        return AtomicMeasure3(self.atoms[self.atoms[:, 3] > 0], self.segments[self.segments[:, 4] > 0])

    def negative_part(self):
        return -AtomicMeasure3(self.atoms[self.atoms[:, 3] < 0], self.segments[self.segments[:, 4] < 0])

    def restrict(self, t_range=None, x_range=None, v_range=None, closed=True):
        """Restriction to a box; segments are clipped in ``v``."""
        def inside(col, rng):
            if rng is None:
                return np.ones(col.shape, bool)
            lo, hi = rng
            return (col >= lo) & (col <= hi) if closed else (col > lo) & (col < hi)

        a = self.atoms
        ka = inside(a[:, 0], t_range) & inside(a[:, 1], x_range) & inside(a[:, 2], v_range)
        s = self.segments[inside(self.segments[:, 0], t_range) & inside(self.segments[:, 1], x_range)].copy()
        if v_range is not None and s.size:
            s[:, 2] = np.maximum(s[:, 2], v_range[0])
            s[:, 3] = np.minimum(s[:, 3], v_range[1])
            s = s[s[:, 3] > s[:, 2]]
        return AtomicMeasure3(a[ka], s)

    def pushforward_v(self, fn, dfn_sign=1):
        """Pushforward under ``v -> fn(v)`` for a monotone map (``dfn_sign`` = its orientation)."""
        a = self.atoms.copy()
        a[:, 2] = fn(a[:, 2])
        s = self.segments.copy()
        lo, hi = fn(s[:, 2]), fn(s[:, 3])
        # linear maps keep the density up to the Jacobian
        length_old = self.segments[:, 3] - self.segments[:, 2]
        length_new = np.abs(hi - lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            s[:, 4] = np.where(length_new > 0, s[:, 4] * length_old / length_new, 0.0)
        s[:, 2], s[:, 3] = np.minimum(lo, hi), np.maximum(lo, hi)
        return AtomicMeasure3(a, s)

    def marginal_tx(self, absolute=True):
        """``(t, x)``-marginal as a :class:`MeasureTX` (of |mu| by default)."""
        w_a = self.atoms[:, 3]
        w_s = self.segment_masses()
        if absolute:
            w_a, w_s = np.abs(w_a), np.abs(w_s)
        pts = np.concatenate([self.atoms[:, :2], self.segments[:, :2]])
        return MeasureTX(np.column_stack([pts, np.concatenate([w_a, w_s])]))

    def v_density(self, v_edges, t_range=None):
        """Histogram of the v-distribution: signed mass per v-bin divided by bin width."""
        m = self if t_range is None else self.restrict(t_range=t_range)
        v_edges = np.asarray(v_edges, float)
        out = np.zeros(v_edges.size - 1)
        s = m.segments
        for k in range(out.size):
            lo, hi = v_edges[k], v_edges[k + 1]
            ov = np.clip(np.minimum(s[:, 3], hi) - np.maximum(s[:, 2], lo), 0.0, None)
            out[k] = np.sum(ov * s[:, 4])
        a = m.atoms
        idx = np.searchsorted(v_edges, a[:, 2], side="right") - 1
        ok = (idx >= 0) & (idx < out.size)
        np.add.at(out, idx[ok], a[ok, 3])
        return out / np.diff(v_edges)

    def integrate(self, phi, rho, drho=None, mode="value"):
        """``int phi(t,x) rho(v) dmu`` (``mode="value"``) or ``int phi rho' dmu`` (``mode="derivative"``).

        Segment integrals are exact: ``int_{v_lo}^{v_hi} rho' dv = rho(v_hi) - rho(v_lo)``.
        For ``mode="value"`` on segments ``rho`` must be an antiderivative-capable
        object exposing ``.integral(lo, hi)``.
        """
        a, s = self.atoms, self.segments
        pa = phi(a[:, 0], a[:, 1])
        ps = phi(s[:, 0], s[:, 1])
        if mode == "derivative":
            ra = drho(a[:, 2]) if a.shape[0] else np.zeros(0)
            rs = rho(s[:, 3]) - rho(s[:, 2])
            return float(np.sum(pa * ra * a[:, 3]) + np.sum(ps * rs * s[:, 4]))
        ra = rho(a[:, 2])
        rs = rho.integral(s[:, 2], s[:, 3]) if s.shape[0] else np.zeros(0)
        return float(np.sum(pa * ra * a[:, 3]) + np.sum(ps * rs * s[:, 4]))

    def consolidate(self, decimals=12):
        """Merge atoms at identical points and identical segments; drop zeros.

        Segments are split at every distinct endpoint sharing the same ``(t, x)``
        so that overlapping pieces add up.  Positive and negative parts of the
        result have disjoint supports.
        """
        atoms = self.atoms
        if atoms.shape[0]:
            key = np.round(atoms[:, :3], decimals)
            uniq, inv = np.unique(key, axis=0, return_inverse=True)
            w = np.zeros(uniq.shape[0])
            np.add.at(w, inv.reshape(-1), atoms[:, 3])
            atoms = np.column_stack([uniq, w])
            atoms = atoms[atoms[:, 3] != 0]
        segs = self.segments
        if segs.shape[0]:
            key = np.round(segs[:, :2], decimals)
            order = np.lexsort((key[:, 1], key[:, 0]))
            key, segs = key[order], segs[order]
            brk = np.nonzero(np.any(np.diff(key, axis=0) != 0, axis=1))[0] + 1
            starts = np.concatenate([[0], brk])
            sizes = np.diff(np.concatenate([starts, [segs.shape[0]]]))
            single = np.repeat(sizes == 1, sizes)
            out = [segs[single]]
            for st, sz in zip(starts[sizes > 1], sizes[sizes > 1]):
                g = segs[st:st + sz]
                ends = np.unique(np.concatenate([g[:, 2], g[:, 3]]))
                mids = 0.5 * (ends[:-1] + ends[1:])
                dens = np.zeros(mids.size)
                for row in g:
                    dens += row[4] * ((mids > row[2]) & (mids < row[3]))
                # merge consecutive equal densities
                rows = []
                for k in range(mids.size):
                    if dens[k] == 0:
                        continue
                    if rows and rows[-1][3] == ends[k] and rows[-1][4] == dens[k]:
                        rows[-1][3] = ends[k + 1]
                    else:
                        rows.append([g[0, 0], g[0, 1], ends[k], ends[k + 1], dens[k]])
                if rows:
                    out.append(np.array(rows))
            segs = np.vstack(out) if out else np.zeros((0, 5))
            segs = segs[(segs[:, 4] != 0) & (segs[:, 3] > segs[:, 2])]
        return AtomicMeasure3(atoms, segs)

    def to_rows(self, kind="atom_or_segment"):
        """Rows ``(t, x, v_lo, v_hi, weight, sign, kind)`` for the measures table."""
        rows = []
        for t, x, v, w in self.atoms:
            rows.append((t, x, v, v, abs(w), int(np.sign(w)), "atom"))
        for t, x, lo, hi, d in self.segments:
            rows.append((t, x, lo, hi, abs(d) * (hi - lo), int(np.sign(d)), "segment"))
        return rows

    @classmethod
    def from_rows(cls, rows):
        atoms, segs = [], []
        for t, x, lo, hi, w, sgn, kind in rows:
            if kind == "atom":
                atoms.append((t, x, lo, sgn * w))
            else:
                segs.append((t, x, lo, hi, sgn * w / (hi - lo)))
        return cls(np.array(atoms).reshape(-1, 4), np.array(segs).reshape(-1, 5))


@optional_njit(cache=True)
def _ball_mass(pts_t, pts_x, pts_w, lines, tc, xc, r):
    acc = 0.0
    r2 = r * r
    for i in range(pts_t.size):
        dt = pts_t[i] - tc
        dx = pts_x[i] - xc
        if dt * dt + dx * dx <= r2:
            acc += pts_w[i]
    for k in range(lines.shape[0]):
        t0, x0, t1, s, dens = lines[k, 0], lines[k, 1], lines[k, 2], lines[k, 3], lines[k, 4]
        # |(t0 + u - tc, x0 + s u - xc)|^2 <= r^2, u in [0, t1 - t0]
        a = 1.0 + s * s
        p = t0 - tc
        q = x0 - xc
        b = 2.0 * (p + s * q)
        c = p * p + q * q - r2
        disc = b * b - 4.0 * a * c
        if disc <= 0.0:
            continue
        sq = np.sqrt(disc)
        u0 = max((-b - sq) / (2.0 * a), 0.0)
        u1 = min((-b + sq) / (2.0 * a), t1 - t0)
        if u1 > u0:
            acc += dens * (u1 - u0)
    return acc


@dataclass
class MeasureTX:
    """Nonnegative measure on ``(t, x)``: atoms ``(t, x, w)`` and lines.

    A line row is ``(t0, x0, t1, speed, density)`` and carries
    ``density * dt`` along ``x = x0 + speed (t - t0)``.
    """

    atoms: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    lines: np.ndarray = field(default_factory=lambda: np.zeros((0, 5)))

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, float).reshape(-1, 3)
        self.lines = np.asarray(self.lines, float).reshape(-1, 5)

    def total(self):
        return float(self.atoms[:, 2].sum() + np.sum((self.lines[:, 2] - self.lines[:, 0]) * self.lines[:, 4]))

    def __add__(self, other):
        return MeasureTX(np.vstack([self.atoms, other.atoms]), np.vstack([self.lines, other.lines]))

    def ball_mass(self, t, x, r):
        """Exact mass of the closed Euclidean ball of radius ``r`` around ``(t, x)``."""
        return float(_ball_mass(_f64(self.atoms[:, 0]), _f64(self.atoms[:, 1]), _f64(self.atoms[:, 2]),
                                np.ascontiguousarray(self.lines), float(t), float(x), float(r)))
