"""Isentropic gas dynamics with cubic pressure ``p = rho^3 / 3``.

Riemann invariants are ``w = u - rho`` and ``z = u + rho`` with
characteristic speeds ``w`` and ``z``; in smooth regions each of them solves
Burgers' equation.  Kinetic moments use the half-weighted indicator
``g = 1[w <= v <= z]``::

    rho = 1/2 int g,   m = 1/2 int v g,   m^2/rho + rho^3/3 = 1/2 int v^2 g.

Front tracking keeps every front Rankine-Hugoniot exact; rarefactions are
chains of small expansive fronts of invariant step ``dv`` so mass and momentum
are conserved to rounding.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy.optimize import brentq

from . import flux as fluxmod
from .errors import NumericalError, ValidationError
from .scalar import KIND_CODES, FrontTrackingSolution, PiecewiseConstantFn

C_DEFAULT, M_DEFAULT = 0.2, 10.0
NEWTON_TOL, NEWTON_MAXIT = 1e-12, 50


@dataclass(frozen=True)
class EulerState:
    rho: float
    m: float

    @property
    def u(self):
        return self.m / self.rho

    @property
    def w(self):
        return self.u - self.rho

    @property
    def z(self):
        return self.u + self.rho

    @classmethod
    def from_wz(cls, w, z):
        rho = 0.5 * (z - w)
        return cls(float(rho), float(rho * 0.5 * (z + w)))

    def check(self, c=C_DEFAULT, M=M_DEFAULT, keyword="domain", where=""):
        if not self.rho >= c:
            raise ValidationError("vacuum guard" if keyword == "vacuum guard" else keyword,
                                  f"{where}density {self.rho:.6g} below {c}")
        if np.hypot(self.rho, self.m) > M:
            raise ValidationError(keyword, f"{where}|(rho, m)| = {np.hypot(self.rho, self.m):.6g} exceeds {M}")
        return self


def riemann_invariants(rho, m, c=C_DEFAULT):
    """``(w, z)`` of conserved states (scalars or arrays); rejects ``rho < c``."""
    rho = np.asarray(rho, float)
    m = np.asarray(m, float)
    if np.any(rho < c):
        i = int(np.argmax(np.atleast_1d(rho) < c))
        raise ValidationError("vacuum guard", f"row {i}: density {np.atleast_1d(rho)[i]:.6g} below {c}")
    u = m / rho
    return u - rho, u + rho


def conserved_from_invariants(w, z):
    w = np.asarray(w, float)
    z = np.asarray(z, float)
    rho = 0.5 * (z - w)
    return rho, rho * 0.5 * (z + w)


def euler_flux_energy(rho, m, c=C_DEFAULT):
    """Flux ``(m, m^2/rho + rho^3/3)``, energy and energy flux."""
    riemann_invariants(rho, m, c)
    rho = np.asarray(rho, float)
    m = np.asarray(m, float)
    f = (m, m * m / rho + rho ** 3 / 3)
    eta = 0.5 * m * m / rho + rho ** 3 / 6
    q = 0.5 * m ** 3 / rho ** 2 + 0.5 * m * rho ** 2
    return f, eta, q


def g_moments(w, z):
    """Half-weighted v-moments 0..3 of ``1[w <= v <= z]``."""
    return tuple((z ** (k + 1) - w ** (k + 1)) / (2 * (k + 1)) for k in range(4))


# -- shocks ----------------------------------------------------------------------------

def _S(r, ra):
    return np.sqrt((r * r + r * ra + ra * ra) / (3 * r * ra))


def _dS(r, ra):
    return (r * r - ra * ra) / (3 * r * r * ra) / (2 * _S(r, ra))


def _hugoniot_state(A, target, family, c):
    """State on the ``family`` Hugoniot branch through ``A`` with invariant ``target``.

    Family 1 fixes ``w``, family 2 fixes ``z``.  Damped Newton in ``rho``.
    """
    ra, ua = A.rho, A.u
    sgn = -1.0 if family == 1 else 1.0
    ref = A.w if family == 1 else A.z
    if target == ref:
        return A
    r = max(ra - sgn * (target - ref) * 0.5, 0.5 * c)       # linearized guess
    scale = 1.0 + abs(target) + abs(ref)

    def phi(r):
        return ua + sgn * (r - ra) * _S(r, ra) + sgn * r - target

    for _ in range(NEWTON_MAXIT):
        val = phi(r)
        if abs(val) <= NEWTON_TOL * scale * 1e-3:
            break
        d = sgn * (_S(r, ra) + (r - ra) * _dS(r, ra) + 1.0)
        step = -val / d
        lam = 1.0
        while r + lam * step <= 0.25 * c or abs(phi(r + lam * step)) > abs(val) * (1 - 0.25 * lam):
            lam *= 0.5
            if lam < 1e-8:
                break
        r = r + lam * step
    else:
        if abs(phi(r)) > NEWTON_TOL * scale:
            raise NumericalError("locus", f"Hugoniot solve did not converge (target {target})")
    if abs(phi(r)) > NEWTON_TOL * scale:
        raise NumericalError("locus", f"Hugoniot residual {abs(phi(r)):.3e}")
    u = ua + sgn * (r - ra) * _S(r, ra)
    return EulerState(float(r), float(r * u))


def shock_speed(A, B, family=1):
    if B.rho == A.rho:
        return A.w if family == 1 else A.z
    return (B.m - A.m) / (B.rho - A.rho)


def rh_residual(A, B, sigma):
    """The two Rankine-Hugoniot equations written in invariants."""
    wm, zm, wp, zp = A.w, A.z, B.w, B.z
    r1 = (zp ** 2 - zm ** 2) / 2 - sigma * (zp - zm) - ((wp ** 2 - wm ** 2) / 2 - sigma * (wp - wm))
    r2 = (zp ** 3 - zm ** 3) / 3 - sigma * (zp ** 2 - zm ** 2) / 2 - ((wp ** 3 - wm ** 3) / 3 - sigma * (wp ** 2 - wm ** 2) / 2)
    return float(r1), float(r2)


def energy_dissipation(A, B, sigma):
    """``d_E = [z^4/4 - sigma z^3/3] - [w^4/4 - sigma w^3/3]``, brackets right minus left."""
    wm, zm, wp, zp = A.w, A.z, B.w, B.z
    dz = (zp ** 4 - zm ** 4) / 4 - sigma * (zp ** 3 - zm ** 3) / 3
    dw = (wp ** 4 - wm ** 4) / 4 - sigma * (wp ** 3 - wm ** 3) / 3
    return float(dz - dw)


def hugoniot_solve(left, family, strength, c=C_DEFAULT, M=M_DEFAULT):
    """Right state of an admissible shock of given strength (invariant drop).

    Returns ``(right, sigma, d_E)``.  Zero strength returns the left state and
    the characteristic speed.
    """
    if family not in (1, 2):
        raise ValidationError("family", "family must be 1 or 2")
    if strength < 0:
        raise ValidationError("locus", "strength must be nonnegative for an admissible shock")
    if strength == 0:
        return left, (left.w if family == 1 else left.z), 0.0
    target = (left.w if family == 1 else left.z) - strength
    right = _hugoniot_state(left, target, family, c)
    right.check(c, M, "domain")
    sigma = shock_speed(left, right, family)
    return right, sigma, energy_dissipation(left, right, sigma)


# -- Riemann solver --------------------------------------------------------------------

@dataclass
class Wave:
    family: int
    kind: str                  # "shock" or "rarefaction"
    left: EulerState
    right: EulerState
    speed: float
    d_E: float


@dataclass
class EulerWaveFan:
    left: EulerState
    middle: EulerState
    right: EulerState
    waves: list

    @property
    def speeds(self):
        return np.array([wv.speed for wv in self.waves])


def _chain(A, target, family, dv, c, collect):
    """Walk the expansive Hugoniot branch from ``A`` in steps of ``dv`` towards ``target``."""
    ref = A.w if family == 1 else A.z
    n = int(np.floor((target - ref) / dv * (1 + 1e-12)))
    cur = A
    levels = [ref + (k + 1) * dv for k in range(n)]
    if target - (ref + n * dv) > 1e-14 * (1 + abs(target)):
        levels.append(target)
    for lv in levels:
        nxt = _hugoniot_state(cur, lv, family, c)
        if collect is not None:
            s = shock_speed(cur, nxt, family)
            collect.append(Wave(family, "rarefaction", cur, nxt, s, energy_dissipation(cur, nxt, s)))
        cur = nxt
    return cur


def _forward1(L, wm, dv, c, collect=None):
    if wm <= L.w:
        B = _hugoniot_state(L, wm, 1, c)
        if collect is not None and wm < L.w:
            s = shock_speed(L, B, 1)
            collect.append(Wave(1, "shock", L, B, s, energy_dissipation(L, B, s)))
        return B
    return _chain(L, wm, 1, dv, c, collect)


def _backward2(R, zm, dv, c, collect=None):
    """State ``M`` joined to ``R`` by a 2-wave with ``z(M) = zm``."""
    if zm >= R.z:
        M = _hugoniot_state(R, zm, 2, c)
        if collect is not None and zm > R.z:
            s = shock_speed(M, R, 2)
            collect.append(Wave(2, "shock", M, R, s, energy_dissipation(M, R, s)))
        return M
    # rarefaction: from M the chain climbs to R; build it backwards from R
    ref = R.z
    n = int(np.floor((ref - zm) / dv * (1 + 1e-12)))
    levels = [ref - (k + 1) * dv for k in range(n)]
    if (ref - n * dv) - zm > 1e-14 * (1 + abs(zm)):
        levels.append(zm)
    cur = R
    waves = []
    for lv in levels:
        prev = _hugoniot_state(cur, lv, 2, c)
        if collect is not None:
            s = shock_speed(prev, cur, 2)
            waves.append(Wave(2, "rarefaction", prev, cur, s, energy_dissipation(prev, cur, s)))
        cur = prev
    if collect is not None:
        collect.extend(reversed(waves))
    return cur


def solve_riemann_euler(left, right, dv=None, c=C_DEFAULT, M=M_DEFAULT):
    """Exact (``dv=None``) or chain-discretized Riemann solution.

    With ``dv=None`` rarefaction branches use ``z`` (resp. ``w``) constant and
    waves are reported as fans; otherwise rarefactions are chains of expansive
    Hugoniot fronts of invariant step ``dv``.
    """
    left.check(c, M, "vacuum")
    right.check(c, M, "vacuum")
    if left == right:
        return EulerWaveFan(left, left, right, [])
    exact = dv is None
    step = np.inf if exact else dv

    def f1(wm):
        if exact and wm > left.w:
            return EulerState.from_wz(wm, left.z)
        return _forward1(left, wm, step, c)

    def b2(zm):
        if exact and zm < right.z:
            return EulerState.from_wz(right.w, zm)
        return _backward2(right, zm, step, c)

    def G(wm):
        return b2(f1(wm).z).w - wm

    lo, hi = min(left.w, right.w), max(left.w, right.w)
    span = max(hi - lo, 1e-3)
    a, b = lo - span, hi + span
    for _ in range(30):
        try:
            ga, gb = G(a), G(b)
        except NumericalError:
            ga = gb = np.nan
        if ga * gb < 0:
            break
        a, b = a - span, b + span
        span *= 2
    else:
        raise NumericalError("locus", "could not bracket the middle state")
    wm = brentq(G, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    mid1 = f1(wm)
    if mid1.rho < c:
        raise ValidationError("vacuum", f"middle state density {mid1.rho:.6g} below {c}")
    waves = []
    if exact:
        if wm < left.w:
            s = shock_speed(left, mid1, 1)
            waves.append(Wave(1, "shock", left, mid1, s, energy_dissipation(left, mid1, s)))
        elif wm > left.w:
            waves.append(Wave(1, "rarefaction", left, mid1, 0.5 * (left.w + wm), 0.0))
        mid2 = b2(mid1.z)
        if mid1.z > right.z:
            s = shock_speed(mid2, right, 2)
            waves.append(Wave(2, "shock", mid2, right, s, energy_dissipation(mid2, right, s)))
        elif mid1.z < right.z:
            waves.append(Wave(2, "rarefaction", mid2, right, 0.5 * (mid1.z + right.z), 0.0))
    else:
        _forward1(left, wm, step, c, waves)
        mid2 = _backward2(right, mid1.z, step, c, waves)
        # the two curves meet up to rounding; make the shared state identical
        n1 = sum(1 for wv in waves if wv.family == 1)
        if n1 < len(waves):
            first2 = waves[n1]
            waves[n1] = Wave(2, first2.kind, mid1, first2.right, shock_speed(mid1, first2.right, 2),
                             energy_dissipation(mid1, first2.right, shock_speed(mid1, first2.right, 2)))
    return EulerWaveFan(left, mid1, right, _prune(waves, left, right))


def _prune(waves, left, right, rel=1e-11):
    """Drop waves whose invariant jumps are at rounding level and re-stitch the states."""
    scale = 1.0 + abs(left.w) + abs(left.z) + abs(right.w) + abs(right.z)
    keep = [wv for wv in waves
            if abs(wv.right.w - wv.left.w) + abs(wv.right.z - wv.left.z) > rel * scale]
    if not keep:
        return []
    out = []
    prev = left
    for k, wv in enumerate(keep):
        r = right if k == len(keep) - 1 else wv.right
        out.append(Wave(wv.family, wv.kind, prev, r, wv.speed, wv.d_E))
        prev = r
    return out


# -- front tracking --------------------------------------------------------------------

@dataclass
class EulerFrontSolution:
    """Front arrays of a tracked solution; ``rho/m`` left and right of each front."""

    T: float
    dv: float
    t_birth: np.ndarray
    t_death: np.ndarray
    x_birth: np.ndarray
    speed: np.ndarray
    left: np.ndarray          # (n, 2) rho, m
    right: np.ndarray
    family: np.ndarray
    kind: np.ndarray          # KIND_CODES
    d_E: np.ndarray
    far_left: EulerState
    far_right: EulerState
    events: list = field(default_factory=list)
    c: float = C_DEFAULT

    @property
    def n_fronts(self):
        return self.t_birth.size

    def position(self, ids, t):
        return self.x_birth[ids] + self.speed[ids] * (t - self.t_birth[ids])

    def active(self, t):
        mask = (self.t_birth <= 0) & (self.t_death >= 0) if t <= 0 else (self.t_birth < t) & (self.t_death >= t)
        ids = np.nonzero(mask)[0]
        return ids[np.lexsort((self.speed[ids], self.position(ids, t)))]

    def snapshot(self, t):
        """``(breakpoints, rho, m)`` with one more value than breakpoints."""
        ids = self.active(t)
        if ids.size == 0:
            return np.zeros(0), np.array([self.far_left.rho]), np.array([self.far_left.m])
        pos = self.position(ids, t)
        rho = np.concatenate([[self.left[ids[0], 0]], self.right[ids, 0]])
        m = np.concatenate([[self.left[ids[0], 1]], self.right[ids, 1]])
        return pos, rho, m

    def integral(self, t, a, b):
        """``(int rho, int m)`` over ``[a, b]`` at time ``t``."""
        pos, rho, m = self.snapshot(t)
        fr = PiecewiseConstantFn(pos, rho, merge=False) if _strict(pos) else _pcf(pos, rho)
        fm = PiecewiseConstantFn(pos, m, merge=False) if _strict(pos) else _pcf(pos, m)
        return fr.integral(a, b), fm.integral(a, b)

    def shock_ids(self):
        return np.nonzero(self.kind == KIND_CODES["shock"])[0]

    def front_tolerance(self):
        return 1e-9 * max(1.0, float(np.max(np.abs(self.x_birth))) if self.n_fronts else 1.0)

    def _view(self, which):
        L = self.left[:, 0], self.left[:, 1]
        R = self.right[:, 0], self.right[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            wl, zl = L[1] / L[0] - L[0], L[1] / L[0] + L[0]
            wr, zr = R[1] / R[0] - R[0], R[1] / R[0] + R[0]
        ul, ur = (wl, wr) if which == "w" else (zl, zr)
        fl = self.far_left.w if which == "w" else self.far_left.z
        fr = self.far_right.w if which == "w" else self.far_right.z
        vals = np.concatenate([ul, ur, [fl, fr]])
        lo = np.floor(vals.min() / self.dv) * self.dv - self.dv
        hi = np.ceil(vals.max() / self.dv) * self.dv + self.dv
        base = fluxmod.burgers(domain=(float(lo), float(hi)))
        kind = np.where(ul > ur, KIND_CODES["shock"], np.where(ul < ur, KIND_CODES["rarefaction"], KIND_CODES["contact"]))
        init_ids = np.nonzero(self.t_birth <= 0)[0]
        init_ids = init_ids[np.argsort(self.x_birth[init_ids], kind="stable")]
        if init_ids.size:
            xs = self.x_birth[init_ids]
            vv = np.concatenate([[ul[init_ids[0]]], ur[init_ids]])
            keep = np.concatenate([np.diff(xs) > 0, [True]])
            initial = PiecewiseConstantFn(xs[keep], np.concatenate([[vv[0]], vv[1:][keep]]))
        else:
            initial = PiecewiseConstantFn([], [fl])
        return FrontTrackingSolution(base.linearized(self.dv), base, self.T, self.dv, self.t_birth, self.t_death,
                                     self.x_birth, self.speed, ul.astype(float), ur.astype(float),
                                     kind.astype(np.int64), self.t_birth.copy(), self.x_birth.copy(), fl, fr,
                                     [], initial)

    def w_view(self):
        """The invariant ``w`` as a scalar front-tracking object (Burgers flux, true front speeds)."""
        return self._view("w")

    def z_view(self):
        return self._view("z")


def _strict(pos):
    return pos.size == 0 or np.all(np.diff(pos) > 0)


def _pcf(pos, vals):
    keep = np.concatenate([np.diff(pos) > 0, [True]])
    return PiecewiseConstantFn(pos[keep], np.concatenate([[vals[0]], vals[1:][keep]]), merge=False)


class _F:
    __slots__ = ("id", "t0", "x0", "s", "L", "R", "fam", "kind", "dE", "alive")

    def __init__(self, fid, t0, x0, wv):
        self.id, self.t0, self.x0, self.s = fid, t0, x0, wv.speed
        self.L, self.R, self.fam, self.kind, self.dE = wv.left, wv.right, wv.family, wv.kind, wv.d_E
        self.alive = True

    def x(self, t):
        return self.x0 + self.s * (t - self.t0)


def front_track_euler(breakpoints, states, T, dv=1.0 / 256, c=C_DEFAULT, M=M_DEFAULT, max_fronts=20000,
                      time_tol=1e-12):
    """Front tracking for piecewise-constant data ``states`` (``len(breakpoints) + 1`` of them)."""
    bp = np.asarray(breakpoints, float)
    if len(states) != bp.size + 1:
        raise ValidationError("data", "need len(states) == len(breakpoints) + 1")
    if bp.size and np.any(np.diff(bp) <= 0):
        raise ValidationError("data", "breakpoints must be strictly increasing")
    for i, s in enumerate(states):
        s.check(c, M, "vacuum guard", where=f"row {i}: ")
    all_fronts = []
    events = []

    def spawn(t, x, fan):
        out = []
        for wv in fan.waves:
            f = _F(len(all_fronts), t, x, wv)
            all_fronts.append(f)
            out.append(f)
        if len(all_fronts) > max_fronts:
            raise NumericalError("complexity budget", f"more than {max_fronts} fronts")
        return out

    order = []
    for i, x in enumerate(bp):
        if states[i] != states[i + 1]:
            order.extend(spawn(0.0, float(x), solve_riemann_euler(states[i], states[i + 1], dv, c, M)))
    heap = []
    death = {}

    def schedule(a, b, now):
        if a.s > b.s:
            tc = a.t0 + (b.x(a.t0) - a.x0) / (a.s - b.s) if a.t0 >= b.t0 else b.t0 + (b.x0 - a.x(b.t0)) / (a.s - b.s)
            tc = max(tc, now)
            if tc <= T:
                heapq.heappush(heap, (tc, a.x(tc), a.id, b.id))

    for a, b in zip(order[:-1], order[1:]):
        schedule(a, b, 0.0)
    while heap:
        t, x, ia, ib = heapq.heappop(heap)
        a, b = all_fronts[ia], all_fronts[ib]
        if not (a.alive and b.alive):
            continue
        k = order.index(a)
        if k + 1 >= len(order) or order[k + 1] is not b:
            continue
        # gather every front meeting at (t, x)
        tol = time_tol * (1 + abs(x))
        lo, hi = k, k + 1
        while lo > 0 and abs(order[lo - 1].x(t) - x) <= 1e3 * tol:
            lo -= 1
        while hi + 1 < len(order) and abs(order[hi + 1].x(t) - x) <= 1e3 * tol:
            hi += 1
        group = order[lo:hi + 1]
        for f in group:
            f.alive = False
        L, R = group[0].L, group[-1].R
        new = spawn(t, x, solve_riemann_euler(L, R, dv, c, M)) if L != R else []
        for f in group:
            death[f.id] = t
        events.append((t, x, [f.id for f in group], [f.id for f in new]))
        order[lo:hi + 1] = new
        # reschedule neighbours
        lft = order[lo - 1] if lo > 0 else None
        seq = ([lft] if lft is not None else []) + new
        nxt = lo + len(new)
        if nxt < len(order):
            seq.append(order[nxt])
        for p, q in zip(seq[:-1], seq[1:]):
            schedule(p, q, t)
    n = len(all_fronts)
    t_death = np.full(n, T)
    for fid, t in death.items():
        t_death[fid] = t
    return EulerFrontSolution(
        T=float(T), dv=float(dv),
        t_birth=np.array([f.t0 for f in all_fronts]), t_death=t_death,
        x_birth=np.array([f.x0 for f in all_fronts]), speed=np.array([f.s for f in all_fronts]),
        left=np.array([[f.L.rho, f.L.m] for f in all_fronts]).reshape(n, 2),
        right=np.array([[f.R.rho, f.R.m] for f in all_fronts]).reshape(n, 2),
        family=np.array([f.fam for f in all_fronts], np.int64),
        kind=np.array([KIND_CODES[f.kind] for f in all_fronts], np.int64),
        d_E=np.array([f.dE for f in all_fronts]),
        far_left=states[0], far_right=states[-1], events=events, c=c)


def conservation_error(solution, window, times=None):
    """Worst drift of ``(int rho, int m)`` over ``window`` after correcting for boundary fluxes.

    The window must contain every front for the whole run; the far states
    then carry constant boundary fluxes.
    """
    a, b = window
    times = np.linspace(0, solution.T, 5) if times is None else np.asarray(times, float)
    fa = np.array(euler_flux_energy(solution.far_left.rho, solution.far_left.m, solution.c)[0], float)
    fb = np.array(euler_flux_energy(solution.far_right.rho, solution.far_right.m, solution.c)[0], float)
    base = np.array(solution.integral(0.0, a, b))
    worst = 0.0
    for t in times:
        got = np.array(solution.integral(t, a, b))
        worst = max(worst, float(np.max(np.abs(got - (base + t * (fa - fb))))))
    return worst


# -- shock classification ------------------------------------------------------------

@dataclass
class ShockReport:
    family: int
    strength: float
    other_jump: float
    speed_offset: float
    d_E: float
    rh: tuple

    def ratios(self):
        """Cubic diagnostics: the three quantities over strength^3 (zero strength gives zeros)."""
        if self.strength == 0:
            return 0.0, 0.0, 0.0
        s3 = self.strength ** 3
        return self.other_jump / s3, self.speed_offset / s3, abs(self.d_E) / s3


def shock_classify(left, right, sigma, tol=1e-12):
    """Family, strength and cubic diagnostics of a shock ``left -> right`` moving at ``sigma``."""
    dw, dz = right.w - left.w, right.z - left.z
    d = energy_dissipation(left, right, sigma)
    if d > tol:
        raise ValidationError("admissibility", f"energy is produced: d_E = {d:.3e}")
    if abs(dw) >= abs(dz):
        fam, strength, other, mid = 1, -dw, abs(dz), 0.5 * (left.w + right.w)
    else:
        fam, strength, other, mid = 2, -dz, abs(dw), 0.5 * (left.z + right.z)
    if strength < 0:
        raise ValidationError("admissibility", "invariant of the principal family increases across the shock")
    return ShockReport(fam, float(strength), float(other), float(abs(sigma - mid)), d, rh_residual(left, right, sigma))


def sweep_shocks(family, strengths, left=None, c=C_DEFAULT, M=M_DEFAULT):
    """Table rows ``(strength, other-invariant jump, speed offset, d_E, rh residual)`` and fitted exponents."""
    left = EulerState.from_wz(0.0, 2.0) if left is None else left
    rows = []
    for s in strengths:
        right, sigma, d = hugoniot_solve(left, family, float(s), c, M)
        rep = shock_classify(left, right, sigma)
        rows.append((float(s), rep.other_jump, rep.speed_offset, rep.d_E, max(abs(r) for r in rep.rh)))
    rows = np.array(rows)
    fits = {}
    if len(strengths) >= 2 and np.all(rows[:, 0] > 0):
        ls = np.log(rows[:, 0])
        for k, name in ((1, "other_jump"), (2, "speed_offset"), (3, "d_E")):
            y = np.abs(rows[:, k])
            fits[name] = float(np.polyfit(ls, np.log(y), 1)[0]) if np.all(y > 0) else float("nan")
    return rows, fits


# -- kinetic function g ----------------------------------------------------------------

def _intervals(L, R):
    """``[g] = 1[w+ <= v <= z+] - 1[w- <= v <= z-]`` as (a, b, sign) rows."""
    return ((R.w, R.z, 1.0), (L.w, L.z, -1.0))


def kinetic_m_density(L, R, sigma, v):
    """Second v-antiderivative ``m(v) = int_{-inf}^v (v - s)(s - sigma)[g](s) ds`` on a front."""
    v = np.asarray(v, float)
    out = np.zeros_like(v)
    P = lambda s: -s ** 3 / 3 + (v + sigma) * s ** 2 / 2 - v * sigma * s
    for a, b, e in _intervals(L, R):
        top = np.minimum(v, b)
        out += np.where(v > a, e * (P(top) - P(a)), 0.0)
    return out


def _source_moment(L, R, sigma, psi):
    """``int (v - sigma)[g](v) psi(v) dv`` for a numpy Polynomial ``psi``."""
    from numpy.polynomial import Polynomial
    P = (Polynomial([-sigma, 1.0]) * psi).integ()
    return sum(e * (P(b) - P(a)) for a, b, e in _intervals(L, R))


def _state(arr):
    return EulerState(float(arr[0]), float(arr[1]))


@dataclass
class GBalanceReport:
    residual: float              # worst |<source, phi psi> - <m, phi psi''>| over the dictionary
    max_m: float                 # largest value of m on shock fronts (should be <= 0)
    m_mass: float                # total variation of the m-measure
    lines: np.ndarray            # (t0, x0, t1, speed, mass per unit time) on shock fronts
    per_front_max: np.ndarray


def kinetic_g_balance(solution, dictionary, psis=None, n_v=256):
    """Check ``g_t + v g_x = m_vv`` with ``m`` rebuilt on the shock fronts only.

    The left side is assembled from every front; the right side pairs the
    sampled ``m`` density (composite Gauss in v) with ``psi''``.  The gap is
    the contribution of the expansive chain fronts that stand in for smooth
    rarefactions.
    """
    from numpy.polynomial import Polynomial
    from .lagrangian import front_phi_integrals
    psis = [Polynomial([0, 0, 1.0]), Polynomial([0, 0, 0, 1.0]), Polynomial([0, 0, 0, 0, 1.0])] if psis is None else psis
    shocks = solution.kind == KIND_CODES["shock"]
    n = solution.n_fronts
    Ls = [_state(solution.left[i]) for i in range(n)]
    Rs = [_state(solution.right[i]) for i in range(n)]
    # m on a composite Gauss grid per shock
    xg, wg = legendre.leggauss(8)
    per_max = np.full(n, -np.inf)
    mass_rate = np.zeros(n)
    mgrid = {}
    for i in np.nonzero(shocks)[0]:
        lo = min(Ls[i].w, Rs[i].w)
        hi = max(Ls[i].z, Rs[i].z)
        edges = np.linspace(lo, hi, n_v // 8 + 1)
        vv = (0.5 * (edges[1:] - edges[:-1])[:, None] * (xg[None, :] + 1) + edges[:-1, None]).ravel()
        ww = (0.5 * (edges[1:] - edges[:-1])[:, None] * wg[None, :]).ravel()
        mv = kinetic_m_density(Ls[i], Rs[i], solution.speed[i], vv)
        mgrid[i] = (vv, ww, mv)
        per_max[i] = float(mv.max())
        mass_rate[i] = float(np.sum(ww * np.abs(mv)))
    worst = 0.0
    for tf in dictionary:
        sel, integ = front_phi_integrals(solution, tf)
        for psi in psis:
            d2 = psi.deriv(2)
            lhs = sum(I * _source_moment(Ls[i], Rs[i], solution.speed[i], psi) for i, I in zip(sel, integ))
            rhs = 0.0
            for i, I in zip(sel, integ):
                if i in mgrid:
                    vv, ww, mv = mgrid[i]
                    rhs += I * float(np.sum(ww * mv * d2(vv)))
            worst = max(worst, abs(lhs - rhs))
    ids = np.nonzero(shocks)[0]
    lines = np.column_stack([solution.t_birth[ids], solution.x_birth[ids], solution.t_death[ids],
                             solution.speed[ids], mass_rate[ids]])
    life = solution.t_death - solution.t_birth
    return GBalanceReport(float(worst), float(per_max[ids].max()) if ids.size else 0.0,
                          float(np.sum(mass_rate * life)), lines, per_max)


def m_marginal_concentration(report, solution, r, n_per_line=64):
    """Fraction of the m-marginal within horizontal distance ``r`` of the shock fronts."""
    from .diagnostics import distance_to_fronts
    if report.lines.shape[0] == 0 or report.m_mass == 0:
        return 1.0
    pts_t, pts_x, pts_w = [], [], []
    for t0, x0, t1, s, dens in report.lines:
        tt = t0 + (np.arange(n_per_line) + 0.5) * (t1 - t0) / n_per_line
        pts_t.append(tt)
        pts_x.append(x0 + s * (tt - t0))
        pts_w.append(np.full(n_per_line, dens * (t1 - t0) / n_per_line))
    t, x, w = (np.concatenate(a) for a in (pts_t, pts_x, pts_w))
    view = solution.w_view()
    d = distance_to_fronts(view, t, x, np.nonzero(solution.kind == KIND_CODES["shock"])[0])
    return float(w[d <= r].sum() / w.sum())


# -- quasi-entropy checks -----------------------------------------------------------------

def _burgers_pairs():
    """``(name, eta, q)`` with ``q' = v eta'``."""
    return [
        ("v", lambda v: v, lambda v: v ** 2 / 2),
        ("v^2", lambda v: v ** 2, lambda v: 2 * v ** 3 / 3),
        ("v^3", lambda v: v ** 3, lambda v: 3 * v ** 4 / 4),
        ("v^4", lambda v: v ** 4, lambda v: 4 * v ** 5 / 5),
        ("exp", np.exp, lambda v: (v - 1) * np.exp(v) + 1),
    ]


def quasi_entropy_check(view, window=None, pairs=None):
    """Total variation and signed total of ``eta(w)_t + q(w)_x`` for Burgers pairs.

    Per front the measure is ``([q] - s [eta])`` times arc time; ``window``
    restricts to fronts born inside an x-interval.
    """
    pairs = _burgers_pairs() if pairs is None else pairs
    life = view.t_death - view.t_birth
    sel = np.ones(view.n_fronts, bool)
    if window is not None:
        sel &= (view.x_birth >= window[0]) & (view.x_birth <= window[1])
    rows = {}
    for name, eta, q in pairs:
        rate = (q(view.u_right) - q(view.u_left)) - view.speed * (eta(view.u_right) - eta(view.u_left))
        val = rate * life
        rows[name] = {"total_variation": float(np.sum(np.abs(val[sel]))), "signed": float(np.sum(val[sel])),
                      "shock_part": float(np.sum(np.abs(val[sel & (view.kind == KIND_CODES["shock"])])))}
    return rows


@dataclass
class SignedDecomposition:
    family: np.ndarray
    mu1_min: np.ndarray          # min of the chord-gap density over its interval (>= 0 expected)
    mu0_mass: np.ndarray         # |mu0~| per unit time in the principal view
    other_mass: np.ndarray       # |sigma0~| per unit time in the other view
    energy_rate: np.ndarray      # |d_E| / 4 per unit time
    constant: float              # max (mu0 + other) / energy_rate

    @property
    def single_signed(self):
        return bool(np.all(self.mu1_min >= -1e-14))


def signed_decomposition_check(solution, n_v=65):
    """Split each shock's kinetic source into a signed chord-gap part and a speed-offset remainder.

    In the principal invariant ``a`` (w for 1-shocks, z for 2-shocks) the
    source ``-(v - sigma) 1_(a+, a-)`` becomes ``d/dv mu1~ + mu0~`` with
    ``mu1~ = (v - a+)(a- - v)/2 >= 0`` and ``mu0~ = (sigma - bar sigma) 1_(a+, a-)``;
    the other invariant's source is kept whole.
    """
    ids = solution.shock_ids()
    fam = solution.family[ids]
    mu1_min = np.zeros(ids.size)
    mu0 = np.zeros(ids.size)
    oth = np.zeros(ids.size)
    er = np.zeros(ids.size)
    for k, i in enumerate(ids):
        L, R = _state(solution.left[i]), _state(solution.right[i])
        s = solution.speed[i]
        if fam[k] == 1:
            am, ap, bm, bp = L.w, R.w, L.z, R.z
        else:
            am, ap, bm, bp = L.z, R.z, L.w, R.w
        v = np.linspace(ap, am, n_v)
        mu1_min[k] = float(np.min((v - ap) * (am - v) / 2))
        mu0[k] = abs(s - 0.5 * (ap + am)) * abs(am - ap)
        lo, hi = sorted((bm, bp))
        # int_lo^hi |v - sigma| dv
        oth[k] = abs(_abs_int(lo - s, hi - s))
        er[k] = abs(solution.d_E[i]) / 4
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(er > 0, (mu0 + oth) / er, 0.0)
    return SignedDecomposition(fam, mu1_min, mu0, oth, er, float(ratio.max()) if ratio.size else 0.0)


def _abs_int(a, b):
    """``int_a^b |y| dy`` for ``a <= b``."""
    f = lambda y: 0.5 * y * abs(y)
    return f(b) - f(a)
