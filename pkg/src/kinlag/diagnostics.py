"""Structure of the kinetic measures of front-tracked solutions.

Marginals on ``(t, x)``, density ratios on shrinking balls, mean oscillation,
the jump identity for entropy dissipation, concentration on the front set,
envelope barriers and the source-structure test for ``mu_0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import optional_njit
from .flux import nondegeneracy_h
from .measures import AtomicMeasure3, MeasureTX
from .scalar import KIND_CODES, SHOCK


# -- marginals ----------------------------------------------------------------------

def project_marginals(mu0, mu1):
    """``(nu_0, nu_1)``: ``(t, x)``-marginals of ``|mu_0|`` and ``|mu_1|``."""
    return mu0.marginal_tx(), mu1.marginal_tx()


def front_kinetic_density(flux_df, ul, ur, s, v, n_gauss=24):
    """Exact ``mu_1`` v-density per unit time on a front: ``int_lo^v (f'(w) - s)(chi_R - chi_L) dw``.

    ``chi_R - chi_L`` is ``+1`` on ``(ul, ur)`` when ``ul < ur`` and ``-1`` on
    ``(ur, ul)`` otherwise.
    """
    v = np.atleast_1d(np.asarray(v, float))
    lo, hi = min(ul, ur), max(ul, ur)
    sgn = 1.0 if ur > ul else -1.0
    top = np.clip(v, lo, hi)
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    half = 0.5 * (top - lo)
    pts = lo + half[:, None] * (x[None, :] + 1)
    vals = np.sum(w[None, :] * (flux_df(pts) - s), axis=1) * half
    return sgn * vals


def exact_front_marginal(solution, fronts=None, flux_df=None, n_v=64):
    """Line measure on fronts with density ``int |mu_1(v)| dv`` per unit time (exact-trace version of ``nu_1``)."""
    flux_df = solution.flux.df if flux_df is None else flux_df
    ids = solution.shock_ids() if fronts is None else np.asarray(fronts)
    rows = []
    for f in ids:
        lo, hi = sorted((solution.u_left[f], solution.u_right[f]))
        if hi <= lo:
            continue
        xg, wg = np.polynomial.legendre.leggauss(n_v)
        vs = lo + 0.5 * (hi - lo) * (xg + 1)
        dens = np.abs(front_kinetic_density(flux_df, solution.u_left[f], solution.u_right[f], solution.speed[f], vs))
        rows.append((solution.t_birth[f], solution.x_birth[f], solution.t_death[f], solution.speed[f],
                     0.5 * (hi - lo) * np.sum(wg * dens)))
    return MeasureTX(np.zeros((0, 3)), np.array(rows).reshape(-1, 5))


def density_ratio(nu, point, radii):
    """``nu(B_r(point)) / r`` for each radius (exact ball masses)."""
    t, x = point
    return np.array([nu.ball_mass(t, x, r) / r for r in radii])


def probe_radii(diameter, n=7):
    """Geometric radii ``r_0 2^-k`` with ``r_0 = diameter/8``."""
    return diameter / 8 * 2.0 ** -np.arange(n)


# -- mean oscillation -----------------------------------------------------------------

def _u_on_grid(solution, tt, xx, fans):
    from .scalar import fan_reconstruction
    out = np.empty_like(xx)
    for i, t in enumerate(tt):
        out[i] = fan_reconstruction(solution, t, xx[i]) if fans else solution.snapshot(t)(xx[i])
    return out


def vmo_test(solution, point, radii, n=128, fans=True):
    """Mean oscillation ``r^-2 int_{Q_r} |u - mean|`` on squares ``Q_r`` of half-side ``r``.

    Integrals use an ``n x n`` midpoint grid on each square (the integrand is
    piecewise constant with straight interfaces, so the error is O(1/n)).
    Returns ``(oscillations, fitted log-log slope)``; a positive slope means
    the oscillation vanishes as ``r -> 0``.
    """
    t0, x0 = point
    osc = []
    for r in radii:
        s = (np.arange(n) + 0.5) / n * 2 * r - r
        tt = t0 + s
        tt = tt[(tt > 0) & (tt <= solution.T)]
        xx = np.broadcast_to(x0 + s, (tt.size, n))
        u = _u_on_grid(solution, tt, xx, fans)
        cell = (2 * r / n) ** 2
        # area outside [0, T] counts as missing: normalise by the full square
        mean = u.mean()
        osc.append(np.sum(np.abs(u - mean)) * cell / r ** 2)
    osc = np.array(osc)
    ok = osc > 1e-14
    slope = np.polyfit(np.log(np.asarray(radii)[ok]), np.log(osc[ok]), 1)[0] if ok.sum() >= 2 else np.inf
    return osc, float(slope)


# -- jump identity ----------------------------------------------------------------------

def front_dissipation(family, solution, d2eta, deta=None, fronts=None):
    """Per-front line density of ``mu_eta = -int eta'' dmu_1 + int eta' dmu_0`` from curve jumps.

    Uses the front id recorded at every reflection (and at quasi-entropy
    births/terminations).  Returns ``{front: rate per unit time}``.
    """
    t, x, vb, va, w, fr = family.jumps()
    sign = np.where(va < vb, 1.0, -1.0)
    lo, hi = np.minimum(va, vb), np.maximum(va, vb)
    # int_lo^hi eta'' = eta'(hi) - eta'(lo) when eta' is given, else Gauss
    if deta is not None:
        integ = deta(hi) - deta(lo)
    else:
        xg, wg = np.polynomial.legendre.leggauss(8)
        pts = lo[:, None] + 0.5 * (hi - lo)[:, None] * (xg[None, :] + 1)
        integ = 0.5 * (hi - lo) * np.sum(wg * d2eta(pts), axis=1)
    contrib = -sign * w * integ
    ids = solution.shock_ids() if fronts is None else np.asarray(fronts)
    totals = np.zeros(solution.n_fronts)
    np.add.at(totals, fr[fr >= 0], contrib[fr >= 0])
    if deta is not None:
        s_idx = family.ptr[:-1]
        e_idx = family.ptr[1:] - 1
        for idx, sg, vcol in ((s_idx, 1.0, s_idx), (e_idx, -1.0, e_idx - 1)):
            f = family.knot_front[idx]
            m = f >= 0
            np.add.at(totals, f[m], sg * family.weight[m] * deta(family.knots_v[vcol[m]]))
    life = solution.t_death - solution.t_birth
    return {int(f): float(totals[f] / life[f]) for f in ids if life[f] > 0}


def trace_dissipation(pair, ul, ur, s):
    """``(q(u+) - q(u-)) - s (eta(u+) - eta(u-))``."""
    return float(np.ravel((pair.q(ur) - pair.q(ul)) - s * (pair.eta(ur) - pair.eta(ul)))[0])


def jump_identity_check(family, solution, pair, fronts=None, min_life=0.0):
    """Max over fronts of ``|curve-based dissipation rate - trace formula|``."""
    ids = solution.shock_ids() if fronts is None else np.asarray(fronts)
    ids = [f for f in ids if solution.t_death[f] - solution.t_birth[f] > min_life]
    rates = front_dissipation(family, solution, pair.d2eta, pair.deta, ids)
    worst = 0.0
    table = []
    for f in ids:
        tr = trace_dissipation(pair, solution.u_left[f], solution.u_right[f], solution.speed[f])
        got = rates.get(int(f), 0.0)
        table.append((int(f), got, tr))
        worst = max(worst, abs(got - tr))
    return worst, table


# -- concentration -------------------------------------------------------------------

@optional_njit(cache=True)
def _front_distance(pt, px, tb, td, xb, sp, eps):
    n = pt.size
    out = np.full(n, np.inf)
    for i in range(n):
        t = pt[i]
        best = np.inf
        for f in range(tb.size):
            if t < tb[f] - eps or t > td[f] + eps:
                continue
            d = abs(px[i] - (xb[f] + sp[f] * (t - tb[f])))
            if d < best:
                best = d
        out[i] = best
    return out


def distance_to_fronts(solution, t, x, fronts=None):
    """Horizontal distance from points ``(t, x)`` to the chosen fronts (an upper bound for the Euclidean one)."""
    ids = solution.shock_ids() if fronts is None else np.asarray(fronts, dtype=np.int64)
    if ids.size == 0:
        return np.full(np.size(t), np.inf)
    return _front_distance(np.ascontiguousarray(t, float), np.ascontiguousarray(x, float),
                           solution.t_birth[ids], solution.t_death[ids], solution.x_birth[ids],
                           solution.speed[ids], 1e-12)


def concentration_report(nu, solution, radii, fronts=None):
    """Fraction of ``nu``'s mass within distance ``r`` of the front set, for each ``r``.

    ``nu`` is a :class:`MeasureTX` with atoms only; a zero measure counts as
    fully concentrated.
    """
    radii = np.atleast_1d(np.asarray(radii, float))
    w = nu.atoms[:, 2]
    total = w.sum()
    if total <= 0:
        return np.ones(radii.size)
    d = distance_to_fronts(solution, nu.atoms[:, 0], nu.atoms[:, 1], fronts)
    return np.array([w[d <= r].sum() / total for r in radii])


# -- envelope barrier ------------------------------------------------------------------

@dataclass
class EnvelopeResult:
    times: np.ndarray
    raw: np.ndarray
    envelope: np.ndarray
    degenerate: bool
    hyp_violation: float
    epi_violation: float


def _restricted_positions(family, t_bar, x_bar, interval, times, side):
    """Positions of curves of the restricted class on ``times`` (NaN when not in the class)."""
    a, b = interval
    pt0, pt1, px0, px1, pv, pw, cid = family.plateaus()
    n = len(family)
    # curve state at t_bar
    alive = (pt0 <= t_bar) & (pt1 > t_bar)
    x_bar_c = np.full(n, np.nan)
    v_bar_c = np.full(n, np.nan)
    dur = np.where(pt1 > pt0, pt1 - pt0, 1.0)
    x_at = px0 + (px1 - px0) * (t_bar - pt0) / dur
    x_bar_c[cid[alive]] = x_at[alive]
    v_bar_c[cid[alive]] = pv[alive]
    if side == "hypograph":
        member = (x_bar_c < x_bar) & (v_bar_c > a) & (v_bar_c < b)
    else:
        member = (x_bar_c > x_bar) & (v_bar_c > a) & (v_bar_c < b)
    # exit time from the interval: first plateau after t_bar whose level leaves it
    leave = np.full(n, np.inf)
    outside = (pt0 > t_bar) & ((pv <= a) | (pv >= b))
    np.minimum.at(leave, cid[outside], pt0[outside])
    ends = family.t_end
    leave = np.minimum(leave, ends)
    X = np.full((times.size, n), np.nan)
    keep = member[cid]
    for k, t in enumerate(times):
        sel = keep & (pt0 <= t) & (pt1 > t)
        c = cid[sel]
        ok = t < leave[c]
        X[k, c[ok]] = (px0[sel] + (px1[sel] - px0[sel]) * (t - pt0[sel]) / dur[sel])[ok]
    return X, family.weight


def envelope_curve(family_h, family_e, point, interval, lipschitz, n_t=200, tol=1e-9):
    """Upper Lipschitz envelope of the hypograph curves started left of ``x_bar``.

    Returns the raw sup, its smallest ``lipschitz``-Lipschitz majorant on a time
    grid over ``[t_bar, T)`` and the weights of curves violating the two
    barrier properties (hypograph curves above, epigraph curves of the
    symmetric class below).
    """
    t_bar, x_bar = point
    T = family_h.T
    times = t_bar + (T - t_bar) * np.arange(n_t) / n_t
    Xh, wh = _restricted_positions(family_h, t_bar, x_bar, interval, times, "hypograph")
    with np.errstate(all="ignore"):
        raw = np.nanmax(np.where(np.isnan(Xh), -np.inf, Xh), axis=1) if Xh.shape[1] else np.full(n_t, -np.inf)
    degenerate = not np.any(np.isfinite(raw))
    if degenerate:
        env = x_bar + lipschitz * (times - t_bar)
        raw = np.full(n_t, -np.inf)
    else:
        raw = np.where(np.isfinite(raw), raw, -np.inf)
        env = raw.copy()
        dt = np.diff(times)
        for k in range(1, n_t):
            env[k] = max(env[k], env[k - 1] - lipschitz * dt[k - 1])
        for k in range(n_t - 2, -1, -1):
            env[k] = max(env[k], env[k + 1] - lipschitz * dt[k])
    scale = max(1.0, float(np.nanmax(np.abs(env))))
    above = np.any(Xh > env[:, None] + tol * scale, axis=0)
    hyp_v = float(np.sum(wh[above]))
    epi_v = 0.0
    if family_e is not None and len(family_e):
        Xe, we = _restricted_positions(family_e, t_bar, x_bar, interval, times, "epigraph")
        below = np.any(Xe < env[:, None] - tol * scale, axis=0)
        epi_v = float(np.sum(we[below]))
    return EnvelopeResult(times, raw, env, degenerate, hyp_v, epi_v)


# -- three alternatives ----------------------------------------------------------------

@dataclass
class ThreeAlternative:
    h: float
    area_const: float
    source_const: float
    dissipation_const: float
    holds: tuple


def three_alternative(curve, t_bar, delta, nu0, nu1, solution, flux, r, c=1e-3, n=96):
    """Evaluate the three quantities around ``(t_bar, curve.x(t_bar))`` at probe radius ``r``.

    * area: ``L^2{(t,x) in B_2r : u > v_bar - delta} / r^2`` over ``h``,
    * source: ``nu_0(B_2r) / r`` over ``h^2``,
    * dissipation: ``nu_1(B_2r) / r`` over ``h^3``,

    with ``h`` the lower nonlinearity functional at ``(v_bar, delta)`` and
    ``v_bar`` the larger one-sided level of the curve at ``t_bar``.  Reports
    the attained constants and which exceed ``c``.
    """
    x_bar = float(curve.x_at(t_bar))
    k = np.searchsorted(curve.knots_t, t_bar, side="right") - 1
    levels = [curve.knots_v[min(max(k, 0), curve.knots_v.size - 2)]]
    if 0 < k < curve.knots_t.size - 1 and curve.knots_t[k] == t_bar:
        levels.append(curve.knots_v[k - 1])
    v_bar = float(max(levels))
    h = nondegeneracy_h(flux, v_bar, delta, "minus")
    R = 2 * r
    s = (np.arange(n) + 0.5) / n * 2 * R - R
    T, X = np.meshgrid(t_bar + s, x_bar + s, indexing="ij")
    disc = (T - t_bar) ** 2 + (X - x_bar) ** 2 <= R * R
    area = 0.0
    cell = (2 * R / n) ** 2
    for i in range(n):
        t = T[i, 0]
        if not 0 < t <= solution.T:
            continue
        u = solution.snapshot(t)(X[i])
        area += np.sum(disc[i] & (u > v_bar - delta)) * cell
    q1 = area / r ** 2
    q2 = nu0.ball_mass(t_bar, x_bar, R) / r
    q3 = nu1.ball_mass(t_bar, x_bar, R) / r
    consts = (q1 / h if h > 0 else np.inf, q2 / h ** 2 if h > 0 else np.inf, q3 / h ** 3 if h > 0 else np.inf)
    return ThreeAlternative(h, *consts, holds=tuple(bool(q > c) for q in consts))


# -- source structure -----------------------------------------------------------------

@dataclass
class SourceReport:
    passed: bool
    n_columns: int
    violations: list = field(default_factory=list)


def source_structure_check(mu0, solution, jump_fronts=(), tol=None, decimals=10):
    """Check that ``mu_0`` off the jump set is one signed atom per column at the solution value.

    Columns are atoms sharing ``(t, x)`` up to ``decimals``.  A column passes
    when all its atoms have one sign and all levels lie within ``tol`` of the
    local traces of ``u`` (default tolerance ``2 dv``).
    """
    tol = 2 * solution.dv if tol is None else tol
    a = mu0.atoms
    a = a[(a[:, 0] > 1e-12) & (a[:, 0] < solution.T - 1e-12)]
    if a.shape[0] == 0:
        return SourceReport(True, 0)
    jf = np.asarray(jump_fronts, dtype=np.int64)
    if jf.size:
        d = distance_to_fronts(solution, a[:, 0], a[:, 1], jf)
        a = a[d > 1e-9 * max(1.0, float(np.max(np.abs(a[:, 1]))))]
    if a.shape[0] == 0:
        return SourceReport(True, 0)
    key = np.round(a[:, :2], decimals)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    violations = []
    for c in range(uniq.shape[0]):
        col = a[inv == c]
        t, x = col[0, 0], col[0, 1]
        snap = solution.snapshot(t)
        eps = 1e-9 * max(1.0, abs(x))
        traces = snap(np.array([x - eps, x + eps]))
        lo, hi = traces.min() - tol, traces.max() + tol
        signs = np.unique(np.sign(col[:, 3]))
        bad = signs.size > 1 or np.any(col[:, 2] < lo) or np.any(col[:, 2] > hi) \
            or np.ptp(col[:, 2]) > tol
        if bad:
            violations.append({"t": float(t), "x": float(x), "levels": col[:, 2].tolist(),
                               "weights": col[:, 3].tolist(), "traces": traces.tolist()})
    return SourceReport(not violations, int(uniq.shape[0]), violations)
