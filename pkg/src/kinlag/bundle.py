"""Run a scenario and write its artifact bundle.

Every file except ``timings.json`` is a pure function of the scenario and its
seed, so reruns are byte-identical.  Tables are CSV with a fixed header and
``repr`` floats; JSON is sorted and indented.
"""
from __future__ import annotations

import csv
import io
import platform
import time
from pathlib import Path

import numpy as np

from . import __version__, besov, currents, diagnostics, euler3, lagrangian, scalar
from . import flux as fluxmod
from ._accel import backend
from .errors import ValidationError
from .scenario import dump_json

MEASURE_COLUMNS = ("t", "x", "v_lo", "v_hi", "weight", "sign", "kind")
BESOV_COLUMNS = ("delta", "integral", "ratio")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def measures_from_csv(path):
    from .measures import AtomicMeasure3
    header, rows = read_csv(path)
    if tuple(header) != MEASURE_COLUMNS:
        raise ValidationError("schema", f"{path}: unexpected header {header}")
    parsed = [(float(a), float(b), float(c), float(d), float(e), int(f), g) for a, b, c, d, e, f, g in rows]
    return AtomicMeasure3.from_rows(parsed)


class Bundle:
    """Collects files in memory, then writes them in one pass."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.files = {}
        self.constants = {}
        self.skipped = []
        self.timings = {}

    def add(self, name, text):
        self.files[name] = text

    def timed(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.timings[name] = round(time.perf_counter() - t0, 6)
        return out

    def write(self):
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            for name in sorted(self.files):
                (self.out_dir / name).write_text(self.files[name])
        except OSError as exc:
            raise ValidationError("output", f"cannot write to {self.out_dir}: {exc}") from None
        return self.out_dir


def emit_report(bundle, name, rows=None, header=None, records=None, fmt="csv"):
    """Add a table (csv) or one-record-per-line JSON file to ``bundle``."""
    if fmt == "csv":
        bundle.add(f"{name}.csv", csv_text(header, rows))
    elif fmt == "json":
        import json
        text = "".join(json.dumps(r, sort_keys=True, default=_json_default) + "\n" for r in records)
        bundle.add(f"{name}.jsonl", text)
    else:
        raise ValidationError("format", f"unknown report format {fmt!r}")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


# -- scalar ---------------------------------------------------------------------------------

def scalar_initial(scn):
    ini = scn["initial"]
    if ini["values"] is not None:
        return scalar.PiecewiseConstantFn(np.asarray(ini["breakpoints"] or [], float), np.asarray(ini["values"], float))
    r = ini["random"]
    rng = np.random.default_rng(scn.seed)
    return scalar.random_piecewise(r["pieces"], rng, tuple(r["x_range"]), r["quantum"], r["lo"], r["hi"])


def front_window(sol, pad=0.1):
    if sol.n_fronts == 0:
        return (-1.0, 1.0)
    xs = np.concatenate([sol.x_birth, sol.x_birth + sol.speed * (sol.t_death - sol.t_birth)])
    a, b = float(xs.min()), float(xs.max())
    span = max(b - a, 1.0)
    return (a - pad * span, b + pad * span)


def _snapshot_rows(get, times):
    rows = []
    for t in times:
        f = get(t)
        bp = np.concatenate([[-np.inf], f.breakpoints, [np.inf]])
        for a, b, v in zip(bp[:-1], bp[1:], f.values):
            rows.append((t, a, b, v))
    return rows


def run_scalar(scn, bundle):
    disc = scn["discretization"]
    flux = fluxmod.from_config({k: v for k, v in scn["flux"].items() if v is not None})
    initial = scalar_initial(scn)
    T = float(scn["T"])
    sol = bundle.timed("front_track", scalar.front_track, initial, flux, T, disc["dv"], disc["max_fronts"])
    window = tuple(scn["window"]) if scn["window"] else front_window(sol)
    times = [T * k / 4 for k in range(5)]
    bundle.add("snapshots.csv", csv_text(("t", "x_left", "x_right", "u"), _snapshot_rows(sol.snapshot, times)))
    kinds = {v: k for k, v in scalar.KIND_CODES.items()}
    bundle.add("fronts.csv", csv_text(
        ("id", "t_birth", "t_death", "x_birth", "speed", "u_left", "u_right", "kind"),
        [(i, sol.t_birth[i], sol.t_death[i], sol.x_birth[i], sol.speed[i], sol.u_left[i], sol.u_right[i],
          kinds[int(sol.kind[i])]) for i in range(sol.n_fronts)]))
    bundle.constants["n_fronts"] = int(sol.n_fronts)
    diag = scn["diagnostics"]
    need_curves = any(diag[k] for k in ("residual", "concentration", "dissipation", "curves", "probes"))
    fam = mu0 = mu1 = None
    if need_curves:
        fam = bundle.timed("curves", lagrangian.build_hypograph_rep, sol, scn.n_v, disc["dx"])
        mu0, mu1 = lagrangian.aggregate_measures(fam)
        bundle.add("measures_mu0.csv", csv_text(MEASURE_COLUMNS, mu0.to_rows()))
        bundle.add("measures_mu1.csv", csv_text(MEASURE_COLUMNS, mu1.to_rows()))
        bundle.constants["n_curves"] = len(fam)
        bundle.constants["mu1_total"] = float(mu1.total())
    if diag["curves"]:
        bundle.add("curves.jsonl", fam.to_json_lines())
    else:
        bundle.skipped.append("curves")
    if diag["residual"]:
        dic = lagrangian.default_dictionary(T, window)
        res = bundle.timed("residual", lagrangian.kinetic_residual, sol, lagrangian.interior(mu0, T), mu1, dic)
        bundle.constants["kinetic_residual"] = float(res)
    else:
        bundle.skipped.append("residual")
    if diag["concentration"]:
        nu1 = mu1.marginal_tx()
        tol = sol.front_tolerance()
        radii = 4 * tol * 2.0 ** np.arange(8)
        frac = bundle.timed("concentration", diagnostics.concentration_report, nu1, sol, radii)
        bundle.add("concentration.csv", csv_text(("r", "fraction"), zip(radii, frac)))
        bundle.constants["concentration_fraction"] = float(frac[0])
    else:
        bundle.skipped.append("concentration")
    if diag["dissipation"] and flux.poly is not None:
        pair = fluxmod.quadratic_entropy(flux)
        worst, table = bundle.timed("dissipation", diagnostics.jump_identity_check, fam, sol, pair,
                                    None, 8.0 / scn.n_v)
        bundle.add("dissipation.csv", csv_text(("front", "curve_rate", "trace_rate"), table))
        bundle.constants["dissipation_worst_defect"] = float(worst)
    else:
        bundle.skipped.append("dissipation")
    if diag["oleinik"] and flux.poly is not None and flux.poly.degree() == 2:
        probes = np.linspace(window[0], window[1], 2001)
        rows = []
        for t in (T / 4, T / 2, T):
            q = scalar.oleinik_check(sol, t, probes)
            rows.append((t, q, 1.0 / (t * flux.poly.coef[2] * 2)))
        bundle.add("oleinik.csv", csv_text(("t", "max_quotient", "bound"), rows))
        bundle.constants["oleinik_max_excess"] = float(max(q - b for _, q, b in rows))
    else:
        bundle.skipped.append("oleinik")
    if diag["probes"] and scn["probes"]:
        nu1 = mu1.marginal_tx()
        diam = window[1] - window[0]
        radii = diagnostics.probe_radii(diam)
        recs = []
        for t, x in scn["probes"]:
            ratio = diagnostics.density_ratio(nu1, (t, x), radii)
            osc, slope = diagnostics.vmo_test(sol, (t, x), radii[-3:])
            dist = float(diagnostics.distance_to_fronts(sol, np.array([t]), np.array([x]))[0])
            recs.append({"t": t, "x": x, "ratios": ratio.tolist(), "oscillation": osc.tolist(),
                         "slope": slope if np.isfinite(slope) else None, "front_distance": dist,
                         "class": "jump" if dist <= radii[-1] else "vmo"})
        emit_report(bundle, "probes", records=recs, fmt="json")
    else:
        bundle.skipped.append("probes")
    if diag["current"]:
        _current(scn, sol, window, bundle)
    else:
        bundle.skipped.append("current")
    if diag["besov"]:
        b = scn["besov"]
        rep = bundle.timed("besov", besov.besov_time_scaling, sol, b["deltas"], b["alpha"], tuple(b["window"]))
        bundle.add("besov.csv", csv_text(BESOV_COLUMNS, rep.table()))
        bundle.constants["besov_exponent"] = rep.exponent
        bundle.constants["besov_spread"] = rep.spread
    else:
        bundle.skipped.append("besov")
    return sol


def _current(scn, sol, window, bundle):
    grid = currents.GridSpec.uniform((0.0, float(scn["T"])), window, sol.base_flux.domain,
                                     tuple(scn["discretization"]["grid"]))
    cur = bundle.timed("current", currents.build_current, sol, grid)
    paths = bundle.timed("decompose", currents.smirnov_decompose, cur)
    rep = currents.verify_decomposition(cur, paths)
    bundle.add("paths.jsonl", paths.to_json_lines())
    info = {"mass": rep.mass, "path_mass": rep.path_mass, "mass_error": rep.mass_error,
            "boundary_error": rep.boundary_error, "cone_violations": rep.cone_violations,
            "n_paths": len(paths), "cycle_mass": paths.cycle_mass, "residual_mass": paths.residual_mass,
            "max_divergence": float(np.max(np.abs(cur.divergence())))}
    bundle.add("current.json", dump_json(info))
    bundle.constants.update({f"current_{k}": v for k, v in info.items()})
    return info


# -- euler3 ---------------------------------------------------------------------------------

def euler_initial(scn):
    ini = scn["initial"]
    states = [euler3.EulerState(float(ini["left"][0]), float(ini["left"][1]))]
    bps = []
    for x, rho, m in ini["rows"] or []:
        bps.append(float(x))
        states.append(euler3.EulerState(float(rho), float(m)))
    return bps, states


class _ConservedView:
    """``snapshot(t)`` of density or momentum as a piecewise-constant function."""

    def __init__(self, sol, which):
        self.sol, self.k, self.T = sol, 1 if which == "rho" else 2, sol.T

    def snapshot(self, t):
        out = self.sol.snapshot(t)
        pos, vals = out[0], out[self.k]
        if pos.size == 0:
            return scalar.PiecewiseConstantFn(pos, vals)
        return euler3._pcf(pos, vals)


def run_euler(scn, bundle):
    disc = scn["discretization"]
    c, M = scn["euler"]["c"], scn["euler"]["M"]
    bps, states = euler_initial(scn)
    T = float(scn["T"])
    sol = bundle.timed("front_track", euler3.front_track_euler, bps, states, T, disc["dv"], c, M,
                       min(disc["max_fronts"], 20000))
    kinds = {v: k for k, v in scalar.KIND_CODES.items()}
    bundle.add("fronts.csv", csv_text(
        ("id", "t_birth", "t_death", "x_birth", "speed", "rho_left", "m_left", "rho_right", "m_right",
         "family", "kind", "d_E"),
        [(i, sol.t_birth[i], sol.t_death[i], sol.x_birth[i], sol.speed[i], *sol.left[i], *sol.right[i],
          sol.family[i], kinds[int(sol.kind[i])], sol.d_E[i]) for i in range(sol.n_fronts)]))
    times = [T * k / 4 for k in range(5)]
    rows = []
    for t in times:
        pos, rho, m = sol.snapshot(t)
        bp = np.concatenate([[-np.inf], pos, [np.inf]])
        rows.extend((t, a, b, r, mm) for a, b, r, mm in zip(bp[:-1], bp[1:], rho, m))
    bundle.add("snapshots.csv", csv_text(("t", "x_left", "x_right", "rho", "m"), rows))
    window = tuple(scn["window"]) if scn["window"] else front_window(sol)
    wide = (window[0] - 10.0, window[1] + 10.0)
    bundle.constants["n_fronts"] = int(sol.n_fronts)
    bundle.constants["conservation_error"] = euler3.conservation_error(sol, wide)
    shocks = sol.shock_ids()
    bundle.constants["max_shock_d_E"] = float(sol.d_E[shocks].max()) if shocks.size else 0.0
    diag = scn["diagnostics"]
    if diag["kinetic_g"]:
        dic = lagrangian.default_dictionary(T, window)
        rep = bundle.timed("kinetic_g", euler3.kinetic_g_balance, sol, dic)
        frac = euler3.m_marginal_concentration(rep, sol, 4 * sol.front_tolerance())
        bundle.add("kinetic_m.csv", csv_text(("t0", "x0", "t1", "speed", "mass_rate"), rep.lines))
        bundle.constants.update({"g_balance_residual": rep.residual, "m_max": rep.max_m, "m_mass": rep.m_mass,
                                 "m_concentration": frac})
        dec = euler3.signed_decomposition_check(sol)
        bundle.constants["signed_mu1_single_signed"] = dec.single_signed
        bundle.constants["signed_source_constant"] = dec.constant
        q = {"w": euler3.quasi_entropy_check(sol.w_view()), "z": euler3.quasi_entropy_check(sol.z_view())}
        bundle.add("quasi_entropy.json", dump_json(q))
    else:
        bundle.skipped.append("kinetic_g")
    if diag["besov"]:
        b = scn["besov"]
        for which in ("rho", "m"):
            rep = besov.besov_time_scaling(_ConservedView(sol, which), b["deltas"], b["alpha"], tuple(b["window"]))
            bundle.add(f"besov_{which}.csv", csv_text(BESOV_COLUMNS, rep.table()))
            bundle.constants[f"besov_{which}_spread"] = rep.spread
    else:
        bundle.skipped.append("besov")
    return sol


# -- entry point ----------------------------------------------------------------------------

def run(scn, out_dir=None):
    """Run ``scn`` and write the bundle; returns ``(out_dir, manifest dict)``."""
    bundle = Bundle(scn.output_dir(out_dir))
    if scn.problem == "scalar":
        run_scalar(scn, bundle)
    else:
        run_euler(scn, bundle)
    manifest = {
        "version": __version__,
        "backend": backend(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": scn.seed,
        "scenario": scn.to_manifest(),
        "constants": bundle.constants,
        "skipped": sorted(bundle.skipped),
        "files": sorted(bundle.files),
        "timings_file": "timings.json",
    }
    bundle.add("manifest.json", dump_json(manifest))
    bundle.add("timings.json", dump_json(bundle.timings))
    return bundle.write(), manifest


def decompose_current(scn, out_dir=None):
    if scn.problem != "scalar":
        raise ValidationError("problem", "decompose-current needs a scalar scenario")
    bundle = Bundle(scn.output_dir(out_dir))
    flux = fluxmod.from_config({k: v for k, v in scn["flux"].items() if v is not None})
    sol = scalar.front_track(scalar_initial(scn), flux, float(scn["T"]), scn.dv, scn["discretization"]["max_fronts"])
    window = tuple(scn["window"]) if scn["window"] else front_window(sol)
    info = _current(scn, sol, window, bundle)
    bundle.write()
    return info
