"""Time the hot kernels under numba and under the plain numpy fallback.

Each backend runs in its own interpreter because the switch is read at import
time.  Usage::

    python benchmarks/bench_kernels.py            # both backends, table on stdout
    python benchmarks/bench_kernels.py --child    # one backend (internal)
"""
import argparse
import json
import os
import subprocess
import sys
import time

CASES = ("curves", "godunov", "decompose", "front_distance")


def _best(fn, repeat):
    fn()  # warm-up (numba compilation, caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def child(repeat):
    import numpy as np

    from kinlag import backend, currents, diagnostics, flux, kinetic, lagrangian, scalar

    f = flux.burgers()
    u0 = scalar.random_piecewise(20, np.random.default_rng(3), dv=1 / 64)
    sol = scalar.front_track(u0, f, 1.0, 1 / 64)
    shock = scalar.front_track(scalar.PiecewiseConstantFn([0.0], [1.0, 0.0]), f, 1.0, 1 / 32)
    grid = currents.GridSpec.uniform((0, 1), (-0.5, 1.0), (0, 1), (16, 16, 8))
    cur = currents.build_current(shock, grid)
    rng = np.random.default_rng(0)
    pt, px = rng.uniform(0, 1, 20000), rng.uniform(0, 1, 20000)
    out = {"backend": backend()}
    out["curves"] = _best(lambda: lagrangian.build_hypograph_rep(sol, 64, 1 / 64), repeat)
    out["godunov"] = _best(lambda: kinetic.godunov_solve(u0, f, (-0.5, 1.5), 200, 0.5), repeat)
    out["decompose"] = _best(lambda: currents.smirnov_decompose(cur), repeat)
    out["front_distance"] = _best(lambda: diagnostics.distance_to_fronts(sol, pt, px, np.arange(sol.n_fronts)), repeat)
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--child", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if args.child:
        child(args.repeat)
        return
    results = {}
    for flag in ("0", "1"):
        env = dict(os.environ, KINLAG_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        res = json.loads(out.stdout.strip().splitlines()[-1])
        results[res["backend"]] = res
    print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for c in CASES:
        a, b = results["numba"][c], results["numpy"][c]
        print(f"{c:<16}{a:>12.4f}{b:>12.4f}{b / a:>10.1f}")


if __name__ == "__main__":
    main()
