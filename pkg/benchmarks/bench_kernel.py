"""Compiled Adams kernel vs the numpy fallback.

Solves the Riccati equation for batches of spectral parameters on a sinh
contour with both implementations, checks they agree on clean nodes and reports the mean
wall time of each. Run from the repository root:

    python benchmarks/bench_kernel.py [--repeat 5] [--M 200 1000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from roughpricer import HAVE_EXTENSION, REFERENCE_PARAMS, TimeGrid, solve
from roughpricer.contours import AnalyticityDomain, choose_sinh_params


def _time(fn, repeat):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn()
    return out, (time.perf_counter() - t0) / repeat


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--M", type=int, nargs="+", default=[100, 1000])
    ap.add_argument("--nodes", type=int, nargs="+", default=[1, 12, 50, 200])
    ap.add_argument("--solver", default="mod3")
    ap.add_argument("--T", type=float, default=0.5)
    args = ap.parse_args(argv)
    if not HAVE_EXTENSION:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")

    c = choose_sinh_params(AnalyticityDomain(), "put", 1e-8, omega=0.1)
    print(f"{'M':>6} {'nodes':>6} {'compiled ms':>12} {'numpy ms':>10} {'speed-up':>9} {'max rel diff':>13} {'status':>7}")
    for M in args.M:
        grid = TimeGrid.uniform(args.T, M)
        for n in args.nodes:
            xi = c.with_terms(max(n - 1, 1)).nodes()[:n]
            ext, t_ext = _time(lambda: solve(REFERENCE_PARAMS, xi, grid, args.solver,
                                             use_extension=True), args.repeat)
            py, t_py = _time(lambda: solve(REFERENCE_PARAMS, xi, grid, args.solver,
                                           use_extension=False), args.repeat)
            # blown rows hold partial trajectories; compare statuses there
            same = bool(np.array_equal(ext.ok, py.ok))
            ok = ext.ok & py.ok
            scale = np.maximum(np.abs(py.values[ok]), 1.0)
            diff = float((np.abs(ext.values[ok] - py.values[ok]) / scale).max()) if ok.any() else 0.0
            print(f"{M:>6} {n:>6} {1e3 * t_ext:>12.3f} {1e3 * t_py:>10.3f} "
                  f"{t_py / t_ext:>8.1f}x {diff:>13.2e} {'same' if same else 'DIFFER':>7}")


if __name__ == "__main__":
    main()
