"""Timing comparison of the numba kernels against the pure-numpy path.

Run from the repository root:

    python benchmarks/bench_kernels.py

The trajectory benchmark drives the heavy-ball loop on a diagonal and a
dense quadratic; the deviation benchmark scans a three-mode system out to a
long horizon.  The numpy trajectory path is the generic per-step runner (the
same code any non-quadratic objective uses); the numpy deviation path is the
vectorized closed-form block scan.
"""

import os
import time

import numpy as np


def _timed(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def _with_path(disable_numba, fn):
    old = os.environ.get("HBAVG_DISABLE_NUMBA")
    os.environ["HBAVG_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    try:
        return _timed(fn)
    finally:
        if old is None:
            os.environ.pop("HBAVG_DISABLE_NUMBA", None)
        else:
            os.environ["HBAVG_DISABLE_NUMBA"] = old


def bench_trajectory():
    from hbavg.optim import AveragingScheme, HBParams, run
    from hbavg.problems import make_diag_quadratic, make_random_quadratic

    cases = [
        ("diag n=50, 100k iters, uniform avg",
         make_diag_quadratic(1.0, list(np.geomspace(10, 1e4, 48)), 1e4),
         HBParams(alpha=1e-4, beta=0.9409), AveragingScheme.uniform(), 100_000),
        ("dense n=100, 10k iters, geometric avg",
         make_random_quadratic(100, seed=1, spectrum_target=(1.0, 1e4)),
         HBParams(alpha=1e-4, beta=0.95), AveragingScheme.geometric(1.01), 10_000),
    ]
    rows = []
    for label, problem, params, scheme, iters in cases:
        x0 = np.ones(problem.dim)

        def job():
            return run(problem, params, scheme, x0, iters=iters).f_gap_avg

        job()  # jit warmup outside the timed region
        t_nb, v_nb = _with_path(False, job)
        t_np, v_np = _with_path(True, job)
        rows.append((label, t_nb, t_np, v_nb, v_np))
    return rows


def bench_deviation():
    from hbavg.deviation import DeviationQuery, dev_measure

    query = DeviationQuery(
        spectrum=(1.0, 2500.0, 1e6), alpha=1e-6, beta=0.9025,
        scheme="uniform_avg", k_cap=2_000_000,
    )

    def job():
        return np.array([dev_measure(query).dev_value])

    job()
    t_nb, v_nb = _with_path(False, job)
    t_np, v_np = _with_path(True, job)
    return [("deviation scan, 3 modes, ~1.4M steps", t_nb, t_np, v_nb, v_np)]


def main():
    from hbavg import kernels

    print(f"numba importable: {kernels.HAS_NUMBA}")
    rows = bench_trajectory() + bench_deviation()
    width = max(len(r[0]) for r in rows)
    print(f"\n{'case':<{width}}  {'numba':>9}  {'numpy':>9}  {'speedup':>8}  match")
    for label, t_nb, t_np, v_nb, v_np in rows:
        # compare at the column's own scale; endpoint values are often pure
        # cancellation noise near the optimum
        rel = np.max(np.abs(v_nb - v_np)) / max(np.max(np.abs(v_nb)), 1e-300)
        print(f"{label:<{width}}  {t_nb:>8.3f}s  {t_np:>8.3f}s  "
              f"{t_np / t_nb:>7.1f}x  rel diff {rel:.1e}")


if __name__ == "__main__":
    main()
