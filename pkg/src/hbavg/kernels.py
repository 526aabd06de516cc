"""Hot numeric loops: optimizer trajectory and deviation-scan kernels.

Two execution paths exist for every kernel:

* a numba ``@njit`` version of the sequential loop (default when numba
  imports), and
* a pure-numpy path: the generic per-step runner in ``optim.runner`` for
  trajectories, and a vectorized closed-form block scan here for deviation
  measures.

Setting ``HBAVG_DISABLE_NUMBA=1`` selects the numpy path at call time.
``benchmarks/bench_kernels.py`` times both.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

DISABLE_ENV = "HBAVG_DISABLE_NUMBA"
DIVERGENCE_NORM = 1e12

# stats column layout shared by both trajectory paths
COL_F, COL_F_AVG, COL_DIST, COL_DIST_AVG, COL_INF, COL_INF_AVG = range(6)
SCHEME_NONE, SCHEME_WEIGHTED, SCHEME_TAIL = 0, 1, 2


def numba_enabled() -> bool:
    """Numba path active: importable and not disabled by env flag."""
    if not HAS_NUMBA:
        return False
    return os.environ.get(DISABLE_ENV, "").strip() in ("", "0")


# ---------------------------------------------------------------------------
# trajectory kernel (quadratic objectives)
# ---------------------------------------------------------------------------


def _traj_kernel_impl(
    A,
    dvec,
    diag_mode,
    b,
    x_star,
    x0,
    alpha,
    beta,
    one_grad_x1,
    scheme_code,
    lw0,
    dlw,
    tail_s,
    record,
    stats,
    xs,
    ms,
    gs,
    avs,
    ring,
    runsum,
    xbar_out,
    x_out,
    xprev_out,
):
    rows = stats.shape[0]
    n = x0.size
    x = x0.copy()
    xp = x0.copy()
    m = np.zeros(n)
    g = np.empty(n)
    gavg = np.empty(n)
    xb = x0.copy()
    xn = np.empty(n)
    logW = lw0

    # row 0: gradient at x0, averages start at x0 itself
    if diag_mode:
        for i in range(n):
            g[i] = dvec[i] * x[i] - b[i]
    else:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[j]
            g[i] = acc - b[i]
    fx = 0.0
    for i in range(n):
        fx += x[i] * (g[i] + b[i])
    fb = 0.0
    for i in range(n):
        fb += b[i] * x[i]
    f = 0.5 * fx - fb
    d2 = 0.0
    infn = 0.0
    for i in range(n):
        diff = x[i] - x_star[i]
        d2 += diff * diff
        if abs(x[i]) > infn:
            infn = abs(x[i])
    stats[0, COL_F] = f
    stats[0, COL_F_AVG] = f
    stats[0, COL_DIST] = math.sqrt(d2)
    stats[0, COL_DIST_AVG] = math.sqrt(d2)
    stats[0, COL_INF] = infn
    stats[0, COL_INF_AVG] = infn
    if record:
        for i in range(n):
            xs[0, i] = x[i]
            ms[0, i] = m[i]
            gs[0, i] = g[i]
            avs[0, i] = x[i]
    if scheme_code == SCHEME_TAIL:
        for i in range(n):
            runsum[i] = x[i]
            ring[0, i] = x[i]

    if rows == 1:
        for i in range(n):
            xbar_out[i] = xb[i]
            x_out[i] = x[i]
            xprev_out[i] = xp[i]
        return -1

    # x1 by rule; m becomes m_0 = x0 - x1 under either rule
    for i in range(n):
        xp[i] = x[i]
    if one_grad_x1:
        for i in range(n):
            x[i] = xp[i] - alpha * g[i]
            m[i] = alpha * g[i]
    # copy rule leaves x == x0 and m == 0

    for row in range(1, rows):
        # divergence check on the freshly produced iterate
        nrm2 = 0.0
        for i in range(n):
            nrm2 += x[i] * x[i]
        if not (nrm2 <= DIVERGENCE_NORM * DIVERGENCE_NORM):
            for c in range(6):
                stats[row, c] = np.nan
            if record:
                for i in range(n):
                    xs[row, i] = np.nan
                    ms[row, i] = np.nan
                    gs[row, i] = np.nan
                    avs[row, i] = np.nan
            for i in range(n):
                xbar_out[i] = xb[i]
                x_out[i] = x[i]
                xprev_out[i] = xp[i]
            return row

        if diag_mode:
            for i in range(n):
                g[i] = dvec[i] * x[i] - b[i]
        else:
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * x[j]
                g[i] = acc - b[i]
        fx = 0.0
        fb = 0.0
        for i in range(n):
            fx += x[i] * (g[i] + b[i])
            fb += b[i] * x[i]
        f = 0.5 * fx - fb

        # averaging update at iterate index `row`
        if scheme_code == SCHEME_WEIGHTED:
            lw = lw0 + dlw * row
            logWn = np.logaddexp(logW, lw)
            co = np.exp(logW - logWn)
            cn = np.exp(lw - logWn)
            for i in range(n):
                xb[i] = xb[i] * co + x[i] * cn
            logW = logWn
        elif scheme_code == SCHEME_TAIL:
            if row < tail_s:
                for i in range(n):
                    runsum[i] += x[i]
                    ring[row % tail_s, i] = x[i]
                    xb[i] = runsum[i] / (row + 1)
            else:
                idx = row % tail_s
                for i in range(n):
                    runsum[i] += x[i] - ring[idx, i]
                    ring[idx, i] = x[i]
                    xb[i] = runsum[i] / tail_s

        d2 = 0.0
        infn = 0.0
        for i in range(n):
            diff = x[i] - x_star[i]
            d2 += diff * diff
            if abs(x[i]) > infn:
                infn = abs(x[i])
        stats[row, COL_F] = f
        stats[row, COL_DIST] = math.sqrt(d2)
        stats[row, COL_INF] = infn
        if scheme_code == SCHEME_NONE:
            stats[row, COL_F_AVG] = stats[row, COL_F]
            stats[row, COL_DIST_AVG] = stats[row, COL_DIST]
            stats[row, COL_INF_AVG] = stats[row, COL_INF]
        else:
            if diag_mode:
                for i in range(n):
                    gavg[i] = dvec[i] * xb[i] - b[i]
            else:
                for i in range(n):
                    acc = 0.0
                    for j in range(n):
                        acc += A[i, j] * xb[j]
                    gavg[i] = acc - b[i]
            fx = 0.0
            fb = 0.0
            for i in range(n):
                fx += xb[i] * (gavg[i] + b[i])
                fb += b[i] * xb[i]
            da2 = 0.0
            infa = 0.0
            for i in range(n):
                diff = xb[i] - x_star[i]
                da2 += diff * diff
                if abs(xb[i]) > infa:
                    infa = abs(xb[i])
            stats[row, COL_F_AVG] = 0.5 * fx - fb
            stats[row, COL_DIST_AVG] = math.sqrt(da2)
            stats[row, COL_INF_AVG] = infa
        if record:
            for i in range(n):
                xs[row, i] = x[i]
                ms[row, i] = m[i]
                gs[row, i] = g[i]
                avs[row, i] = x[i] if scheme_code == SCHEME_NONE else xb[i]

        if row == rows - 1:
            break
        for i in range(n):
            xn[i] = x[i] - alpha * g[i] + beta * (x[i] - xp[i])
            m[i] = beta * m[i] + alpha * g[i]
        for i in range(n):
            xp[i] = x[i]
            x[i] = xn[i]

    for i in range(n):
        xbar_out[i] = xb[i]
        x_out[i] = x[i]
        xprev_out[i] = xp[i]
    return -1


# ---------------------------------------------------------------------------
# deviation scan kernel
# ---------------------------------------------------------------------------


def _dev_scan_impl(a_arr, beta, radius, capq, normt, kcap, averaged, lw0, dlw, tol):
    """Per-mode scan of bottom-row norms of T_j^k (or their weighted running
    average), with a certified geometric tail bound for truncation.

    Row k+1 follows from row k via u <- (a*u1 + u2, -beta*u1).  The tail
    certificate uses env(k) = r^(k-1) * min(k, 1/(1-q)) * (||T||_2 + 1),
    an upper bound on every later row norm once env is non-increasing; a
    scan stops when env falls below tol * running max.  Future averaged
    norms are convex combinations of the current average and future rows,
    so the same certificate covers the averaged measure.
    """
    best = 1.0  # row k=0 is (0, 1) for every mode, raw and averaged alike
    argk = 0
    trunc = 0
    converged = True
    for j in range(a_arr.size):
        a = a_arr[j]
        r = radius[j]
        cq = capq[j]
        c = normt[j] + 1.0
        u1 = 0.0
        u2 = 1.0
        xb1 = 0.0
        xb2 = 1.0
        logW = lw0
        rpow = 1.0  # r^(k-1)
        k = 0
        certified = False
        while k < kcap:
            nu1 = a * u1 + u2
            nu2 = -beta * u1
            u1 = nu1
            u2 = nu2
            k += 1
            if averaged:
                lw = lw0 + dlw * k
                logWn = np.logaddexp(logW, lw)
                co = np.exp(logW - logWn)
                cn = np.exp(lw - logWn)
                xb1 = xb1 * co + u1 * cn
                xb2 = xb2 * co + u2 * cn
                logW = logWn
                nrm = math.sqrt(xb1 * xb1 + xb2 * xb2)
            else:
                nrm = math.sqrt(u1 * u1 + u2 * u2)
            if nrm > best:
                best = nrm
                argk = k
            if k >= 64:
                mk = min(float(k), cq)
                env = rpow * mk * c
                if env <= tol * best and r * min(float(k + 1), cq) <= mk:
                    certified = True
                    break
            rpow *= r
        if k > trunc:
            trunc = k
        if not certified:
            converged = False
    return best, argk, trunc, converged


if HAS_NUMBA:
    # nogil: kernels touch only their arguments, and the harness may run
    # cells from a thread pool
    traj_kernel = njit(cache=True, nogil=True)(_traj_kernel_impl)
    dev_scan_nb = njit(cache=True, nogil=True)(_dev_scan_impl)
else:  # pragma: no cover
    traj_kernel = _traj_kernel_impl
    dev_scan_nb = _dev_scan_impl


# ---------------------------------------------------------------------------
# deviation scan, pure-numpy path (vectorized over k via closed-form powers)
# ---------------------------------------------------------------------------


def mode_rows(rho1, rho2, nearly_repeated: bool, ks: np.ndarray):
    """Bottom row of T^k for k in ``ks`` (ks >= 1) from the closed-form
    power of a 2x2 companion-type matrix; real parts returned."""
    ks = np.asarray(ks, dtype=np.int64)
    if nearly_repeated:
        rho = ((rho1 + rho2) / 2.0).real
        first = ks * np.power(rho, ks - 1)
        second = (1.0 - ks) * np.power(rho, ks)
        return first.astype(np.float64), second.astype(np.float64)
    denom = rho2 - rho1
    p1 = np.power(rho1, ks)
    p2 = np.power(rho2, ks)
    first = (p2 - p1) / denom
    p1m = np.power(rho1, ks - 1)
    p2m = np.power(rho2, ks - 1)
    second = rho1 * rho2 * (p1m - p2m) / denom
    return first.real, second.real


def dev_scan_np(
    rho1,
    rho2,
    nearly_repeated,
    radius,
    capq,
    normt,
    kcap,
    averaged,
    lw0,
    dlw,
    tol,
    want_curves=False,
    block=16384,
):
    """Vectorized equivalent of the njit scan. Optionally records per-mode
    norm curves (index k starts at 0)."""
    best = 1.0
    argk = 0
    trunc = 0
    converged = True
    curves: list[np.ndarray] | None = [] if want_curves else None
    nmodes = len(rho1)
    for j in range(nmodes):
        r = radius[j]
        cq = capq[j]
        c = normt[j] + 1.0
        mode_curve = [np.array([1.0])] if want_curves else None
        # running weighted sum S = (S1, S2) * exp(logscale)
        S1, S2 = 0.0, 1.0
        logscale = lw0
        logW = lw0
        k0 = 1
        certified = False
        k_end = 0
        while k0 <= kcap:
            ks = np.arange(k0, min(k0 + block, kcap + 1), dtype=np.int64)
            r1, r2 = mode_rows(rho1[j], rho2[j], nearly_repeated[j], ks)
            if averaged:
                logw = lw0 + dlw * ks.astype(np.float64)
                ref = max(float(logw[-1]), logscale)
                wsc = np.exp(logw - ref)
                carry = np.exp(logscale - ref)
                c1 = np.cumsum(wsc * r1) + S1 * carry
                c2 = np.cumsum(wsc * r2) + S2 * carry
                logWs = np.logaddexp.accumulate(np.concatenate(([logW], logw)))[1:]
                norms = np.hypot(c1, c2) * np.exp(ref - logWs)
                S1, S2, logscale = float(c1[-1]), float(c2[-1]), ref
                logW = float(logWs[-1])
            else:
                norms = np.hypot(r1, r2)
            best_run = np.maximum.accumulate(np.maximum(norms, best))
            env = np.power(r, ks - 1) * np.minimum(ks, cq) * c
            dec = r * np.minimum(ks + 1, cq) <= np.minimum(ks, cq)
            stop = (ks >= 64) & (env <= tol * best_run) & dec
            hits = np.nonzero(stop)[0]
            upto = hits[0] + 1 if hits.size else norms.size
            seg = norms[:upto]
            i = int(np.argmax(seg))
            if seg[i] > best:
                best = float(seg[i])
                argk = int(ks[i])
            if want_curves:
                mode_curve.append(seg)
            k_end = int(ks[upto - 1])
            if hits.size:
                certified = True
                break
            k0 += block
        trunc = max(trunc, k_end)
        if not certified:
            converged = False
        if want_curves:
            curves.append(np.concatenate(mode_curve))
    return best, argk, trunc, converged, curves
