"""Trajectory runners for heavy-ball with averaging, plus certified envelopes.

``run`` drives one configuration (problem, stepsize/momentum, averaging
scheme, initialization rule) for a fixed number of iterations and returns a
Trajectory of per-iteration diagnostics.  Quadratic problems take a compiled
kernel path when numba is active; everything else (and the
HBAVG_DISABLE_NUMBA=1 fallback) runs the generic per-step loop, which calls
the problem oracle directly.

``run_rahb`` restarts uniform averaging in stages to turn the averaged 1/K
rate into a linear one on strongly convex problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import DivergenceError
from ..problems.quadratic import QuadraticProblem
from .params import AveragingScheme, HBParams, wahb_caps_satisfied, wahb_stepsize
from .stepper import DIVERGENCE_NORM

X1_RULES = ("copy_x0", "one_grad_step")


@dataclass(frozen=True)
class RecordedRun:
    """Per-row vectors: iterates, momentum buffers m_{k-1}, gradients, and
    the averaged iterates."""

    xs: np.ndarray
    ms: np.ndarray
    gs: np.ndarray
    avgs: np.ndarray


@dataclass(frozen=True)
class RunMeta:
    problem_name: str
    params: HBParams
    scheme: AveragingScheme
    x1_rule: str
    r0: float
    delta0: float
    optimum_known: bool
    diverged: bool = False
    divergence_k: int | None = None
    stage_starts: tuple[int, ...] | None = None


@dataclass(frozen=True)
class Trajectory:
    """Per-iteration diagnostics of one run.

    Gap and distance columns are relative to the certified optimum; when no
    optimum is certified they fall back to f_star = 0 and x_star = 0 (i.e.
    raw objective values and iterate norms) and meta.optimum_known is False.
    ``bound_envelope`` is present only when the run matches the certified
    averaged-envelope preconditions.
    """

    k: np.ndarray
    f_gap_raw: np.ndarray
    f_gap_avg: np.ndarray
    dist_raw: np.ndarray
    dist_avg: np.ndarray
    inf_norm_raw: np.ndarray
    inf_norm_avg: np.ndarray
    bound_envelope: np.ndarray | None
    meta: RunMeta
    x_final: np.ndarray
    xbar_final: np.ndarray
    recorded: RecordedRun | None = None

    @property
    def rows(self) -> int:
        return self.k.size


class _AvgAccumulator:
    """Running weighted mean with the weight total kept in the log domain.

    Weight rules are log-affine (log w_k = lw0 + dlw * k); raw w_k and W_k
    would overflow for long geometric runs, the ratios used here cannot.
    """

    def __init__(self, x0: np.ndarray, lw0: float, dlw: float):
        self.xbar = x0.astype(np.float64).copy()
        self.logw0 = lw0
        self.dlw = dlw
        self.logW = lw0

    def update(self, k: int, x: np.ndarray) -> None:
        lw = self.logw0 + self.dlw * k
        logWn = np.logaddexp(self.logW, lw)
        self.xbar = self.xbar * math.exp(self.logW - logWn) + x * math.exp(lw - logWn)
        self.logW = logWn


class _TailAccumulator:
    """Sliding window mean; uniform mean until the window fills."""

    def __init__(self, x0: np.ndarray, s: int):
        self.s = s
        self.ring = np.empty((s, x0.size))
        self.ring[0] = x0
        self.runsum = x0.astype(np.float64).copy()
        self.xbar = x0.astype(np.float64).copy()

    def update(self, k: int, x: np.ndarray) -> None:
        if k < self.s:
            self.runsum += x
            self.ring[k % self.s] = x
            self.xbar = self.runsum / (k + 1)
        else:
            idx = k % self.s
            self.runsum += x - self.ring[idx]
            self.ring[idx] = x
            self.xbar = self.runsum / self.s


def _scheme_coeffs(scheme: AveragingScheme, params: HBParams, mu: float):
    if scheme.kind == "none":
        return kernels.SCHEME_NONE, 0.0, 0.0, 0
    if scheme.kind == "tail":
        return kernels.SCHEME_TAIL, 0.0, 0.0, int(scheme.s)
    lw0, dlw = scheme.log_weight_coeffs(params, mu)
    return kernels.SCHEME_WEIGHTED, lw0, dlw, 0


def _envelope_applies(problem, params, scheme, x1_rule) -> bool:
    meta = problem.meta
    if not meta.optimum_known or x1_rule != "one_grad_step":
        return False
    if scheme.kind == "linear_rate" or (scheme.kind == "uniform" and meta.strong_mu == 0.0):
        return wahb_caps_satisfied(params.alpha, params.beta, meta.smooth_L)
    return False


def _envelope_column(params, meta, r0, ks) -> np.ndarray:
    mu = meta.strong_mu
    alpha, beta = params.alpha, params.beta
    const = 4.0 * (1.0 - beta) * r0 * r0 / alpha
    ks = np.asarray(ks, dtype=np.float64)
    if mu > 0.0:
        base = 1.0 - alpha * mu / (2.0 * (1.0 - beta))
        return const * np.power(base, ks)
    out = np.full(ks.shape, np.nan)
    pos = ks >= 1
    out[pos] = const / ks[pos]
    return out


def bound_envelope(params: HBParams, scheme: AveragingScheme, meta, r0: float, k):
    """Certified upper bound on f(xbar_k) - f* for weighted-average runs.

    Strongly convex branch: (1 - alpha*mu/(2(1-beta)))^k * 4(1-beta) r0^2 / alpha,
    valid for linear_rate weights.  Convex branch (mu = 0, k >= 1):
    4(1-beta) r0^2 / (alpha k), valid for uniform weights (the linear_rate
    weights degenerate to uniform there).  The stepsize must satisfy both
    averaging caps; outside them the bound is not claimed and this raises.
    """
    if not wahb_caps_satisfied(params.alpha, params.beta, meta.smooth_L):
        cap = wahb_stepsize(meta.smooth_L, params.beta)
        raise ValueError(
            f"alpha = {params.alpha:g} exceeds the averaging cap {cap:g}; "
            "the envelope is not claimed there"
        )
    if meta.strong_mu > 0.0:
        if scheme.kind != "linear_rate":
            raise ValueError("strongly convex envelope requires linear_rate weights")
    elif scheme.kind not in ("uniform", "linear_rate"):
        raise ValueError("convex envelope requires uniform (or degenerate linear_rate) weights")
    scalar = np.isscalar(k) or getattr(k, "ndim", 0) == 0
    ks = np.atleast_1d(np.asarray(k, dtype=np.float64))
    if meta.strong_mu == 0.0 and np.any(ks < 1):
        raise ValueError("convex-branch envelope requires k >= 1")
    vals = _envelope_column(params, meta, r0, ks)
    return float(vals[0]) if scalar else vals


def _gap_reference(problem):
    meta = problem.meta
    if meta.optimum_known:
        return meta.x_star.astype(np.float64), float(meta.f_star)
    return np.zeros(meta.dim), 0.0


def _assemble(problem, params, scheme, x1_rule, stats, div_k, x_fin, xbar_fin, rec, f_star):
    rows = stats.shape[0]
    ks = np.arange(rows, dtype=np.int64)
    meta = RunMeta(
        problem_name=problem.name,
        params=params,
        scheme=scheme,
        x1_rule=x1_rule,
        r0=float(stats[0, kernels.COL_DIST]),
        delta0=float(stats[0, kernels.COL_F] - f_star),
        optimum_known=problem.meta.optimum_known,
        diverged=div_k >= 0,
        divergence_k=int(div_k) if div_k >= 0 else None,
    )
    envelope = None
    if not meta.diverged and _envelope_applies(problem, params, scheme, x1_rule):
        envelope = _envelope_column(params, problem.meta, meta.r0, ks)
    traj = Trajectory(
        k=ks,
        f_gap_raw=stats[:, kernels.COL_F] - f_star,
        f_gap_avg=stats[:, kernels.COL_F_AVG] - f_star,
        dist_raw=stats[:, kernels.COL_DIST].copy(),
        dist_avg=stats[:, kernels.COL_DIST_AVG].copy(),
        inf_norm_raw=stats[:, kernels.COL_INF].copy(),
        inf_norm_avg=stats[:, kernels.COL_INF_AVG].copy(),
        bound_envelope=envelope,
        meta=meta,
        x_final=x_fin,
        xbar_final=xbar_fin,
        recorded=rec,
    )
    return traj


def _run_generic(problem, params, scheme, x0, x1_rule, iters, record, f_star, x_star):
    rows = iters + 1
    n = x0.size
    alpha, beta = params.alpha, params.beta
    stats = np.empty((rows, 6))
    rec_arrays = (
        tuple(np.empty((rows, n)) for _ in range(4)) if record else None
    )
    scheme_code, lw0, dlw, tail_s = _scheme_coeffs(scheme, params, problem.meta.strong_mu)
    if scheme_code == kernels.SCHEME_WEIGHTED:
        acc = _AvgAccumulator(x0, lw0, dlw)
    elif scheme_code == kernels.SCHEME_TAIL:
        acc = _TailAccumulator(x0, tail_s)
    else:
        acc = None

    def fill_row(row, f, x, xb):
        stats[row, kernels.COL_F] = f
        stats[row, kernels.COL_DIST] = np.linalg.norm(x - x_star)
        stats[row, kernels.COL_INF] = np.max(np.abs(x)) if n else 0.0
        if xb is None:
            stats[row, kernels.COL_F_AVG] = stats[row, kernels.COL_F]
            stats[row, kernels.COL_DIST_AVG] = stats[row, kernels.COL_DIST]
            stats[row, kernels.COL_INF_AVG] = stats[row, kernels.COL_INF]
        else:
            stats[row, kernels.COL_F_AVG] = problem.value(xb)
            stats[row, kernels.COL_DIST_AVG] = np.linalg.norm(xb - x_star)
            stats[row, kernels.COL_INF_AVG] = np.max(np.abs(xb)) if n else 0.0

    f0, g = problem.eval(x0)
    fill_row(0, f0, x0, None)
    if record:
        rec_arrays[0][0] = x0
        rec_arrays[1][0] = 0.0
        rec_arrays[2][0] = g
        rec_arrays[3][0] = x0

    if x1_rule == "one_grad_step":
        x = x0 - alpha * g
        m = alpha * g
    else:
        x = x0.copy()
        m = np.zeros(n)
    xp = x0.copy()

    div_k = -1
    for row in range(1, rows):
        nrm = float(np.linalg.norm(x))
        if not nrm <= DIVERGENCE_NORM:
            stats[row] = np.nan
            if record:
                for arr in rec_arrays:
                    arr[row] = np.nan
            div_k = row
            break
        f, g = problem.eval(x)
        if acc is not None:
            acc.update(row, x)
        fill_row(row, f, x, None if acc is None else acc.xbar)
        if record:
            rec_arrays[0][row] = x
            rec_arrays[1][row] = m
            rec_arrays[2][row] = g
            rec_arrays[3][row] = x if acc is None else acc.xbar
        if row == rows - 1:
            break
        x_next = x - alpha * g + beta * (x - xp)
        m = beta * m + alpha * g
        xp, x = x, x_next

    upto = rows if div_k < 0 else div_k + 1
    stats = stats[:upto]
    rec = None
    if record:
        rec = RecordedRun(
            xs=rec_arrays[0][:upto], ms=rec_arrays[1][:upto],
            gs=rec_arrays[2][:upto], avgs=rec_arrays[3][:upto],
        )
    # without averaging the "averaged" iterate is the raw one
    xbar_fin = (x if acc is None else acc.xbar).copy()
    traj = _assemble(
        problem, params, scheme, x1_rule, stats, div_k, x.copy(), xbar_fin, rec, f_star
    )
    if div_k >= 0:
        raise DivergenceError(div_k, float(np.linalg.norm(x)), trajectory=traj)
    return traj


def _run_kernel(problem, params, scheme, x0, x1_rule, iters, record, f_star, x_star):
    rows = iters + 1
    n = x0.size
    scheme_code, lw0, dlw, tail_s = _scheme_coeffs(scheme, params, problem.meta.strong_mu)
    stats = np.empty((rows, 6))
    if record:
        xs, ms, gs, avs = (np.empty((rows, n)) for _ in range(4))
    else:
        xs = ms = gs = avs = np.empty((1, 1))
    ring = np.empty((tail_s, n)) if scheme_code == kernels.SCHEME_TAIL else np.empty((1, 1))
    runsum = np.empty(n) if scheme_code == kernels.SCHEME_TAIL else np.empty(1)
    xbar_out = np.empty(n)
    x_out = np.empty(n)
    xprev_out = np.empty(n)
    if problem.diag_hessian is not None:
        A = np.empty((1, 1))
        dvec = problem.diag_hessian
        diag_mode = True
    else:
        A = problem.matrix_A
        dvec = np.empty(1)
        diag_mode = False
    div_k = kernels.traj_kernel(
        A, dvec, diag_mode, problem.linear_b, x_star, x0,
        params.alpha, params.beta, x1_rule == "one_grad_step",
        scheme_code, lw0, dlw, tail_s, record,
        stats, xs, ms, gs, avs, ring, runsum, xbar_out, x_out, xprev_out,
    )
    upto = rows if div_k < 0 else div_k + 1
    stats = stats[:upto]
    rec = (
        RecordedRun(xs=xs[:upto], ms=ms[:upto], gs=gs[:upto], avgs=avs[:upto])
        if record
        else None
    )
    if scheme.kind == "none":
        xbar_out = x_out
    traj = _assemble(
        problem, params, scheme, x1_rule, stats, div_k, x_out, xbar_out, rec, f_star
    )
    if div_k >= 0:
        raise DivergenceError(div_k, float(np.linalg.norm(x_out)), trajectory=traj)
    return traj


def run(
    problem,
    params: HBParams,
    scheme: AveragingScheme,
    x0,
    iters: int,
    x1_rule: str = "copy_x0",
    record: bool = False,
) -> Trajectory:
    """Run heavy-ball with the given averaging for ``iters`` iterations.

    Returns a trajectory with rows k = 0 .. iters.  Row 1 is the second
    starting point: a copy of x0 (``copy_x0``) or one plain gradient step
    (``one_grad_step``).  Divergence raises DivergenceError carrying the
    partial trajectory (final row holds nan values).
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if x1_rule not in X1_RULES:
        raise ValueError(f"unknown x1 rule {x1_rule!r}; known: {X1_RULES}")
    if scheme.kind == "tail" and scheme.s > iters:
        raise ValueError(f"tail window s={scheme.s} exceeds iters={iters}")
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if x0.shape != (problem.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({problem.dim},)")
    problem._check_input(x0)
    x_star, f_star = _gap_reference(problem)
    fast = (
        isinstance(problem, QuadraticProblem)
        and kernels.numba_enabled()
    )
    impl = _run_kernel if fast else _run_generic
    return impl(problem, params, scheme, x0, x1_rule, iters, record, f_star, x_star)


@dataclass(frozen=True)
class RestartSchedule:
    """Restart plan: ``tau`` stages of ``inner_n`` uniform-averaging
    iterations with per-stage (alpha, beta)."""

    tau: int
    inner_n: int
    stages: tuple[tuple[float, float], ...]
    eps: float
    r0: float


def _ceil_guarded(value: float) -> int:
    # values within 1e-9 of an integer are that integer (log2 rounding noise)
    return int(math.ceil(value - 1e-9))


def restart_schedule(meta, beta: float, eps: float, r0: float) -> RestartSchedule:
    """Stage counts from the certified restart analysis:

    N = ceil(16 (1-beta) / (alpha mu)),  tau = max(ceil(log2(mu r0^2 / eps)) - 1, 1)

    with alpha the largest stepsize inside both averaging caps.
    """
    mu = meta.strong_mu
    if mu <= 0.0:
        raise ValueError("restart schedule needs strong_mu > 0; use plain uniform averaging")
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    alpha = wahb_stepsize(meta.smooth_L, beta)
    inner_n = int(math.ceil(16.0 * (1.0 - beta) / (alpha * mu)))
    tau = max(_ceil_guarded(math.log2(mu * r0 * r0 / eps)) - 1, 1)
    return RestartSchedule(
        tau=tau, inner_n=inner_n, stages=tuple((alpha, beta) for _ in range(tau)),
        eps=float(eps), r0=float(r0),
    )


def run_rahb(problem, beta: float, eps: float, r0: float, x0) -> tuple[Trajectory, RestartSchedule]:
    """Restarted uniform averaging: each stage restarts from the previous
    stage's averaged output with the one-grad-step second point.

    Returns the concatenated trajectory (global row counter; stage start
    rows in meta.stage_starts) and the schedule.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    meta = problem.meta
    if meta.optimum_known:
        actual = float(np.linalg.norm(x0 - meta.x_star))
        if r0 < actual * (1.0 - 1e-12):
            raise ValueError(f"r0 = {r0:g} below the actual distance {actual:g}")
    sched = restart_schedule(meta, beta, eps, r0)
    alpha = sched.stages[0][0]
    params = HBParams(alpha=alpha, beta=beta)
    scheme = AveragingScheme.uniform()
    xh = x0
    pieces = []
    starts = []
    offset = 0
    for _ in range(sched.tau):
        traj = run(problem, params, scheme, xh, sched.inner_n, x1_rule="one_grad_step")
        starts.append(offset)
        offset += traj.rows
        pieces.append(traj)
        xh = traj.xbar_final
    total = offset
    ks = np.arange(total, dtype=np.int64)

    def cat(attr):
        return np.concatenate([getattr(t, attr) for t in pieces])

    meta_out = RunMeta(
        problem_name=problem.name,
        params=params,
        scheme=scheme,
        x1_rule="one_grad_step",
        r0=pieces[0].meta.r0,
        delta0=pieces[0].meta.delta0,
        optimum_known=meta.optimum_known,
        stage_starts=tuple(starts),
    )
    combined = Trajectory(
        k=ks,
        f_gap_raw=cat("f_gap_raw"),
        f_gap_avg=cat("f_gap_avg"),
        dist_raw=cat("dist_raw"),
        dist_avg=cat("dist_avg"),
        inf_norm_raw=cat("inf_norm_raw"),
        inf_norm_avg=cat("inf_norm_avg"),
        bound_envelope=None,
        meta=meta_out,
        x_final=pieces[-1].x_final,
        xbar_final=xh,
    )
    return combined, sched
