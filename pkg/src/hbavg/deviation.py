"""Worst-case transient deviation of heavy-ball on quadratics.

For f(x) = 0.5 x'Ax - b'x the stacked error (x_{k+1}-x*, x_k-x*) evolves
linearly, and after the unitary change of basis that diagonalizes A the
system splits into one 2x2 block per eigenvalue lambda_j:

    T_j = [[1 + beta - alpha*lambda_j, -beta], [1, 0]]

The worst-case deviation over all initializations is

    dev_raw      = sup_k ||C T^k||_2          (C extracts x_k - x*)
    dev_averaged = sup_k ||(1/W_k) sum_{t<=k} w_t C T^t||_2

and both reduce to a max over modes of bottom-row norms of T_j^k, which is
what the scans below compute.  Averaged deviations never exceed the raw one
(norm of an average vs. average of norms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .optim.params import AveragingScheme, HBParams, optimal_hb_params

# Confluent root pairs computed in floats come out ~sqrt(eps) apart (the
# discriminant cancels), so the switch to the repeated-root branch must sit
# above ~3e-8; 4e-8 keeps the branch error below 1e-10 out to k = 500.
_NEAR_REPEATED = 4e-8
_TAIL_TOL = 1e-6
DEFAULT_K_CAP = 1_000_000


# ---------------------------------------------------------------------------
# modal decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModalSystem:
    """Per-eigenvalue 2x2 blocks with their root pairs and regimes.

    For each mode, rho_1 rho_2 = beta and rho_1 + rho_2 = 1 + beta -
    alpha*lambda_j.  The regime is ``complex`` exactly when
    (1 + beta - alpha*lambda_j)^2 < 4*beta, and then |rho| = sqrt(beta).
    """

    eigenvalues: np.ndarray
    params: HBParams
    matrices: np.ndarray  # (n, 2, 2)
    rho1: np.ndarray  # complex
    rho2: np.ndarray  # complex
    regimes: tuple[str, ...]
    radius: np.ndarray  # spectral radius per mode
    ratio: np.ndarray  # min|rho| / max|rho|
    norm2: np.ndarray  # spectral norm of each block

    @property
    def stable(self) -> bool:
        return bool(np.all(self.radius < 1.0))


def _mode_capq(system: "ModalSystem") -> np.ndarray:
    # sum_{t<k} q^t <= 1/(1-q) once q < 1; complex/repeated modes have q = 1
    gap = 1.0 - system.ratio
    return np.where(gap > 0.0, 1.0 / np.maximum(gap, 1e-300), np.inf)


def _block_spectral_norm(a: np.ndarray, beta: float) -> np.ndarray:
    # closed form for 2x2: sigma_max^2 = (F + sqrt(F^2 - 4 det^2)) / 2
    fro2 = a * a + beta * beta + 1.0
    det2 = beta * beta
    inner = np.maximum(fro2 * fro2 - 4.0 * det2, 0.0)
    return np.sqrt((fro2 + np.sqrt(inner)) / 2.0)


def build_modal_system(eigenvalues, params: HBParams) -> ModalSystem:
    lam = np.sort(np.asarray(eigenvalues, dtype=np.float64))
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if lam[0] <= 0.0:
        raise ValueError(f"spectrum must be positive, smallest is {lam[0]:g}")
    a = 1.0 + params.beta - params.alpha * lam
    disc = a * a - 4.0 * params.beta
    sq = np.sqrt(disc.astype(np.complex128))
    rho1 = (a + sq) / 2.0
    rho2 = (a - sq) / 2.0
    mats = np.zeros((lam.size, 2, 2))
    mats[:, 0, 0] = a
    mats[:, 0, 1] = -params.beta
    mats[:, 1, 0] = 1.0
    regimes = []
    for j in range(lam.size):
        if disc[j] < 0.0:
            regimes.append("complex")
        elif abs(rho1[j] - rho2[j]) <= _NEAR_REPEATED * (abs(rho1[j]) + abs(rho2[j])):
            regimes.append("repeated")
        else:
            regimes.append("real_distinct")
    mods = np.stack([np.abs(rho1), np.abs(rho2)])
    radius = mods.max(axis=0)
    low = mods.min(axis=0)
    ratio = np.where(radius > 0.0, low / np.where(radius > 0.0, radius, 1.0), 0.0)
    return ModalSystem(
        eigenvalues=lam,
        params=params,
        matrices=mats,
        rho1=rho1,
        rho2=rho2,
        regimes=tuple(regimes),
        radius=radius,
        ratio=ratio,
        norm2=_block_spectral_norm(a, params.beta),
    )


def modal_power(T, k: int) -> np.ndarray:
    """Closed-form k-th power of a 2x2 matrix [[a, b], [1, 0]], k >= 1.

    With eigenvalues rho_1 != rho_2:

        M^k = 1/(rho2-rho1) * [[rho2^{k+1}-rho1^{k+1}, rho1 rho2 (rho1^k-rho2^k)],
                               [rho2^k-rho1^k,         rho1 rho2 (rho1^{k-1}-rho2^{k-1})]]

    and at a (near-)repeated root rho:

        M^k = [[(k+1) rho^k, -k rho^{k+1}], [k rho^{k-1}, (1-k) rho^k]].

    The repeated branch is taken when |rho1 - rho2| <= 4e-8 (|rho1|+|rho2|),
    the level below which float root pairs are indistinguishable from
    confluent ones; the distinct formula divides by rho2 - rho1 and is
    unstable there.
    """
    T = np.asarray(T, dtype=np.float64)
    if T.shape != (2, 2) or T[1, 0] != 1.0 or T[1, 1] != 0.0:
        raise ValueError("modal_power expects a 2x2 matrix with bottom row (1, 0)")
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    a, b = complex(T[0, 0]), complex(T[0, 1])
    sq = np.sqrt(complex(a * a + 4.0 * b))
    rho1 = (a + sq) / 2.0
    rho2 = (a - sq) / 2.0
    if abs(rho1 - rho2) <= _NEAR_REPEATED * (abs(rho1) + abs(rho2)):
        rho = a / 2.0
        out = np.array(
            [
                [(k + 1) * rho**k, -k * rho ** (k + 1)],
                [k * rho ** (k - 1), (1 - k) * rho**k],
            ],
            dtype=np.complex128,
        )
    else:
        denom = rho2 - rho1
        out = (
            np.array(
                [
                    [rho2 ** (k + 1) - rho1 ** (k + 1), rho1 * rho2 * (rho1**k - rho2**k)],
                    [rho2**k - rho1**k, rho1 * rho2 * (rho1 ** (k - 1) - rho2 ** (k - 1))],
                ],
                dtype=np.complex128,
            )
            / denom
        )
    scale = max(1.0, float(np.max(np.abs(out.real))))
    residue = float(np.max(np.abs(out.imag)))
    if residue > 1e-10 * scale:
        raise RuntimeError(f"unexpected imaginary residue {residue:g} in modal power")
    return out.real.copy()


# ---------------------------------------------------------------------------
# deviation measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeviationQuery:
    """What to measure: a spectrum, heavy-ball parameters, and a scheme.

    ``scheme`` is one of raw | uniform_avg | weighted_avg; weighted_avg takes
    the weight rule from ``weights`` (uniform, geometric, or linear_rate).
    ``gap_factor`` is carried for spectral-gap comparisons and not used by
    the measure itself.  The scan stops once a certified geometric tail
    bound falls below 1e-6 of the running max, capped at ``k_cap``.
    """

    spectrum: tuple
    alpha: float
    beta: float
    scheme: str = "raw"
    weights: AveragingScheme | None = None
    gap_factor: float | None = None
    k_cap: int = DEFAULT_K_CAP
    record_curves: bool = False


@dataclass(frozen=True)
class DeviationReport:
    dev_value: float
    argmax_k: int
    truncation_k: int
    converged: bool
    modes: np.ndarray
    per_mode_curves: list[np.ndarray] | None = None


def dev_measure(query: DeviationQuery) -> DeviationReport:
    """Measured deviation sup (max over modes and scanned k).

    Unstable parameters (any mode with spectral radius >= 1) give an
    infinite, non-converged report instead of an error.
    """
    params = HBParams(alpha=float(query.alpha), beta=float(query.beta))
    lam = np.unique(np.asarray(query.spectrum, dtype=np.float64))
    system = build_modal_system(lam, params)
    if not system.stable:
        return DeviationReport(
            dev_value=math.inf, argmax_k=-1, truncation_k=0, converged=False,
            modes=system.eigenvalues,
        )
    if query.scheme == "raw":
        averaged = False
        lw0 = dlw = 0.0
    elif query.scheme in ("uniform_avg", "weighted_avg"):
        averaged = True
        weights = query.weights if query.scheme == "weighted_avg" else AveragingScheme.uniform()
        if weights is None or not weights.is_weighted:
            raise ValueError("weighted_avg needs a uniform/geometric/linear_rate weight rule")
        lw0, dlw = weights.log_weight_coeffs(params, mu=float(lam[0]))
    else:
        raise ValueError(f"unknown deviation scheme {query.scheme!r}")
    capq = _mode_capq(system)
    a = system.matrices[:, 0, 0].copy()
    if kernels.numba_enabled() and not query.record_curves:
        best, argk, trunc, conv = kernels.dev_scan_nb(
            a, params.beta, system.radius, capq, system.norm2,
            int(query.k_cap), averaged, lw0, dlw, _TAIL_TOL,
        )
        curves = None
    else:
        near = np.array([r == "repeated" for r in system.regimes])
        best, argk, trunc, conv, curves = kernels.dev_scan_np(
            system.rho1, system.rho2, near, system.radius, capq, system.norm2,
            int(query.k_cap), averaged, lw0, dlw, _TAIL_TOL,
            want_curves=query.record_curves,
        )
    return DeviationReport(
        dev_value=float(best), argmax_k=int(argk), truncation_k=int(trunc),
        converged=bool(conv), modes=system.eigenvalues, per_mode_curves=curves,
    )


def dev_hb(spectrum, alpha: float, beta: float, k_cap: int = DEFAULT_K_CAP) -> float:
    return dev_measure(DeviationQuery(tuple(spectrum), alpha, beta, "raw", k_cap=k_cap)).dev_value


def dev_ahb(spectrum, alpha: float, beta: float, k_cap: int = DEFAULT_K_CAP) -> float:
    return dev_measure(
        DeviationQuery(tuple(spectrum), alpha, beta, "uniform_avg", k_cap=k_cap)
    ).dev_value


def dev_wahb(
    spectrum, alpha: float, beta: float, weights: AveragingScheme, k_cap: int = DEFAULT_K_CAP
) -> float:
    return dev_measure(
        DeviationQuery(tuple(spectrum), alpha, beta, "weighted_avg", weights=weights, k_cap=k_cap)
    ).dev_value


def hb_peak_lower_bound(kappa: float) -> float:
    """Transient peak floor for optimally tuned heavy-ball on the diagonal
    worst-case family: sqrt(kappa) / (2 e)."""
    if kappa < 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    return math.sqrt(kappa) / (2.0 * math.e)


# ---------------------------------------------------------------------------
# spectral-gap comparison against optimally tuned heavy-ball
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralGapComparison:
    """Both sides of the deviation comparison under a spectral gap.

    measured_lhs is the uniform-averaged deviation at (alpha, beta);
    measured_rhs the raw deviation at the optimal parameters; the claim is
    measured_lhs <= dev_raw_same <= ratio_bound * measured_rhs.
    """

    ratio_bound: float
    beta_range: tuple[float, float]
    measured_lhs: float
    measured_rhs: float
    dev_raw_same: float
    alpha: float
    beta: float
    lhs_report: DeviationReport
    mid_report: DeviationReport
    rhs_report: DeviationReport


def _require(cond: bool, name: str, detail: str):
    if not cond:
        raise ValueError(f"spectral-gap hypothesis failed ({name}): {detail}")


def _k_cap_estimate(system: ModalSystem) -> int:
    capq = _mode_capq(system)
    worst = 0.0
    for j in range(system.eigenvalues.size):
        r = system.radius[j]
        if r <= 0.0:
            continue
        c = min(capq[j], 1e18) * (system.norm2[j] + 1.0)
        need = 1.0 + (math.log(_TAIL_TOL) - math.log(c)) / math.log(r)
        worst = max(worst, need)
    return int(min(max(DEFAULT_K_CAP, 1.25 * worst), 50_000_000))


def spectral_gap_comparison(spectrum, gap_factor: float) -> SpectralGapComparison:
    """Deviation of averaged heavy-ball at alpha = 1/lambda_n and beta at the
    admissible interval's upper endpoint, against optimally tuned heavy-ball.

    Requires lambda_2 >= F^2 lambda_1, F > 14, F <= sqrt(lambda_n/lambda_1),
    and lambda_n >= 10000 lambda_1 (F = gap_factor).  The admissible momentum
    interval is ((1 - sqrt(lambda_2/lambda_n))^2, (1 - F sqrt(lambda_1/lambda_n))^2];
    when lambda_2 = F^2 lambda_1 exactly the interval degenerates to its
    endpoint, which is accepted.  The certified ratio is
    2 e sqrt(6) / sqrt(F^2 - 1).
    """
    lam = np.sort(np.asarray(spectrum, dtype=np.float64))
    _require(lam.size >= 2, "spectrum size", f"need at least 2 eigenvalues, got {lam.size}")
    _require(lam[0] > 0, "positive spectrum", f"lambda_1 = {lam[0]:g}")
    F = float(gap_factor)
    lam1, lam2, lamn = float(lam[0]), float(lam[1]), float(lam[-1])
    _require(F > 14.0, "F > 14", f"got F = {F:g}")
    _require(F <= math.sqrt(lamn / lam1), "F <= sqrt(lambda_n/lambda_1)",
             f"F = {F:g} > {math.sqrt(lamn / lam1):g}")
    _require(lam2 >= F * F * lam1, "lambda_2 >= F^2 lambda_1",
             f"lambda_2 = {lam2:g} < {F * F * lam1:g}")
    _require(lamn >= 10000.0 * lam1, "lambda_n >= 10000 lambda_1",
             f"ratio = {lamn / lam1:g}")
    alpha = 1.0 / lamn
    lo = (1.0 - math.sqrt(lam2 / lamn)) ** 2
    hi = (1.0 - F * math.sqrt(lam1 / lamn)) ** 2
    degenerate = abs(lo - hi) <= 1e-12 * (lo + hi)
    _require(lo < hi or degenerate, "nonempty beta interval", f"({lo:g}, {hi:g}] is empty")
    beta = hi
    factor = 2.0 * math.e * math.sqrt(6.0) / math.sqrt(F * F - 1.0)
    k_cap = _k_cap_estimate(build_modal_system(np.unique(lam), HBParams(alpha, beta)))
    opt = optimal_hb_params(lamn, lam1)
    k_cap = max(k_cap, _k_cap_estimate(build_modal_system(np.unique(lam), opt)))
    lhs = dev_measure(DeviationQuery(tuple(lam), alpha, beta, "uniform_avg", k_cap=k_cap))
    mid = dev_measure(DeviationQuery(tuple(lam), alpha, beta, "raw", k_cap=k_cap))
    rhs = dev_measure(DeviationQuery(tuple(lam), opt.alpha, opt.beta, "raw", k_cap=k_cap))
    return SpectralGapComparison(
        ratio_bound=factor,
        beta_range=(lo, hi),
        measured_lhs=lhs.dev_value,
        measured_rhs=rhs.dev_value,
        dev_raw_same=mid.dev_value,
        alpha=alpha,
        beta=beta,
        lhs_report=lhs,
        mid_report=mid,
        rhs_report=rhs,
    )
