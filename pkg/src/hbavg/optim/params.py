"""Heavy-ball parameters, parameter selectors, and averaging weight rules."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class HBParams:
    """Stepsize alpha > 0 and momentum beta in [0, 1)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (0.0 <= self.beta < 1.0):
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")


def optimal_hb_params(L: float, mu: float) -> HBParams:
    """Fastest-rate heavy-ball parameters for an L-smooth, mu-strongly
    convex quadratic:

        alpha* = 4 / (sqrt(L) + sqrt(mu))^2
        beta*  = ((sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu)))^2
    """
    if mu <= 0:
        raise ValueError(f"optimal parameters require mu > 0, got {mu}")
    if L < mu:
        raise ValueError(f"need L >= mu, got L={L}, mu={mu}")
    sL, sm = math.sqrt(L), math.sqrt(mu)
    alpha = 4.0 / (sL + sm) ** 2
    beta = ((sL - sm) / (sL + sm)) ** 2
    return HBParams(alpha=alpha, beta=beta)


def wahb_stepsize(L: float, beta: float) -> float:
    """Largest stepsize satisfying both weighted-averaging caps:

        alpha = min( (1-beta)/(4L), (1-beta)^2/(4L*sqrt(3*beta)) )

    For beta = 0 the second cap is vacuous and the value is 1/(4L).
    """
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    if not (0.0 <= beta < 1.0):
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    first = (1.0 - beta) / (4.0 * L)
    if beta == 0.0:
        return first
    second = (1.0 - beta) ** 2 / (4.0 * L * math.sqrt(3.0 * beta))
    return min(first, second)


def wahb_caps_satisfied(alpha: float, beta: float, L: float, slack: float = 1e-12) -> bool:
    """True when alpha is within the weighted-averaging stepsize caps."""
    return alpha <= wahb_stepsize(L, beta) * (1.0 + slack)


@dataclass(frozen=True)
class AveragingScheme:
    """Which running average of the iterates a run maintains.

    kind:
      * ``none``        raw iterates, no averaging
      * ``uniform``     w_k = 1
      * ``geometric``   w_k = rho^k, rho >= 1
      * ``linear_rate`` w_k = (1 - alpha*mu/(2*(1-beta)))^-(k+1), the
        geometrically growing weights under which the averaged run has a
        certified linear-rate envelope (reduces to uniform when mu = 0)
      * ``tail``        sliding mean of the last s iterates (uniform mean
        until s iterates exist)
    """

    kind: str
    rho: float | None = None
    s: int | None = None

    _KINDS = ("none", "uniform", "geometric", "linear_rate", "tail")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown averaging kind {self.kind!r}; known: {self._KINDS}")
        if self.kind == "geometric":
            if self.rho is None or not (math.isfinite(self.rho) and self.rho >= 1.0):
                raise ValueError(f"geometric averaging needs rho >= 1, got {self.rho}")
        if self.kind == "tail":
            if self.s is None or int(self.s) < 1:
                raise ValueError(f"tail averaging needs window s >= 1, got {self.s}")

    @staticmethod
    def none() -> "AveragingScheme":
        return AveragingScheme("none")

    @staticmethod
    def uniform() -> "AveragingScheme":
        return AveragingScheme("uniform")

    @staticmethod
    def geometric(rho: float) -> "AveragingScheme":
        return AveragingScheme("geometric", rho=float(rho))

    @staticmethod
    def linear_rate() -> "AveragingScheme":
        return AveragingScheme("linear_rate")

    @staticmethod
    def tail(s: int) -> "AveragingScheme":
        return AveragingScheme("tail", s=int(s))

    @property
    def is_weighted(self) -> bool:
        return self.kind in ("uniform", "geometric", "linear_rate")

    def log_weight_coeffs(self, params: HBParams, mu: float) -> tuple[float, float]:
        """(lw0, dlw) such that log w_k = lw0 + dlw * k.

        All supported weight rules are log-affine in k, which is what lets
        runs accumulate averages in the log domain and never materialize the
        raw w_k (they overflow for long runs).
        """
        if self.kind == "uniform":
            return 0.0, 0.0
        if self.kind == "geometric":
            step = math.log(self.rho)
            return 0.0, step
        if self.kind == "linear_rate":
            q = params.alpha * mu / (2.0 * (1.0 - params.beta))
            if not q < 1.0:
                raise ValueError(
                    f"linear_rate weights undefined: alpha*mu/(2(1-beta)) = {q} >= 1"
                )
            c = -math.log1p(-q)  # -log(1 - q), so log w_k = c * (k + 1)
            return c, c
        raise ValueError(f"{self.kind} scheme has no log-affine weights")

    def log_weights(self, ks, params: HBParams, mu: float):
        import numpy as np

        lw0, dlw = self.log_weight_coeffs(params, mu)
        return lw0 + dlw * np.asarray(ks, dtype=np.float64)
