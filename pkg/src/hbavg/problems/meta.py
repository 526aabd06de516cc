"""Certified objective metadata: smoothness and strong-convexity constants."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ObjectiveMeta:
    """Constants certified for an objective.

    ``smooth_L`` is a Lipschitz constant of the gradient, ``strong_mu`` a
    strong-convexity modulus (0 for merely convex objectives), and ``kappa``
    their ratio (inf when strong_mu is 0).  When the minimizer is known,
    ``x_star`` and ``f_star`` are stored and the gradient at x_star must be
    negligible.
    """

    dim: int
    smooth_L: float
    strong_mu: float
    kappa: float
    optimum_known: bool = False
    x_star: np.ndarray | None = None
    f_star: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if not (math.isfinite(self.smooth_L) and self.smooth_L >= 0.0):
            raise ValueError(f"smooth_L must be finite and nonnegative, got {self.smooth_L}")
        if not (math.isfinite(self.strong_mu) and self.strong_mu >= 0.0):
            raise ValueError(f"strong_mu must be finite and nonnegative, got {self.strong_mu}")
        if self.smooth_L < self.strong_mu:
            raise ValueError(
                f"smooth_L ({self.smooth_L}) must be >= strong_mu ({self.strong_mu})"
            )
        if self.optimum_known:
            if self.x_star is None or self.f_star is None:
                raise ValueError("optimum_known requires x_star and f_star")
            if self.x_star.shape != (self.dim,):
                raise ValueError("x_star has wrong dimension")

    @staticmethod
    def make(dim, smooth_L, strong_mu, x_star=None, f_star=None) -> "ObjectiveMeta":
        kappa = smooth_L / strong_mu if strong_mu > 0 else math.inf
        known = x_star is not None
        x = None if x_star is None else np.ascontiguousarray(x_star, dtype=np.float64)
        return ObjectiveMeta(
            dim=int(dim),
            smooth_L=float(smooth_L),
            strong_mu=float(strong_mu),
            kappa=float(kappa),
            optimum_known=known,
            x_star=x,
            f_star=None if f_star is None else float(f_star),
        )

    def relaxed_to_convex(self) -> "ObjectiveMeta":
        """Copy with strong_mu forced to 0 (every mu-strongly convex function
        is also 0-strongly convex, so bounds for the convex case apply)."""
        return dataclasses.replace(self, strong_mu=0.0, kappa=math.inf)
