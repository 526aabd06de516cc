"""Exception types shared across the package."""

from __future__ import annotations


class HbavgError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(HbavgError, ValueError):
    """Input vector does not match the problem dimension."""


class NonFiniteInputError(HbavgError, ValueError):
    """Input contains nan or inf entries."""


class IndefiniteMatrixError(HbavgError, ValueError):
    """Constructed quadratic is not positive definite."""

    def __init__(self, lambda_min: float, message: str | None = None):
        self.lambda_min = lambda_min
        super().__init__(message or f"matrix is not positive definite (lambda_min = {lambda_min:g})")


class ParseError(HbavgError, ValueError):
    """Malformed dataset file; carries the 1-based line number (0 for
    file-level problems)."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no > 0 else ""
        super().__init__(prefix + message)


class DivergenceError(HbavgError, RuntimeError):
    """Iterates blew up; carries the iteration index and the iterate norm.

    `trajectory` holds the rows recorded before divergence (the final row
    carries nan values) so callers can persist partial runs.
    """

    def __init__(self, k: int, norm: float, trajectory=None):
        self.k = k
        self.norm = norm
        self.trajectory = trajectory
        super().__init__(f"divergence at iteration {k} (||x_k|| = {norm:g})")


class ConfigError(HbavgError, ValueError):
    """Invalid experiment configuration; carries section/key context."""

    def __init__(self, message: str, section: str | None = None, key: str | None = None):
        self.section = section
        self.key = key
        where = "".join(
            part for part in (f"[{section}] " if section else "", f"{key}: " if key else "")
        )
        super().__init__(where + message)
