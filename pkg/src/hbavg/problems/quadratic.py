"""Quadratic objective families f(x) = 0.5 x'Ax - b'x with certified spectra.

Four generators are provided: an explicit diagonal family, a Gaussian random
family (A = Ahat'Ahat with optional affine respectraling), the classical
worst-case chain quadratic ("nesterov"), and a banded Toeplitz family with
first row (2, -1, 1, 0, ..., 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import DimensionMismatchError, IndefiniteMatrixError, NonFiniteInputError
from ..rng import SplitMix64
from .meta import ObjectiveMeta

_SINGULAR_RATIO = 1e-12


@dataclass(frozen=True)
class QuadraticProblem:
    """Dense SPD quadratic with precomputed eigenvalues.

    ``eigenvalues`` are ascending; meta.smooth_L / meta.strong_mu are the
    extreme eigenvalues.  ``diag_hessian`` is set when A is diagonal so
    runners can take the cheap gradient path.  ``diag_shift`` records an
    applied positive-definiteness shift (Toeplitz family only).
    """

    name: str
    matrix_A: np.ndarray
    linear_b: np.ndarray
    eigenvalues: np.ndarray
    meta: ObjectiveMeta
    diag_hessian: np.ndarray | None = field(default=None, repr=False)
    diag_shift: float = 0.0

    @property
    def dim(self) -> int:
        return self.meta.dim

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"{self.name}: expected vector of dim {self.dim}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteInputError(f"{self.name}: input contains non-finite entries")
        return x

    def eval(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Return (f(x), grad f(x)) with one Hessian product."""
        x = self._check_input(x)
        if self.diag_hessian is not None:
            ax = self.diag_hessian * x
        else:
            ax = self.matrix_A @ x
        grad = ax - self.linear_b
        value = 0.5 * float(x @ ax) - float(self.linear_b @ x)
        return value, grad

    def value(self, x: np.ndarray) -> float:
        return self.eval(x)[0]


def _finalize(name, A, b, eigenvalues, x_star, f_star, diag=None, shift=0.0) -> QuadraticProblem:
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    eigenvalues = np.ascontiguousarray(eigenvalues, dtype=np.float64)
    meta = ObjectiveMeta.make(
        dim=A.shape[0],
        smooth_L=eigenvalues[-1],
        strong_mu=eigenvalues[0],
        x_star=x_star,
        f_star=f_star,
    )
    A.setflags(write=False)
    b.setflags(write=False)
    eigenvalues.setflags(write=False)
    return QuadraticProblem(
        name=name,
        matrix_A=A,
        linear_b=b,
        eigenvalues=eigenvalues,
        meta=meta,
        diag_hessian=diag,
        diag_shift=shift,
    )


def make_diag_quadratic(mu: float, interior, L: float) -> QuadraticProblem:
    """diag(mu, interior..., L) quadratic with b = 0, so x* = 0 and f* = 0.

    The supplied values must be ascending with mu first and L last; a
    violation reports the offending position.
    """
    interior = [float(v) for v in interior]
    eigs = [float(mu), *interior, float(L)]
    if eigs[0] <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    for i in range(1, len(eigs)):
        if eigs[i] < eigs[i - 1]:
            raise ValueError(
                f"eigenvalue ordering violated at index {i}: "
                f"{eigs[i]} < {eigs[i - 1]}"
            )
    eigenvalues = np.array(eigs)
    n = eigenvalues.size
    A = np.diag(eigenvalues)
    zeros = np.zeros(n)
    return _finalize(
        f"diag(mu={mu:g},L={L:g},n={n})",
        A,
        zeros,
        eigenvalues,
        x_star=zeros,
        f_star=0.0,
        diag=eigenvalues,
    )


def make_random_quadratic(dim: int, seed: int, spectrum_target=None) -> QuadraticProblem:
    """A = Ahat'Ahat with Ahat i.i.d. standard normal (splitmix64 stream).

    The minimizer x* is drawn from the same stream and b = A x*.  With
    ``spectrum_target = (mu, L)`` the eigenvalues are affinely mapped onto
    [mu, L] while keeping the Gaussian eigenvectors.  Identical seeds give
    bit-identical problems.
    """
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = SplitMix64(seed)
    ahat = rng.normal(dim * dim).reshape(dim, dim)
    x_star = rng.normal(dim)
    A = ahat.T @ ahat
    A = 0.5 * (A + A.T)
    lam, vec = np.linalg.eigh(A)
    if spectrum_target is not None:
        mu_t, L_t = float(spectrum_target[0]), float(spectrum_target[1])
        if not (0 < mu_t <= L_t):
            raise ValueError(f"spectrum_target must satisfy 0 < mu <= L, got ({mu_t}, {L_t})")
        spread = lam[-1] - lam[0]
        if spread <= 0:
            raise ValueError("degenerate spectrum, cannot rescale")
        mapped = mu_t + (lam - lam[0]) * ((L_t - mu_t) / spread)
        A = (vec * mapped) @ vec.T
        A = 0.5 * (A + A.T)
        lam = np.linalg.eigh(A)[0]
    elif lam[0] <= _SINGULAR_RATIO * lam[-1]:
        raise IndefiniteMatrixError(
            float(lam[0]),
            f"random quadratic is numerically singular (lambda_min = {lam[0]:g}); "
            "pass spectrum_target=(mu, L) to fix the spectrum",
        )
    b = A @ x_star
    f_star = -0.5 * float(x_star @ b)
    return _finalize(
        f"random(dim={dim},seed={seed})", A, b, np.sort(lam), x_star=x_star, f_star=f_star
    )


def make_nesterov(dim: int, L: float, mu: float) -> QuadraticProblem:
    """Chain quadratic used for first-order lower bounds.

    Hessian = ((L-mu)/4) * A3 + mu*I where A3 is the tridiagonal matrix of
    the form x_1^2 + sum_i (x_i - x_{i+1})^2 (diagonal 2,...,2,1 and
    off-diagonal -1); the linear term is ((L-mu)/4, 0, ..., 0).
    """
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    L, mu = float(L), float(mu)
    if not L > mu > 0:
        raise ValueError(f"need L > mu > 0, got L={L}, mu={mu}")
    scale = (L - mu) / 4.0
    A3 = np.zeros((dim, dim))
    np.fill_diagonal(A3, 2.0)
    A3[dim - 1, dim - 1] = 1.0
    off = np.arange(dim - 1)
    A3[off, off + 1] = -1.0
    A3[off + 1, off] = -1.0
    H = scale * A3 + mu * np.eye(dim)
    b = np.zeros(dim)
    b[0] = scale
    x_star = np.linalg.solve(H, b)
    # one refinement pass keeps the residual at rounding level
    x_star = x_star + np.linalg.solve(H, b - H @ x_star)
    resid = np.linalg.norm(H @ x_star - b)
    if resid > 1e-10 * max(np.linalg.norm(b), 1e-300):
        raise RuntimeError(f"linear solve residual too large: {resid:g}")
    f_star = 0.5 * float(x_star @ (H @ x_star)) - float(b @ x_star)
    lam = np.linalg.eigvalsh(H)
    return _finalize(f"nesterov(dim={dim},L={L:g},mu={mu:g})", H, b, lam, x_star, f_star)


def make_toeplitz(dim: int, pd_shift: float | None = None) -> QuadraticProblem:
    """Symmetric Toeplitz quadratic with first row (2, -1, 1, 0, ..., 0).

    The band is indefinite for large dim.  Default is to fail loudly with
    the smallest eigenvalue; passing pd_shift > 0 instead adds
    (|lambda_min| + pd_shift) * I and records the shift.
    """
    dim = int(dim)
    if dim < 3:
        raise ValueError(f"dim must be >= 3, got {dim}")
    col = np.zeros(dim)
    col[0], col[1], col[2] = 2.0, -1.0, 1.0
    A = scipy.linalg.toeplitz(col)
    lam = np.linalg.eigvalsh(A)
    shift = 0.0
    if lam[0] <= 0.0:
        if pd_shift is None:
            raise IndefiniteMatrixError(
                float(lam[0]),
                f"toeplitz(dim={dim}) is indefinite (lambda_min = {lam[0]:g}); "
                "pass pd_shift > 0 to shift the diagonal",
            )
        if pd_shift <= 0:
            raise ValueError(f"pd_shift must be positive, got {pd_shift}")
        shift = abs(float(lam[0])) + float(pd_shift)
        A = A + shift * np.eye(dim)
        lam = lam + shift
    n = dim
    zeros = np.zeros(n)
    return _finalize(
        f"toeplitz(dim={dim},shift={shift:g})",
        A,
        zeros,
        lam,
        x_star=zeros,
        f_star=0.0,
        shift=shift,
    )
