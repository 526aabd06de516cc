"""l2-regularized logistic regression oracles.

f(x) = (1/m) sum_i log(1 + exp(-y_i (Ax)_i)) + (l2/2) ||x||^2

with labels y_i in {-1, +1} and sparse features A (m x d).  The objective is
l2-strongly convex and smooth with constant sigma_max(A)^2 / (4m) + l2.

The minimizer has no closed form.  When l2 > 0 a reference minimizer is
computed once per (dataset, l2) by plain gradient descent with stepsize 1/L
until ||grad|| <= 1e-10, and cached on disk keyed by a content hash (cache
directory from the HBAVG_CACHE_DIR environment variable unless given
explicitly).
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.special import expit

from ..errors import DimensionMismatchError, NonFiniteInputError
from ..rng import SplitMix64
from .meta import ObjectiveMeta

CACHE_ENV = "HBAVG_CACHE_DIR"
_GRAD_TOL = 1e-10
_MAX_SOLVE_ITERS = 5_000_000


@dataclass(frozen=True)
class LogRegProblem:
    name: str
    features: scipy.sparse.csr_matrix
    labels: np.ndarray
    l2: float
    meta: ObjectiveMeta

    @property
    def dim(self) -> int:
        return self.meta.dim

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"{self.name}: expected vector of dim {self.dim}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteInputError(f"{self.name}: input contains non-finite entries")
        return x

    def eval(self, x):
        x = self._check_input(x)
        m = self.labels.size
        margins = self.labels * (self.features @ x)
        # log(1 + exp(-t)) computed as logaddexp(0, -t) for stability
        value = float(np.mean(np.logaddexp(0.0, -margins))) + 0.5 * self.l2 * float(x @ x)
        coeff = self.labels * expit(-margins)
        grad = -(self.features.T @ coeff) / m + self.l2 * x
        return value, grad

    def value(self, x) -> float:
        x = self._check_input(x)
        margins = self.labels * (self.features @ x)
        return float(np.mean(np.logaddexp(0.0, -margins))) + 0.5 * self.l2 * float(x @ x)


def _sigma_max(features) -> float:
    m, d = features.shape
    if min(m, d) < 3:
        return float(np.linalg.norm(features.toarray(), 2))
    v0 = np.full(min(m, d), 1.0 / np.sqrt(min(m, d)))
    s = scipy.sparse.linalg.svds(features.astype(np.float64), k=1, v0=v0,
                                 return_singular_vectors=False)
    return float(s[0])


def _content_hash(features, labels, l2: float) -> str:
    csr = scipy.sparse.csr_matrix(features)
    h = hashlib.sha256()
    h.update(repr(csr.shape).encode())
    h.update(np.asarray(csr.indptr, dtype=np.int64).tobytes())
    h.update(np.asarray(csr.indices, dtype=np.int64).tobytes())
    h.update(np.asarray(csr.data, dtype=np.float64).tobytes())
    h.update(np.asarray(labels, dtype=np.float64).tobytes())
    h.update(repr(float(l2)).encode())
    return h.hexdigest()[:16]


def _cache_dir(explicit) -> Path:
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV, "").strip()
    return Path(env) if env else Path(".hbavg_cache")


def _load_reference(path: Path, dim: int):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        fields = dict(part.split("=", 1) for part in header)
        if int(fields["dim"]) != dim:
            raise ValueError(f"cached minimizer has dim {fields['dim']}, expected {dim}")
        f_star = float(fields["f_star"])
        x = np.array([float(line) for line in fh], dtype=np.float64)
    if x.size != dim:
        raise ValueError(f"cached minimizer has {x.size} entries, expected {dim}")
    return x, f_star


def _store_reference(path: Path, x: np.ndarray, f_star: float) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write(f"dim={x.size} f_star={float(f_star)!r}\n")
        for v in x:
            fh.write(f"{float(v)!r}\n")
    os.replace(tmp, path)


def _reference_solve(problem: "LogRegProblem", smooth_L: float):
    """Gradient descent with stepsize 1/L down to ||grad|| <= 1e-10."""
    x = np.zeros(problem.dim)
    step = 1.0 / smooth_L
    for _ in range(_MAX_SOLVE_ITERS):
        _, g = problem.eval(x)
        norm = float(np.linalg.norm(g))
        if norm <= _GRAD_TOL:
            return x, problem.value(x)
        x = x - step * g
    raise RuntimeError(
        f"reference solve for {problem.name} did not reach ||grad|| <= {_GRAD_TOL:g} "
        f"within {_MAX_SOLVE_ITERS} iterations"
    )


def make_logreg(features, labels, l2: float, cache_dir=None, name: str = "logreg") -> LogRegProblem:
    """Build the oracle; for l2 > 0 also certify the optimum (cached)."""
    csr = scipy.sparse.csr_matrix(features).astype(np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.ndim != 1 or labels.size != csr.shape[0]:
        raise ValueError("labels must be a vector with one entry per sample")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    l2 = float(l2)
    if l2 < 0:
        raise ValueError(f"l2 must be nonnegative, got {l2}")
    m, d = csr.shape
    smooth_L = _sigma_max(csr) ** 2 / (4.0 * m) + l2
    base_meta = ObjectiveMeta.make(dim=d, smooth_L=smooth_L, strong_mu=l2)
    problem = LogRegProblem(name=name, features=csr, labels=labels, l2=l2, meta=base_meta)
    if l2 == 0.0:
        return problem
    cache = _cache_dir(cache_dir) / f"logreg_fstar_{_content_hash(csr, labels, l2)}.txt"
    if cache.exists():
        x_star, f_star = _load_reference(cache, d)
    else:
        x_star, f_star = _reference_solve(problem, smooth_L)
        _store_reference(cache, x_star, f_star)
    meta = ObjectiveMeta.make(dim=d, smooth_L=smooth_L, strong_mu=l2, x_star=x_star, f_star=f_star)
    return LogRegProblem(name=name, features=csr, labels=labels, l2=l2, meta=meta)


def make_synthetic_logreg(
    m: int, d: int, seed: int, l2: float, density: float = 0.2, cache_dir=None
) -> LogRegProblem:
    """Deterministic sparse classification data from the splitmix64 stream.

    Each row gets ceil(density * d) column draws (duplicates collapse), values
    standard normal; labels are the sign of a planted linear model plus noise.
    """
    m, d = int(m), int(d)
    if m < 1 or d < 2:
        raise ValueError(f"need m >= 1 and d >= 2, got m={m}, d={d}")
    if not 0 < density <= 1:
        raise ValueError(f"density must be in (0, 1], got {density}")
    rng = SplitMix64(seed)
    per_row = max(1, int(np.ceil(density * d)))
    cols = rng.integers(m * per_row, d).reshape(m, per_row)
    vals = rng.normal(m * per_row).reshape(m, per_row)
    w_true = rng.normal(d)
    noise = rng.normal(m)
    rows = np.repeat(np.arange(m), per_row)
    coo = scipy.sparse.coo_matrix((vals.ravel(), (rows, cols.ravel())), shape=(m, d))
    csr = coo.tocsr()
    csr.sum_duplicates()
    margins = csr @ w_true + 0.5 * noise
    labels = np.where(margins >= 0, 1.0, -1.0)
    return make_logreg(
        csr, labels, l2, cache_dir=cache_dir,
        name=f"logreg-synth(m={m},d={d},seed={seed},l2={l2:g})",
    )
