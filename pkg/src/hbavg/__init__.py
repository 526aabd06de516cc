"""Heavy-ball optimization with iterate averaging.

Library layout:

* ``problems``   objective oracles (quadratic families, logistic regression,
  LIBSVM ingestion) with certified smoothness/strong-convexity constants
* ``optim``      steppers and runners for hb/ahb/wahb/tahb/rahb, parameter
  selectors, and certified convergence envelopes
* ``deviation``  worst-case transient deviation measures on quadratics via
  per-eigenvalue 2x2 modal systems
* ``harness``    config-driven experiment runner, stepsize tuning, CSV output

Hot loops are numba-compiled by default; set HBAVG_DISABLE_NUMBA=1 for the
pure-numpy path.
"""

from . import deviation, harness, kernels, optim, problems
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DivergenceError,
    HbavgError,
    IndefiniteMatrixError,
    NonFiniteInputError,
    ParseError,
)
from .optim import (
    AveragingScheme,
    HBParams,
    Trajectory,
    bound_envelope,
    optimal_hb_params,
    run,
    run_rahb,
    wahb_stepsize,
)
from .problems import (
    LogRegProblem,
    ObjectiveMeta,
    QuadraticProblem,
    make_diag_quadratic,
    make_logreg,
    make_nesterov,
    make_random_quadratic,
    make_synthetic_logreg,
    make_toeplitz,
    parse_libsvm,
)
from .rng import SplitMix64

__version__ = "0.1.0"

__all__ = [
    "problems",
    "optim",
    "deviation",
    "harness",
    "kernels",
    "HBParams",
    "AveragingScheme",
    "Trajectory",
    "optimal_hb_params",
    "wahb_stepsize",
    "bound_envelope",
    "run",
    "run_rahb",
    "ObjectiveMeta",
    "QuadraticProblem",
    "LogRegProblem",
    "make_diag_quadratic",
    "make_random_quadratic",
    "make_nesterov",
    "make_toeplitz",
    "make_logreg",
    "make_synthetic_logreg",
    "parse_libsvm",
    "SplitMix64",
    "HbavgError",
    "DimensionMismatchError",
    "NonFiniteInputError",
    "IndefiniteMatrixError",
    "ParseError",
    "DivergenceError",
    "ConfigError",
]
