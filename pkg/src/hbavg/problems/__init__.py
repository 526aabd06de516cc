from .meta import ObjectiveMeta
from .quadratic import (
    QuadraticProblem,
    make_diag_quadratic,
    make_nesterov,
    make_random_quadratic,
    make_toeplitz,
)
from .logreg import LogRegProblem, make_logreg, make_synthetic_logreg
from .libsvm import inspect_libsvm, parse_libsvm, write_libsvm
from .registry import FAMILIES, build_problem

__all__ = [
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
    "write_libsvm",
    "inspect_libsvm",
    "build_problem",
    "FAMILIES",
]
