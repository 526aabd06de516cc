"""Problem family registry: builds oracles from flat config key-value dicts."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .logreg import make_logreg, make_synthetic_logreg
from .libsvm import parse_libsvm
from .quadratic import make_diag_quadratic, make_nesterov, make_random_quadratic, make_toeplitz

FAMILIES = ("diag", "random", "nesterov", "toeplitz", "logreg")


def _need(spec: dict, key: str):
    if key not in spec:
        raise ConfigError(f"missing required key for family {spec.get('family')!r}",
                          section="problem", key=key)
    return spec[key]


def _parse_interior(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    if text.startswith("geom:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError("interior geom spec must be geom:<count>:<lo>:<hi>",
                              section="problem", key="interior")
        count, lo, hi = int(parts[1]), float(parts[2]), float(parts[3])
        return list(np.geomspace(lo, hi, count))
    return [float(v) for v in text.split(",")]


def build_problem(spec: dict, cache_dir=None):
    """Construct a problem from config keys. ``spec['family']`` selects the
    generator; remaining keys are family-specific (see README)."""
    family = spec.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"unknown problem family {family!r}; known: {FAMILIES}",
                          section="problem", key="family")
    try:
        if family == "diag":
            return make_diag_quadratic(
                float(_need(spec, "mu")),
                _parse_interior(spec.get("interior", "")),
                float(_need(spec, "L")),
            )
        if family == "random":
            target = None
            if "target_mu" in spec or "target_L" in spec:
                target = (float(_need(spec, "target_mu")), float(_need(spec, "target_L")))
            return make_random_quadratic(int(_need(spec, "dim")), int(_need(spec, "seed")), target)
        if family == "nesterov":
            return make_nesterov(
                int(_need(spec, "dim")), float(_need(spec, "L")), float(_need(spec, "mu"))
            )
        if family == "toeplitz":
            shift = spec.get("pd_shift")
            return make_toeplitz(int(_need(spec, "dim")), None if shift is None else float(shift))
        # logreg: from file when `path` given, synthetic otherwise
        l2 = float(_need(spec, "l2"))
        if "path" in spec:
            features, labels, _ = parse_libsvm(spec["path"])
            return make_logreg(features, labels, l2, cache_dir=cache_dir,
                               name=f"logreg({spec['path']},l2={l2:g})")
        return make_synthetic_logreg(
            int(_need(spec, "m")), int(_need(spec, "d")), int(_need(spec, "seed")), l2,
            density=float(spec.get("density", 0.2)), cache_dir=cache_dir,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), section="problem") from exc
