"""Experiment configuration: a flat INI format with one section per method.

Sections:

* ``[problem]``  family = diag | random | nesterov | toeplitz | logreg plus
  family-specific keys (see README).
* ``[run]``      iters, seed, x0 = zeros|ones|gauss, outdir, parallelism.
* ``[tune]``     grid = comma-separated multipliers of 1/L (optional; the
  13-point grid 2^-4 .. 256 is the default).
* ``[method <name>]`` one per method cell: kind = hb|ahb|wahb|tahb|rahb,
  alpha = <float>|one_over_L|optimal|wahb_cap, beta = <float>|optimal, and
  per-kind keys (rho/weights for wahb, s for tahb, eps/r0 for rahb, x1).

Canonicalization sorts sections and keys so key order and whitespace do not
change the config hash.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..optim.params import AveragingScheme, HBParams, optimal_hb_params, wahb_stepsize

DEFAULT_TUNE_GRID = (
    0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0
)
_METHOD_KINDS = ("hb", "ahb", "wahb", "tahb", "rahb")
_X0_MODES = ("zeros", "ones", "gauss")


@dataclass(frozen=True)
class MethodCell:
    name: str
    kind: str
    alpha: str
    beta: str
    rho: float | None = None
    weights: str | None = None
    s: int | None = None
    x1: str | None = None
    eps: float | None = None
    r0: str | None = None  # float or "auto"

    def default_x1(self) -> str:
        if self.x1 is not None:
            return self.x1
        return "one_grad_step" if self.kind == "wahb" else "copy_x0"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    iters: int
    seed: int
    x0_mode: str
    outdir: str
    parallelism: int
    tune_grid: tuple[float, ...]
    cells: tuple[MethodCell, ...]
    sections: dict = field(repr=False, default_factory=dict)


def _read_ini(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return {name: dict(parser[name]) for name in parser.sections()}


def canonical_text(sections: dict) -> str:
    lines = []
    for name in sorted(sections):
        lines.append(f"[{name}]")
        for key in sorted(sections[name]):
            value = " ".join(str(sections[name][key]).split())
            lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def config_hash(sections: dict) -> str:
    return hashlib.sha256(canonical_text(sections).encode()).hexdigest()


def cell_hash(config: ExperimentConfig, cell: MethodCell) -> str:
    parts = {
        "problem": dict(config.sections.get("problem", {})),
        "cell": dict(config.sections.get(f"method {cell.name}", {})),
        "run": {
            "iters": str(config.iters),
            "seed": str(config.seed),
            "x0": config.x0_mode,
        },
    }
    return hashlib.sha256(canonical_text(parts).encode()).hexdigest()[:12]


def cell_seed(top_seed: int, cell_name: str) -> int:
    digest = hashlib.sha256(f"{top_seed}:{cell_name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _get_int(sec: dict, section: str, key: str, default=None) -> int:
    raw = sec.get(key, default)
    if raw is None:
        raise ConfigError("missing required key", section=section, key=key)
    try:
        return int(str(raw))
    except ValueError:
        raise ConfigError(f"expected integer, got {raw!r}", section=section, key=key) from None


def _get_float(sec: dict, section: str, key: str) -> float:
    raw = sec.get(key)
    try:
        return float(str(raw))
    except (TypeError, ValueError):
        raise ConfigError(f"expected number, got {raw!r}", section=section, key=key) from None


def _parse_cell(name: str, sec: dict) -> MethodCell:
    section = f"method {name}"
    kind = sec.get("kind")
    if kind not in _METHOD_KINDS:
        raise ConfigError(f"unknown method kind {kind!r}; known: {_METHOD_KINDS}",
                          section=section, key="kind")
    known = {"kind", "alpha", "beta", "rho", "weights", "s", "x1", "eps", "r0"}
    for key in sec:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", section=section)
    alpha = sec.get("alpha", "one_over_L")
    beta = sec.get("beta")
    if beta is None:
        raise ConfigError("missing required key", section=section, key="beta")
    x1 = sec.get("x1")
    if x1 is not None and x1 not in ("copy_x0", "one_grad_step"):
        raise ConfigError(f"x1 must be copy_x0 or one_grad_step, got {x1!r}",
                          section=section, key="x1")
    rho = float(sec["rho"]) if "rho" in sec else None
    weights = sec.get("weights")
    if weights is not None and weights not in ("linear_rate", "uniform"):
        raise ConfigError(f"weights must be linear_rate or uniform, got {weights!r}",
                          section=section, key="weights")
    s = _get_int(sec, section, "s") if "s" in sec else None
    eps = _get_float(sec, section, "eps") if "eps" in sec else None
    r0 = sec.get("r0")
    if kind == "wahb" and rho is None and weights is None:
        raise ConfigError("wahb needs rho = <float> or weights = linear_rate|uniform",
                          section=section)
    if kind == "tahb" and s is None:
        raise ConfigError("tahb needs a tail window s", section=section, key="s")
    if kind == "rahb" and eps is None:
        raise ConfigError("rahb needs a target accuracy eps", section=section, key="eps")
    return MethodCell(name=name, kind=kind, alpha=str(alpha), beta=str(beta), rho=rho,
                      weights=weights, s=s, x1=x1, eps=eps, r0=r0)


def load_config(path) -> ExperimentConfig:
    sections = _read_ini(path)
    if "problem" not in sections:
        raise ConfigError("missing [problem] section")
    run = sections.get("run", {})
    iters = _get_int(run, "run", "iters")
    if iters < 1:
        raise ConfigError("iters must be >= 1", section="run", key="iters")
    seed = _get_int(run, "run", "seed", default="0")
    x0_mode = run.get("x0", "zeros")
    if x0_mode not in _X0_MODES:
        raise ConfigError(f"x0 must be one of {_X0_MODES}", section="run", key="x0")
    parallelism = _get_int(run, "run", "parallelism", default="1")
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1", section="run", key="parallelism")
    outdir = run.get("outdir", "results")
    grid = DEFAULT_TUNE_GRID
    if "tune" in sections and "grid" in sections["tune"]:
        try:
            grid = tuple(float(v) for v in sections["tune"]["grid"].split(","))
        except ValueError:
            raise ConfigError("grid must be comma-separated numbers",
                              section="tune", key="grid") from None
        if not grid or any(g <= 0 for g in grid):
            raise ConfigError("grid entries must be positive", section="tune", key="grid")
    cells = []
    for name in sections:
        if name.startswith("method "):
            cell_name = name[len("method "):].strip()
            if not cell_name:
                raise ConfigError("method section needs a name: [method <name>]")
            cells.append(_parse_cell(cell_name, sections[name]))
    if not cells:
        raise ConfigError("no [method <name>] sections; at least one is required")
    names = [c.name for c in cells]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate method names: {sorted(names)}")
    return ExperimentConfig(
        problem=dict(sections["problem"]),
        iters=iters,
        seed=seed,
        x0_mode=x0_mode,
        outdir=outdir,
        parallelism=parallelism,
        tune_grid=grid,
        cells=tuple(cells),
        sections=sections,
    )


def resolve_params(cell: MethodCell, meta, alpha_override: float | None = None) -> HBParams:
    """Turn the cell's alpha/beta rules into concrete parameters using the
    problem's certified constants."""
    L, mu = meta.smooth_L, meta.strong_mu
    if cell.beta == "optimal":
        if mu <= 0:
            raise ConfigError("beta=optimal needs strong_mu > 0",
                              section=f"method {cell.name}", key="beta")
        beta = optimal_hb_params(L, mu).beta
    else:
        try:
            beta = float(cell.beta)
        except ValueError:
            raise ConfigError(f"bad beta {cell.beta!r}",
                              section=f"method {cell.name}", key="beta") from None
    if alpha_override is not None:
        return HBParams(alpha=alpha_override, beta=beta)
    rule = cell.alpha
    if rule == "one_over_L":
        alpha = 1.0 / L
    elif rule == "optimal":
        if mu <= 0:
            raise ConfigError("alpha=optimal needs strong_mu > 0",
                              section=f"method {cell.name}", key="alpha")
        alpha = optimal_hb_params(L, mu).alpha
    elif rule == "wahb_cap":
        alpha = wahb_stepsize(L, beta)
    else:
        try:
            alpha = float(rule)
        except ValueError:
            raise ConfigError(f"bad alpha {rule!r}",
                              section=f"method {cell.name}", key="alpha") from None
    return HBParams(alpha=alpha, beta=beta)


def resolve_scheme(cell: MethodCell) -> AveragingScheme:
    if cell.kind == "hb":
        return AveragingScheme.none()
    if cell.kind in ("ahb", "rahb"):
        return AveragingScheme.uniform()
    if cell.kind == "wahb":
        if cell.weights == "linear_rate":
            return AveragingScheme.linear_rate()
        if cell.weights == "uniform":
            return AveragingScheme.uniform()
        return AveragingScheme.geometric(cell.rho)
    return AveragingScheme.tail(cell.s)
