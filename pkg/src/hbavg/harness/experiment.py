"""Experiment orchestration: cells to trajectory CSVs plus a manifest.

Every (method, parameter) cell writes ``<kind>_<cellhash>.csv`` with header

    k,f_gap_raw,f_gap_avg,dist_raw,dist_avg,inf_norm_raw,bound_envelope

Values are shortest-roundtrip floats; ``nan`` appears only on divergence
rows (the manifest flags the cell); an empty envelope field means the
certified bound does not apply to that run.  ``manifest.json`` lists every
emitted file with the cell's resolved parameters and timing.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DivergenceError
from ..optim.params import HBParams
from ..optim.runner import Trajectory, run, run_rahb
from ..problems.registry import build_problem
from ..rng import SplitMix64
from .config import (
    ExperimentConfig,
    MethodCell,
    cell_hash,
    cell_seed,
    config_hash,
    resolve_params,
    resolve_scheme,
)

CSV_HEADER = "k,f_gap_raw,f_gap_avg,dist_raw,dist_avg,inf_norm_raw,bound_envelope"


class AllCellsDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class RunRecord:
    """One executed cell: where its trajectory went and how the run ended."""

    config_hash: str
    cell: str
    file: str | None
    walltime_s: float
    diverged: bool
    selected_alpha: float | None = None


def _fmt(value: float) -> str:
    if math.isnan(value):
        return "nan"
    return repr(float(value))


def write_trajectory_csv(path, traj: Trajectory) -> None:
    env = traj.bound_envelope
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for i in range(traj.rows):
            env_field = ""
            if env is not None and math.isfinite(env[i]):
                env_field = _fmt(env[i])
            fh.write(
                f"{traj.k[i]},{_fmt(traj.f_gap_raw[i])},{_fmt(traj.f_gap_avg[i])},"
                f"{_fmt(traj.dist_raw[i])},{_fmt(traj.dist_avg[i])},"
                f"{_fmt(traj.inf_norm_raw[i])},{env_field}\n"
            )


def read_trajectory_csv(path):
    """Columns back as float arrays (absent envelope entries become nan)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    cols = {name: [] for name in CSV_HEADER.split(",")}
    names = CSV_HEADER.split(",")
    for row in rows:
        for name, field in zip(names, row):
            cols[name].append(float(field) if field else math.nan)
    return {name: np.asarray(vals) for name, vals in cols.items()}


def _make_x0(mode: str, dim: int, seed: int) -> np.ndarray:
    if mode == "zeros":
        return np.zeros(dim)
    if mode == "ones":
        return np.ones(dim)
    return SplitMix64(seed).normal(dim)


def _execute_cell(problem, config: ExperimentConfig, cell: MethodCell,
                  alpha_override: float | None = None):
    """Returns (trajectory, diverged, stage_starts, params)."""
    params = resolve_params(cell, problem.meta, alpha_override)
    x0 = _make_x0(config.x0_mode, problem.dim, cell_seed(config.seed, cell.name))
    if cell.kind == "rahb":
        r0 = None
        if cell.r0 not in (None, "auto"):
            r0 = float(cell.r0)
        elif problem.meta.optimum_known:
            r0 = float(np.linalg.norm(x0 - problem.meta.x_star))
        else:
            raise ConfigError("rahb needs r0 (optimum unknown, cannot derive it)",
                              section=f"method {cell.name}", key="r0")
        try:
            traj, sched = run_rahb(problem, params.beta, cell.eps, r0, x0)
        except DivergenceError as exc:
            return exc.trajectory, True, exc.trajectory.meta.stage_starts, params
        # the restart schedule derives its own stepsize; report that one
        actual = HBParams(alpha=sched.stages[0][0], beta=params.beta)
        return traj, False, traj.meta.stage_starts, actual
    scheme = resolve_scheme(cell)
    try:
        traj = run(problem, params, scheme, x0, config.iters,
                   x1_rule=cell.default_x1())
        return traj, False, None, params
    except DivergenceError as exc:
        return exc.trajectory, True, None, params


def run_experiment(config: ExperimentConfig, outdir) -> dict:
    """Execute every cell and write CSVs plus manifest.json; returns the
    manifest dict."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config.problem)
    chash = config_hash(config.sections)

    def job(cell: MethodCell):
        start = time.perf_counter()
        traj, diverged, stages, params = _execute_cell(problem, config, cell)
        elapsed = time.perf_counter() - start
        return cell, traj, diverged, stages, params, elapsed

    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(job, config.cells))
    else:
        results = [job(cell) for cell in config.cells]

    entries = []
    for cell, traj, diverged, stages, params, elapsed in results:
        fname = f"{cell.kind}_{cell_hash(config, cell)}.csv"
        write_trajectory_csv(out / fname, traj)
        record = RunRecord(config_hash=chash, cell=cell.name, file=fname,
                           walltime_s=elapsed, diverged=bool(diverged))
        entries.append({
            **dataclasses.asdict(record),
            "kind": cell.kind,
            "alpha": params.alpha,
            "beta": params.beta,
            "x1_rule": traj.meta.x1_rule,
            "scheme": traj.meta.scheme.kind,
            "rows": int(traj.rows),
            "divergence_k": traj.meta.divergence_k,
            "stage_starts": list(stages) if stages else None,
            "optimum_known": bool(traj.meta.optimum_known),
        })
    manifest = {
        "config_hash": chash,
        "problem": {"name": problem.name, **config.problem},
        "cells": entries,
    }
    with open(out / "manifest.json", "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def run_tuning(config: ExperimentConfig, outdir) -> dict:
    """Grid search over stepsize multipliers of 1/L, one row per
    (cell, multiplier) in tuning_table.csv.

    Selection per cell: smallest final averaged gap among non-diverged runs
    (raw gap for the unaveraged hb).  Raises AllCellsDiverged when nothing
    survives anywhere.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config.problem)
    L = problem.meta.smooth_L
    chash = config_hash(config.sections)
    for cell in config.cells:
        if cell.kind == "rahb":
            raise ConfigError("rahb derives its stepsize internally and cannot be tuned",
                              section=f"method {cell.name}")

    rows = []
    selections = {}
    any_converged = False
    for cell in config.cells:
        best = None
        for mult in config.tune_grid:
            alpha = mult / L
            start = time.perf_counter()
            traj, diverged, _, params = _execute_cell(problem, config, cell,
                                                      alpha_override=alpha)
            elapsed = time.perf_counter() - start
            criterion = "f_gap_raw" if cell.kind == "hb" else "f_gap_avg"
            final = getattr(traj, criterion)[-1] if traj.rows else math.nan
            record = RunRecord(config_hash=chash, cell=cell.name, file=None,
                               walltime_s=elapsed, diverged=bool(diverged))
            rows.append({
                **dataclasses.asdict(record), "kind": cell.kind,
                "multiplier": mult, "alpha": params.alpha, "beta": params.beta,
                "final_gap": float(final), "criterion": criterion,
            })
            if not diverged and math.isfinite(final):
                any_converged = True
                if best is None or final < best[1]:
                    best = (mult, float(final), params.alpha)
        selections[cell.name] = None if best is None else {
            "multiplier": best[0], "final_gap": best[1], "alpha": best[2],
        }
    if not any_converged:
        raise AllCellsDiverged("every grid cell diverged")
    table = out / "tuning_table.csv"
    with open(table, "w", encoding="ascii", newline="\n") as fh:
        fh.write("cell,kind,multiplier,alpha,beta,criterion,final_gap,diverged,selected\n")
        for row in rows:
            sel = selections[row["cell"]]
            picked = sel is not None and sel["multiplier"] == row["multiplier"]
            fh.write(
                f"{row['cell']},{row['kind']},{_fmt(row['multiplier'])},{_fmt(row['alpha'])},"
                f"{_fmt(row['beta'])},{row['criterion']},{_fmt(row['final_gap'])},"
                f"{int(row['diverged'])},{int(picked)}\n"
            )
    manifest = {
        "config_hash": chash,
        "problem": {"name": problem.name, **config.problem},
        "grid": list(config.tune_grid),
        "selections": selections,
        "table": table.name,
    }
    with open(out / "manifest.json", "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
