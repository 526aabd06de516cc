"""Command line interface.

Subcommands: ``run <config>``, ``tune <config>``, ``deviation <flags>``,
``datasets inspect <path>``.  Exit codes: 0 success, 2 configuration or
validation error, 3 every cell diverged.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ..errors import ConfigError, HbavgError
from ..deviation import DeviationQuery, dev_measure, spectral_gap_comparison
from ..optim.params import AveragingScheme, optimal_hb_params
from ..problems.libsvm import inspect_libsvm
from .config import load_config
from .experiment import AllCellsDiverged, run_experiment, run_tuning

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_DIVERGED = 3


def _parse_spectrum(text: str) -> np.ndarray:
    """Explicit `l1,l2,...` list, or `mu:lam2:L:n` shorthand for the
    diagonal family (mu followed by a geometric grid from lam2 to L)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError("spectrum shorthand must be mu:lam2:L:n")
        mu, lam2, L = (float(p) for p in parts[:3])
        n = int(parts[3])
        if n < 2:
            raise ConfigError("spectrum shorthand needs n >= 2")
        if n == 2:
            return np.array([mu, L])
        return np.concatenate(([mu], np.geomspace(lam2, L, n - 1)))
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"bad spectrum {text!r}") from None


def _resolve_dev_params(args, spectrum) -> tuple[float, float]:
    lam1, lamn = float(np.min(spectrum)), float(np.max(spectrum))
    if args.beta == "optimal":
        beta = optimal_hb_params(lamn, lam1).beta
    else:
        beta = float(args.beta)
    if args.alpha == "one_over_L":
        alpha = 1.0 / lamn
    elif args.alpha == "optimal":
        alpha = optimal_hb_params(lamn, lam1).alpha
    else:
        alpha = float(args.alpha)
    return alpha, beta


def _dev_scheme(spec: str):
    if spec == "raw":
        return "raw", None
    if spec == "uniform":
        return "uniform_avg", None
    if spec == "linear_rate":
        return "weighted_avg", AveragingScheme.linear_rate()
    if spec.startswith("geometric:"):
        return "weighted_avg", AveragingScheme.geometric(float(spec.split(":", 1)[1]))
    raise ConfigError(f"unknown deviation scheme {spec!r}")


def _cmd_run(args) -> int:
    config = load_config(args.config)
    outdir = args.outdir or config.outdir
    manifest = run_experiment(config, outdir)
    cells = manifest["cells"]
    for entry in cells:
        status = "diverged" if entry["diverged"] else "ok"
        print(f"{entry['cell']}: {entry['file']} [{status}]")
    print(f"manifest: {outdir}/manifest.json")
    if cells and all(entry["diverged"] for entry in cells):
        return EXIT_ALL_DIVERGED
    return EXIT_OK


def _cmd_tune(args) -> int:
    config = load_config(args.config)
    outdir = args.outdir or config.outdir
    try:
        manifest = run_tuning(config, outdir)
    except AllCellsDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_DIVERGED
    for cell, sel in manifest["selections"].items():
        if sel is None:
            print(f"{cell}: every stepsize diverged")
        else:
            print(f"{cell}: best multiplier {sel['multiplier']:g} "
                  f"(alpha={sel['alpha']:g}, final gap {sel['final_gap']:g})")
    print(f"table: {outdir}/{manifest['table']}")
    return EXIT_OK


def _write_csv(path, header: str, row: str) -> None:
    if path:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(header + "\n" + row + "\n")
    else:
        print(header)
        print(row)


def _cmd_deviation(args) -> int:
    spectrum = _parse_spectrum(args.spectrum)
    # the spectrum field holds a list, so it is written semicolon-separated
    spec_field = args.spectrum.replace(",", ";")
    if args.gap_factor is not None:
        cmp = spectral_gap_comparison(spectrum, args.gap_factor)
        header = ("spectrum,alpha,beta,gap_factor,ratio_bound,beta_lo,beta_hi,"
                  "dev_avg,dev_raw,dev_opt,within_bound")
        ok = cmp.measured_lhs <= cmp.ratio_bound * cmp.measured_rhs
        row = (f"{spec_field},{cmp.alpha!r},{cmp.beta!r},{args.gap_factor!r},"
               f"{cmp.ratio_bound!r},{cmp.beta_range[0]!r},{cmp.beta_range[1]!r},"
               f"{cmp.measured_lhs!r},{cmp.dev_raw_same!r},{cmp.measured_rhs!r},{int(ok)}")
        _write_csv(args.output, header, row)
        return EXIT_OK
    alpha, beta = _resolve_dev_params(args, spectrum)
    scheme, weights = _dev_scheme(args.scheme)
    query = DeviationQuery(
        spectrum=tuple(spectrum), alpha=alpha, beta=beta, scheme=scheme,
        weights=weights, k_cap=args.k_cap, record_curves=args.curves is not None,
    )
    report = dev_measure(query)
    header = "spectrum,scheme,alpha,beta,dev,argmax_k,truncation_k,converged"
    row = (f"{spec_field},{args.scheme},{alpha!r},{beta!r},{report.dev_value!r},"
           f"{report.argmax_k},{report.truncation_k},{int(report.converged)}")
    _write_csv(args.output, header, row)
    if args.curves is not None and report.per_mode_curves is not None:
        with open(args.curves, "w", encoding="ascii", newline="\n") as fh:
            fh.write("mode,eigenvalue,k,norm\n")
            for j, curve in enumerate(report.per_mode_curves):
                lam = float(report.modes[j])
                for k, value in enumerate(curve):
                    fh.write(f"{j},{lam!r},{k},{float(value)!r}\n")
    return EXIT_OK


def _cmd_datasets(args) -> int:
    stats = inspect_libsvm(args.path)
    for key, value in stats.items():
        print(f"{key}={value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbavg",
        description="Heavy-ball optimizers with averaging: experiments, "
                    "stepsize tuning, and worst-case deviation measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every method cell of a config")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--outdir", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_tune = sub.add_parser("tune", help="stepsize grid search per method cell")
    p_tune.add_argument("config")
    p_tune.add_argument("-o", "--outdir", default=None)
    p_tune.set_defaults(func=_cmd_tune)

    p_dev = sub.add_parser("deviation", help="worst-case deviation of a spectrum")
    p_dev.add_argument("--spectrum", required=True,
                       help="comma list `1,10,100` or shorthand `mu:lam2:L:n`")
    p_dev.add_argument("--alpha", default="one_over_L",
                       help="float, one_over_L, or optimal")
    p_dev.add_argument("--beta", default="0.0", help="float or optimal")
    p_dev.add_argument("--scheme", default="raw",
                       help="raw | uniform | geometric:<rho> | linear_rate")
    p_dev.add_argument("--gap-factor", "--f", dest="gap_factor", type=float, default=None,
                       help="spectral-gap factor; runs the comparison against "
                            "optimally tuned parameters")
    p_dev.add_argument("--k-cap", type=int, default=1_000_000)
    p_dev.add_argument("--curves", default=None, help="write per-(mode, k) norms here")
    p_dev.add_argument("-o", "--output", default=None, help="summary CSV (default stdout)")
    p_dev.set_defaults(func=_cmd_deviation)

    p_data = sub.add_parser("datasets", help="dataset utilities")
    data_sub = p_data.add_subparsers(dest="action", required=True)
    p_inspect = data_sub.add_parser("inspect", help="parse and summarize a LIBSVM file")
    p_inspect.add_argument("path")
    p_inspect.set_defaults(func=_cmd_datasets)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, HbavgError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
