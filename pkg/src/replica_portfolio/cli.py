"""Command-line front end.

Exit status: 0 on success, 1 on runtime failure (missing file, singular or
non-convergent solve), 2 on usage or configuration errors. Data goes to
stdout or ``--output``; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import experiment
from .analytic import DomainError, alpha_grid, predict
from .core import read_return_matrix, write_matrix_csv, write_variances
from .market import ReturnDistribution, generate
from .solvers import BPParams, SolverError, SteepestDescentParams, parse_method, solve
from .core import SolverId
from .variance_model import Identical, VarianceSpec, analytic_moments, parse_variance, preset

log = logging.getLogger("replica_portfolio")

SEED_ENV = "REPLICA_PORTFOLIO_SEED"
DEFAULT_ALPHA = "1.5:10:18"
PREDICTION_HEADER = ("alpha", "eps_quenched", "qw_quenched", "eps_annealed", "qw_annealed")

FIGURES = {
    "fig2": ("1A", "1B", "1C"),
    "fig3": ("1A", "1B", "1C"),
    "fig4": ("2A'", "2B'", "2C'"),
    "fig5": ("2A'", "2B'", "2C'"),
}


class UsageError(Exception):
    pass


# -- argument types -------------------------------------------------------------


def alpha_range(text: str) -> tuple[float, ...]:
    """``min:max:steps`` or a single value."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            grid = (float(parts[0]),)
        elif len(parts) == 3:
            grid = tuple(alpha_grid(float(parts[0]), float(parts[1]), int(parts[2])))
        else:
            raise ValueError
    except DomainError as exc:
        raise argparse.ArgumentTypeError(f"{exc} (the scenario ratio alpha must be > 1)") from None
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected alpha as min:max:steps or a number, got {text!r}") from None
    if any(not a > 1 for a in grid):
        raise argparse.ArgumentTypeError(f"alpha must be > 1, got {text!r}")
    return grid


def variance_arg(text: str) -> VarianceSpec:
    try:
        return parse_variance(text)
    except (ValueError, KeyError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def preset_arg(text: str) -> str:
    try:
        preset(text)
    except KeyError as exc:
        raise argparse.ArgumentTypeError(exc.args[0]) from None
    return text


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def beta_arg(text: str) -> float:
    if text.strip().lower() in {"inf", "infinity", "zero-temperature"}:
        return math.inf
    return positive_float(text)


def _flag(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


# -- parser -----------------------------------------------------------------------


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default_seed, help=f"base seed (default: ${SEED_ENV} or 0)")
    common.add_argument("-o", "--output", help="write data here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--config", help="key = value file supplying defaults for this subcommand")

    def spec_flags(p: argparse.ArgumentParser) -> None:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--preset", type=preset_arg, help="1A, 1B, 1C, 2A', 2B', 2C'")
        g.add_argument(
            "--variance",
            type=variance_arg,
            help="identical:s=1 | two-point:r=0.84,s=0.0741 | uniform:l=1,u=2 | explicit:file=PATH",
        )

    def solver_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--method", choices=("exact", "sd", "bp"), default="exact")
        p.add_argument("--eta-w", type=positive_float, help="steepest-descent portfolio step")
        p.add_argument("--eta-zeta", type=positive_float, help="steepest-descent multiplier step")
        p.add_argument("--delta", type=positive_float, default=1e-6, help="L1 stopping threshold")
        p.add_argument("--max-iters", type=int)
        p.add_argument("--beta", type=beta_arg, default=math.inf, help="BP inverse temperature (default inf)")
        p.add_argument("--damping", type=float, default=0.5)
        p.add_argument("--k-update", choices=("project", "gradient"), default="project")

    parser = argparse.ArgumentParser(
        prog="replica-portfolio",
        description="Minimum-variance portfolios with non-identical variances: predictions, solvers, sweeps.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("predict", parents=[common], help="closed-form quenched and annealed curves")
    p.add_argument("--alpha", type=alpha_range, default=DEFAULT_ALPHA)
    spec_flags(p)
    p.add_argument("--gamma", type=positive_float, default=1.0)

    p = sub.add_parser("gen", parents=[common], help="generate a return matrix")
    p.add_argument("--n-assets", type=int, default=200)
    size = p.add_mutually_exclusive_group()
    size.add_argument("--n-scenarios", type=int)
    size.add_argument("--alpha", type=float, default=2.0)
    spec_flags(p)
    p.add_argument("--distribution", choices=[d.value for d in ReturnDistribution], default="gaussian")
    p.add_argument("--variances-output", help="also write the generating variances here")

    p = sub.add_parser("solve", parents=[common], help="solve one instance and print a JSON report")
    p.add_argument("--matrix", required=True, help="CSV, one row per asset")
    p.add_argument("--variances", help="one variance per line")
    p.add_argument("--weights-output", help="write the optimal weights here")
    solver_flags(p)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo sweep over alpha")
    p.add_argument("--n-assets", type=int, default=200)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--alpha", type=alpha_range, default=DEFAULT_ALPHA)
    spec_flags(p)
    p.add_argument("--distribution", choices=[d.value for d in ReturnDistribution], default="gaussian")
    p.add_argument("--gamma", type=positive_float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--save", help="also write the full JSON result here")
    solver_flags(p)

    p = sub.add_parser("compare", parents=[common], help="z-scores of a saved sweep against predictions")
    p.add_argument("--result", required=True, help="JSON written by simulate --save or --format json")

    p = sub.add_parser("reproduce", parents=[common], help="figure data for Case 1 or Case 2")
    p.add_argument("figure", choices=sorted(FIGURES))
    p.add_argument("--n-assets", type=int, default=200)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--alpha", type=alpha_range, default=DEFAULT_ALPHA)
    p.add_argument("--output-dir", default=".")
    p.add_argument("--workers", type=int, default=1)
    solver_flags(p)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    """Parse ``argv``; if ``--config`` is given, its keys become subcommand defaults."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string("[defaults]\n" + Path(args.config).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {args.config}: {exc}") from None

    subparser = _subparser(parser, args.command)
    actions = {a.dest: a for a in subparser._actions}
    defaults: dict[str, Any] = {}
    for key, raw in cp["defaults"].items():
        dest = key.strip().replace("-", "_")
        action = actions.get(dest)
        if action is None or dest in {"config", "help", "command"}:
            raise UsageError(f"{args.config}: unknown key {key!r} for '{args.command}'")
        try:
            if action.nargs == 0:
                value: Any = _flag(raw)
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{args.config}: bad value for {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{args.config}: {key} must be one of {list(action.choices)}")
        defaults[dest] = value
    if "preset" in defaults and "variance" in defaults:
        raise UsageError(f"{args.config}: preset and variance are mutually exclusive")
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


# -- helpers ----------------------------------------------------------------------


def _spec(args: argparse.Namespace) -> tuple[VarianceSpec, str | None]:
    if getattr(args, "preset", None):
        return preset(args.preset), args.preset
    if getattr(args, "variance", None) is not None:
        return args.variance, None
    return Identical(1.0), None


def _solver_params(args: argparse.Namespace):
    method = parse_method(args.method)
    if method is SolverId.STEEPEST_DESCENT:
        kw = {"eta_w": args.eta_w, "eta_zeta": args.eta_zeta, "delta": args.delta}
        if args.max_iters is not None:
            kw["max_iters"] = args.max_iters
        return SteepestDescentParams(**kw)
    if method is SolverId.BELIEF_PROPAGATION:
        kw = {"beta": args.beta, "damping": args.damping, "delta": args.delta, "k_update": args.k_update}
        if args.max_iters is not None:
            kw["max_iters"] = args.max_iters
        return BPParams(**kw)
    return None


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_to_csv(rows: list[dict[str, Any]], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _prediction_rows(alphas: Sequence[float], spec: VarianceSpec, gamma: float = 1.0) -> list[dict[str, float]]:
    m = analytic_moments(spec)
    return [predict(float(a), m, gamma).as_row() for a in alphas]


# -- subcommands ------------------------------------------------------------------


def cmd_predict(args: argparse.Namespace) -> int:
    spec, _ = _spec(args)
    rows = _prediction_rows(args.alpha, spec, args.gamma)
    _emit(args, _json(rows) if args.format == "json" else _rows_to_csv(rows, PREDICTION_HEADER))
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    spec, _ = _spec(args)
    p = args.n_scenarios if args.n_scenarios is not None else int(round(args.alpha * args.n_assets))
    X = generate(args.n_assets, p, spec, args.distribution, args.seed)
    if args.output:
        write_matrix_csv(X, args.output)
    else:
        np.savetxt(sys.stdout, X.entries, delimiter=",", fmt="%.17g")
    if args.variances_output:
        write_variances(X, args.variances_output)
    log.info("generated N=%d p=%d alpha=%g", X.n_assets, X.n_scenarios, X.alpha)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        X = read_return_matrix(args.matrix, args.variances)
    except OSError as exc:
        print(f"error: cannot read matrix {args.matrix}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: malformed input {args.matrix}: {exc}", file=sys.stderr)
        return 1
    report = solve(X, args.method, _solver_params(args))
    _emit(args, _json(report.to_dict()))
    if args.weights_output:
        np.savetxt(args.weights_output, report.portfolio.weights, fmt="%.17g")
    if not report.converged:
        print(
            f"error: {report.solver_id.value} did not converge in {report.iterations} iterations",
            file=sys.stderr,
        )
        return 1
    return 0


def _sweep_config(args: argparse.Namespace, spec: VarianceSpec, preset_name: str | None) -> experiment.SweepConfig:
    return experiment.SweepConfig(
        n_assets=args.n_assets,
        alpha_grid=tuple(args.alpha),
        samples=args.samples,
        spec=spec,
        preset_name=preset_name,
        dist=getattr(args, "distribution", "gaussian"),
        method=args.method,
        base_seed=args.seed,
        gamma=getattr(args, "gamma", 1.0),
        solver_params=_solver_params(args),
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    spec, preset_name = _spec(args)
    cfg = _sweep_config(args, spec, preset_name)
    result = experiment.run_sweep(cfg, workers=args.workers)
    log.info("sweep finished in %.2f s", result.metadata["wall_time_s"])
    if args.save:
        experiment.save(result, args.save, include_timing=False)
    if args.format == "json":
        _emit(args, experiment.dumps(result, include_timing=False))
    else:
        _emit(args, experiment.to_csv(result))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        result = experiment.load(args.result)
    except OSError as exc:
        print(f"error: cannot read {args.result}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    rows = experiment.compare(result)
    dicts = [r.as_dict() for r in rows]
    if args.format == "json":
        _emit(args, _json(dicts))
    else:
        _emit(args, _rows_to_csv(dicts, list(dicts[0])))
    frac = experiment.fraction_consistent(rows)
    print(f"{frac:.0%} of grid points within 3 standard errors of the quenched prediction", file=sys.stderr)
    return 0


def _file_tag(name: str) -> str:
    return name.replace("'", "prime")


def cmd_reproduce(args: argparse.Namespace) -> int:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    curve_rows = []
    dense = np.linspace(min(args.alpha), max(args.alpha), 200)
    for name in FIGURES[args.figure]:
        spec = preset(name)
        cfg = _sweep_config(args, spec, name)
        started = time.perf_counter()
        result = experiment.run_sweep(cfg, workers=args.workers)
        log.info("%s: %d alphas x %d samples in %.2f s", name, len(cfg.alpha_grid), cfg.samples, time.perf_counter() - started)
        path = out / f"{args.figure}_{_file_tag(name)}.csv"
        experiment.write_csv(result, path)
        written.append(path)
        curve_rows.extend({"preset": name, **row} for row in _prediction_rows(dense, spec))
    curves = out / f"{args.figure}_predictions.csv"
    curves.write_text(_rows_to_csv(curve_rows, ("preset",) + PREDICTION_HEADER))
    written.append(curves)
    _emit(args, "".join(f"{p}\n" for p in written))
    return 0


COMMANDS = {
    "predict": cmd_predict,
    "gen": cmd_gen,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "reproduce": cmd_reproduce,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser = build_parser(_default_seed())
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not argv:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 2
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (DomainError, experiment.ResultFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, DomainError) else 1
    except (SolverError, experiment.SweepFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
