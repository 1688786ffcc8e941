"""Two-phase periodic metric command-line interface"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import logging
import pathlib
import sys
from typing import Callable, Dict, Generator, Optional, TextIO

from twophase import __version__
from twophase.coefficient import format_exponent, parse_exponent
from twophase.config import RunConfig, load_config
from twophase.errors import ConfigError, Error, InfeasibleError
from twophase.experiments import (
    CriticalRunConfig,
    recovery_table,
    run_bounds_suite,
    run_critical,
    run_rate,
    run_recovery,
)
from twophase.grid_solver import distance_folded
from twophase.homogenization import check_norm_properties, psi_table
from twophase.opacity import estimate_lambda, verify_avoidance
from twophase.protocols import WRITERS
from twophase.types import Point2, Table, format_float

logger = logging.getLogger("twophase")


def _point(text: str) -> Point2:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a point x,y but got {text!r}")
    return Point2(x, y)


def parse_args(argv=None):
    """Parse command-line arguments.

    Args:
        argv: A list of argument strings to use instead of sys.argv.

    Returns:
        An `argparse.Namespace` object containing the parsed arguments.
    """
    # Shared flags may be given before or after the subcommand.
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=pathlib.Path, help="Run configuration file")
    common.add_argument("--out", type=str, help="Output directory (- for STDOUT)")
    common.add_argument("--seed", type=int, help="Seed of random draws")
    common.add_argument("--svg", action="store_true", help="Also write SVG charts")
    common.add_argument(
        "-v", "--verbose", action="store_true", help="Log debugging messages"
    )
    common.add_argument("-q", "--quiet", action="store_true", help="Log warnings only")

    parser = argparse.ArgumentParser(
        description=__doc__.splitlines()[0] if __doc__ else None, parents=[common]
    )
    parser.add_argument("-V", "--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    distance = commands.add_parser(
        "distance", parents=[common], help="Geodesic distance between two points"
    )
    distance.add_argument("--from", dest="xi1", type=_point, required=True)
    distance.add_argument("--to", dest="xi2", type=_point, required=True)
    distance.add_argument("--epsilon", type=float, help="Override [metric] epsilon")
    distance.add_argument("--p", type=parse_exponent, help="Override [metric] p")

    homogenize = commands.add_parser(
        "homogenize", parents=[common], help="Tabulate the homogenized norm"
    )
    homogenize.add_argument(
        "--directions", type=int, help="Override [experiment] directions"
    )

    lambda_ = commands.add_parser(
        "lambda", parents=[common], help="Estimate the high opacity coefficient"
    )
    lambda_.add_argument(
        "--avoidance",
        action="store_true",
        help="Also print the inclusion avoidance report as CSV",
    )

    commands.add_parser(
        "avoidance", parents=[common], help="Check that geodesics avoid inclusions"
    )
    commands.add_parser(
        "critical", parents=[common], help="Two-sequence critical exponent sweep"
    )
    commands.add_parser(
        "rate", parents=[common], help="Convergence rate of distances for p < 1"
    )
    commands.add_parser(
        "bounds", parents=[common], help="Check distance bounds on random pairs"
    )
    commands.add_parser(
        "recovery", parents=[common], help="Wall-pushed and piecewise-geodesic curves"
    )
    return parser.parse_args(argv)


@contextlib.contextmanager
def open_output(
    filename: Optional[pathlib.Path], **kwargs
) -> Generator[TextIO, None, None]:
    """Open `filename` for writing, or STDOUT when it is None."""
    if filename is None:
        yield sys.stdout
    else:
        with open(filename, mode="w", **kwargs) as f:
            yield f


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if "config" in args else RunConfig()
    output = config.output
    if "out" in args:
        output = dataclasses.replace(output, out_dir=args.out)
    if getattr(args, "svg", False):
        output = dataclasses.replace(output, emit_svg=True)
    config = dataclasses.replace(config, output=output)
    if "seed" in args:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _write(
    config: RunConfig, name: str, data: Table, protocol: str = "csv", **protocol_args
) -> None:
    out_dir = config.output.out_dir
    if out_dir == "-":
        path = None
    else:
        path = pathlib.Path(out_dir) / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"Cannot create output directory {out_dir}: {e}")
    write = WRITERS[protocol]({"header": config.header(), **protocol_args})
    with open_output(path) as f:
        write(f, data)
    if path is not None:
        logger.info("Wrote %s", path)


def _lambda_hat(config: RunConfig) -> float:
    return estimate_lambda(config.make_shape(), config.experiment.n_samples).lambda_hat


def cmd_distance(config: RunConfig, args: argparse.Namespace) -> None:
    params = config.metric_params()
    if args.epsilon is not None:
        params = params.with_epsilon(args.epsilon)
    if args.p is not None:
        params = dataclasses.replace(params, p=args.p)
    result = distance_folded(
        config.make_shape(), params, args.xi1, args.xi2, config.grid_spec()
    )
    print(f"distance: {format_float(result.value)}")
    print(f"vertices: {len(result.path)}")
    _write(config, "geodesic.csv", result.path.records())


def cmd_homogenize(config: RunConfig, args: argparse.Namespace) -> None:
    exp = config.experiment
    directions = args.directions if args.directions is not None else exp.directions
    table = psi_table(
        config.make_shape(),
        config.metric.beta,
        directions,
        exp.R_list,
        config.grid_spec(),
        workers=config.solver.workers,
    )
    report = check_norm_properties(table, exp.tol_grid)
    records = table.records()
    for record in records.records:
        print(
            f"angle {float(record['angle']):.4f}: psi {float(record['psi']):.6f}"
            f" (converged: {record['converged']})"
        )
    print(f"norm checks: {'passed' if report.passed else 'failed'}")
    _write(config, "psi.csv", records)
    if config.output.emit_svg:
        _write(
            config,
            "psi.svg",
            records,
            "svg-polar",
            angle="angle",
            radius="psi",
            title=f"homogenized norm, beta={config.metric.beta:g}",
        )


def cmd_lambda(config: RunConfig, args: argparse.Namespace) -> None:
    shape = config.make_shape()
    estimate = estimate_lambda(shape, config.experiment.n_samples)
    a, b = estimate.worst_pair
    print(f"lambda: {format_float(estimate.lambda_hat)}")
    print(f"worst pair: ({a.x:.6f}, {a.y:.6f}) ({b.x:.6f}, {b.y:.6f})")
    _write(
        config,
        "lambda.csv",
        Table(
            fields=["lambda", "ax", "ay", "bx", "by", "n_samples"],
            records=[
                {
                    "lambda": format_float(estimate.lambda_hat),
                    "ax": format_float(a.x),
                    "ay": format_float(a.y),
                    "bx": format_float(b.x),
                    "by": format_float(b.y),
                    "n_samples": str(estimate.n_samples),
                }
            ],
        ),
    )
    if args.avoidance:
        report = verify_avoidance(
            shape,
            config.metric.beta,
            config.experiment.n_trials,
            config.grid_spec(),
            seed=config.seed,
            lambda_hat=estimate.lambda_hat,
            workers=config.solver.workers,
        )
        WRITERS["csv"]({"header": config.header()})(sys.stdout, report.records())


def cmd_avoidance(config: RunConfig, args: argparse.Namespace) -> None:
    report = verify_avoidance(
        config.make_shape(),
        config.metric.beta,
        config.experiment.n_trials,
        config.grid_spec(),
        seed=config.seed,
        lambda_hat=_lambda_hat(config),
        workers=config.solver.workers,
    )
    print(f"avoidance expected: {str(report.asserted).lower()}")
    print(f"violations: {len(report.violations)}/{len(report.trials)}")
    print(f"max depth: {report.max_depth:.3g} (grid spacing {report.spacing:.3g})")
    _write(config, "avoidance.csv", report.records())


def cmd_critical(config: RunConfig, args: argparse.Namespace) -> None:
    exp = config.experiment
    run = CriticalRunConfig(
        shape=config.make_shape(),
        beta=config.metric.beta,
        p_list=config.metric.p_list,
        k_range=exp.ks,
        xi1=exp.xi1,
        xi2=exp.xi2,
        spec=config.grid_spec(),
        R_list=exp.R_list,
        tol_grid=exp.tol_grid,
        gap_tolerance=exp.gap_tolerance,
        workers=config.solver.workers,
        lambda_hat=_lambda_hat(config),
    )
    result = run_critical(run)
    print(f"reference distance: {result.psi_ref:.6f}")
    for verdict in result.verdicts.values():
        print(verdict)
    table = result.records_table(timings=config.output.timings)
    _write(config, "critical.csv", table)
    if config.output.emit_svg:
        for p in run.p_list:
            name = format_exponent(p)
            _write(
                config,
                f"critical_p{name}.svg",
                Table(table.fields, [r for r in table.records if r["p"] == name]),
                "svg-lines",
                x="k",
                y="distance",
                group="parity",
                title=f"p={name}",
            )


def cmd_rate(config: RunConfig, args: argparse.Namespace) -> None:
    exp = config.experiment
    report = run_rate(
        config.make_shape(),
        config.metric.beta,
        config.metric.p,
        exp.xi1,
        exp.xi2,
        config.metric.epsilon_list,
        config.grid_spec(),
        lambda_hat=_lambda_hat(config),
        tol_grid=exp.tol_grid,
        R_list=exp.R_list,
        workers=config.solver.workers,
    )
    consistent = report.consistent(exp.exponent_tolerance)
    print(
        f"rate exponent: {report.exponent:.4g} "
        f"(envelope {report.envelope_exponent:.4g}, "
        f"consistent: {str(consistent).lower()})"
    )
    print(f"within envelope: {str(report.all_within).lower()}")
    records = report.records()
    _write(config, "rate.csv", records)
    if config.output.emit_svg:
        _write(
            config,
            "rate.svg",
            records,
            "svg-lines",
            x="epsilon",
            y="deviation",
            logx=True,
            logy=True,
            title=f"p={format_exponent(report.p)}",
        )


def cmd_bounds(config: RunConfig, args: argparse.Namespace) -> None:
    exp = config.experiment
    report = run_bounds_suite(
        config.make_shape(),
        config.metric.beta,
        config.metric.p,
        config.metric.epsilon,
        exp.n_pairs,
        config.grid_spec(),
        seed=config.seed,
        lambda_hat=_lambda_hat(config),
        tol_grid=exp.tol_grid,
    )
    print(f"pairs: {len(report.pairs)}")
    print(f"skipped: {len(report.skipped)}")
    print(f"violations: {len(report.violations)}")
    _write(config, "bounds.csv", report.records())


def cmd_recovery(config: RunConfig, args: argparse.Namespace) -> None:
    exp = config.experiment
    records = run_recovery(
        config.make_shape(),
        config.metric.beta,
        config.metric.p,
        exp.xi1,
        exp.xi2,
        config.metric.epsilon_list,
        exp.refine_pieces,
        config.grid_spec(),
        R_list=exp.R_list,
        workers=config.solver.workers,
    )
    for r in records:
        print(
            f"epsilon {r.epsilon:.4g} pieces {r.pieces}: "
            f"{r.refined_length:.6f} (wall {r.wall_length:.6f}, limit {r.psi_ref:.6f})"
        )
    _write(config, "recovery.csv", recovery_table(records))


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], None]] = {
    "distance": cmd_distance,
    "homogenize": cmd_homogenize,
    "lambda": cmd_lambda,
    "avoidance": cmd_avoidance,
    "critical": cmd_critical,
    "rate": cmd_rate,
    "bounds": cmd_bounds,
    "recovery": cmd_recovery,
}


def main(argv=None) -> int:
    """Run script.

    Args:
        argv: A list of argument strings to use instead of sys.argv.

    Returns:
        The process exit code.
    """
    try:
        args = parse_args(argv)
    except SystemExit as e:
        # Usage errors share the config error code.
        return 1 if e.code == 2 else e.code
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        config = _resolve_config(args)
        COMMANDS[args.command](config, args)
    except Error as e:
        message = str(e)
        if isinstance(e, InfeasibleError):
            message = f"disconnected: {message}"
        print(f"twophase: error: {message}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"twophase: error: {e}", file=sys.stderr)
        return 1
    return 0
