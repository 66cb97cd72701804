import argparse
import logging
import sys
from pathlib import Path

from src.conf.config import config
from src.entity.errors import (EXIT_CHART_EXIT, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, NUMERICAL_ERRORS,
                               TangentBodyError)
from src.entity.models import DerivativeBackend, TerminationReason
from src.repository import outputs
from src.services import runner

logger = logging.getLogger("tangent_body")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, help="JSON run config")
    common.add_argument("--out-dir", type=Path, default=None, help="Directory for output files")
    common.add_argument("--tol-scale", type=float, default=1.0, help="Multiply every check threshold")
    common.add_argument("--jobs", type=int, default=1, help="Worker processes for sweeps (1 = sequential)")
    common.add_argument("--log-level", default=None, help="Overrides TANGENT_BODY_LOG_LEVEL")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tangent-body",
                                     description="Simulate a spinning tangent rigid body on a curved space")
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common()
    check = commands.add_parser("geometry-check", parents=[common],
                                help="Structure equations, curvature symmetries and curvature oracle on a grid")
    check.add_argument("--backend", choices=[b.value for b in DerivativeBackend],
                       default=DerivativeBackend.analytic.value)
    commands.add_parser("simulate", parents=[common], help="Integrate one trajectory and validate it")
    commands.add_parser("sweep", parents=[common], help="Simulate every point of a parameter grid")
    return parser


def cmd_geometry_check(args) -> int:
    run = runner.load_config(args.config)
    report = runner.geometry_check(run, DerivativeBackend(args.backend), args.tol_scale)
    outputs.write_report(report, args.out_dir / run.outputs.report)
    for check in report.checks:
        if not check.passed:
            logger.error("%s at %s: %.3e > %.3e", check.name, check.point, check.value, check.threshold)
    print(f"{report.scenario}: {len(report.checks) - report.failures}/{len(report.checks)} checks passed")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_simulate(args) -> int:
    run = runner.load_config(args.config)
    simulation = runner.simulate(run)
    outputs.write_trajectory(simulation.record, args.out_dir / run.outputs.trajectory)
    outputs.write_diagnostics(simulation.diagnostics, args.out_dir / run.outputs.diagnostics)
    if simulation.diagnostics.termination_reason == TerminationReason.chart_exit:
        return EXIT_CHART_EXIT
    runner.check_thresholds(simulation.diagnostics, run.tolerances.scaled(args.tol_scale))
    return EXIT_OK


def cmd_sweep(args) -> int:
    run = runner.load_config(args.config)
    rows = runner.sweep(run, args.jobs)
    outputs.write_sweep_summary(rows, args.out_dir / run.outputs.summary)
    failed = sum(row.status == "failed" for row in rows)
    print(f"{len(rows)} sweep points, {failed} failed")
    return EXIT_OK


COMMANDS = {
    "geometry-check": cmd_geometry_check,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    """
    The main function is the ``tangent-body`` entry point.

    Exit codes: 0 success, 2 configuration error, 3 chart exit, 4 validation threshold
    exceeded, 5 numerical failure.

    :param argv: list[str] | None: Arguments, ``sys.argv[1:]`` when omitted
    :return: Process exit code
    """
    args = build_parser().parse_args(argv)
    level = (args.log_level or config.LOG_LEVEL).upper()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args.out_dir = args.out_dir or Path(config.OUT_DIR)
    try:
        return COMMANDS[args.command](args)
    except TangentBodyError as err:
        logger.error("%s", err)
        return err.exit_code
    except NUMERICAL_ERRORS as err:
        logger.exception("numerical failure: %s", err)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
