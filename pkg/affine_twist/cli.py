"""
Command-line entry point.

Each subcommand runs the job of the same name; items go to standard output
as JSON (or plain text with --pretty) and optionally to a CSV feed. Exit
codes: 0 on success, 1 when a computation hits a mathematical obstruction,
2 on a usage error.
"""

import argparse
import logging
import sys
from fractions import Fraction

from affine_twist.exceptions import MathError
from affine_twist.fusion import CONVENTIONS
from affine_twist.jobs import crawl, load_jobs
from affine_twist.jobs.mlde_jobs import BOUNDARY_TWISTED, FIT_FAMILIES, GROUP_NAMES
from affine_twist.jobs.series_jobs import FAMILIES
from affine_twist.pipelines import open_pipelines
from affine_twist.settings import get_settings

logger = logging.getLogger(__name__)

COMMON_OPTIONS = ("trunc", "eps_degree", "log_level", "config", "pretty", "csv", "command")


def configure_logging(level, fmt=None):
    """One stderr handler for the whole package; stdout carries results only."""
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=fmt or "%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _int_tuple(text):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common_parser():
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("common options")
    group.add_argument("--trunc", type=Fraction, default=None, help="truncation order in q (default 24)")
    group.add_argument("--eps-degree", type=int, default=None, help="starting degree of limit expansions")
    group.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    group.add_argument("--config", default=None, help="project file (default affine_twist.cfg)")
    group.add_argument("--pretty", action="store_true", help="human-readable output instead of JSON")
    group.add_argument("--csv", default=None, metavar="PATH", help="also write the items to a CSV file")
    return parent


def _theta_arguments(parser):
    parser.add_argument("--index", type=int, choices=(1, 2, 3, 4), required=True)
    parser.add_argument("--exponent", type=Fraction, default=Fraction(0), help="z = q^EXPONENT")
    parser.add_argument("--turn", type=Fraction, default=Fraction(0), help="phase e^(2 pi i TURN) of z")
    parser.add_argument("--u", type=int, default=1, help="modulus q^U")


def _eta_arguments(parser):
    parser.add_argument("--u", type=int, default=1)


def _eisenstein_arguments(parser):
    parser.add_argument("--k", type=int, required=True)
    parser.add_argument("--lam", type=Fraction, default=None, help="twist phi = e^(2 pi i LAM)")
    parser.add_argument("--turn", type=Fraction, default=None, help="twist theta = e^(2 pi i TURN)")


def _char_arguments(parser):
    parser.add_argument("family", choices=FAMILIES)
    parser.add_argument("--u", type=int, default=None)
    parser.add_argument("--j", type=int, default=None)
    parser.add_argument("--module", default=None)
    parser.add_argument("--flow", default=None, help="write negative values as --flow=-1/2")
    parser.add_argument("--z", default=None, help="'1' for the limit, or exponents s_i of z_i = q^s_i")
    parser.add_argument("--y", default=None, choices=("1",))
    parser.add_argument("--directions", type=_int_tuple, default=None, help="limit directions c_i")


def _mlde_verify_arguments(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--operator", default=None, help="name of a stored operator")
    source.add_argument("--operator-file", default=None)
    parser.add_argument("--series-file", default=None)
    parser.add_argument("--family", choices=FAMILIES, default=None)
    parser.add_argument("--u", type=int, default=None)
    parser.add_argument("--j", type=int, nargs="+", dest="js", default=None)
    parser.add_argument("--module", nargs="+", dest="modules", default=None)
    parser.add_argument("--flow", default=None)
    parser.add_argument("--z", default=None)
    parser.add_argument("--through", type=Fraction, default=None)


def _mlde_fit_arguments(parser):
    parser.add_argument("--order", type=int, required=True)
    parser.add_argument("--group", choices=sorted(GROUP_NAMES), default="gamma0-2")
    parser.add_argument(
        "--family",
        choices=FIT_FAMILIES,
        default=BOUNDARY_TWISTED,
        help="the twisted boundary family at --u, or the characters of a stored operator",
    )
    parser.add_argument("--u", type=int, default=None)


def _level_arguments(parser, required=True):
    parser.add_argument("--p", type=int, required=required)
    parser.add_argument("--q", type=int, required=required)


def _fusion_arguments(parser):
    _level_arguments(parser)
    parser.add_argument("--convention", choices=CONVENTIONS, default=None)
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--all", action="store_true")
    mode.add_argument("--oracle", choices=("twisted", "hw", "contra"), default=None)
    parser.add_argument("--kinds", default=None, help="two kinds for --all, e.g. HW,TW_HW")
    parser.add_argument("--a", default=None, metavar="KIND:n:kappa")
    parser.add_argument("--b", default=None, metavar="KIND:n:kappa")


def _zhu_arguments(parser):
    _level_arguments(parser)
    parser.add_argument("--untwisted", action="store_true")


def _vector_arguments(parser, with_level=False):
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--vector", default=None, help="name of a stored vector")
    source.add_argument("--state", default=None, help="'<terms> |hw: level=L, j=J>'")
    parser.add_argument("--vector-file", default=None)
    if with_level:
        _level_arguments(parser, required=False)


def _ul0_arguments(parser):
    _level_arguments(parser)
    parser.add_argument("--bound", type=int, default=None)


ARGUMENTS = {
    "theta": _theta_arguments,
    "eta": _eta_arguments,
    "eisenstein": _eisenstein_arguments,
    "char": _char_arguments,
    "mlde-verify": _mlde_verify_arguments,
    "mlde-fit": _mlde_fit_arguments,
    "fusion": _fusion_arguments,
    "zhu": _zhu_arguments,
    "verlinde": lambda parser: None,
    "singular-check": _vector_arguments,
    "zhu-image": lambda parser: _vector_arguments(parser, with_level=True),
    "ul0": _ul0_arguments,
}


def build_parser(jobs=None):
    jobs = jobs or load_jobs()
    parser = argparse.ArgumentParser(prog="affine_twist", description="Characters, MLDEs and fusion rules.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = _common_parser()
    for name in sorted(jobs):
        sub = subparsers.add_parser(name, parents=[parent], help=(jobs[name].__doc__ or "").strip() or None)
        ARGUMENTS.get(name, lambda p: None)(sub)
    return parser


def _settings_for(args):
    settings = get_settings(args.config)
    if args.trunc is not None:
        settings["DEFAULT_TRUNCATION"] = args.trunc
    if args.eps_degree is not None:
        settings["EPS_DEGREE"] = args.eps_degree
    if args.log_level is not None:
        settings["LOG_LEVEL"] = args.log_level
    return settings


def main(argv=None, stdout=None):
    jobs = load_jobs()
    parser = build_parser(jobs)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    settings = _settings_for(args)
    configure_logging(settings["LOG_LEVEL"], settings["LOG_FORMAT"])

    options = {k: v for k, v in vars(args).items() if k not in COMMON_OPTIONS}
    job = jobs[args.command](settings, **options)
    pipelines = open_pipelines(stdout or sys.stdout, settings, pretty=args.pretty, csv_path=args.csv)
    try:
        crawl(job, pipelines)
    except MathError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    return 0
