"""
Command-line front end: solve, scan, ggm and verify.

Exit codes: 0 success, 1 usage error, 2 valid but empty result,
3 internal invariant failure.
"""
import argparse
import logging
import sys
from fractions import Fraction

import pandas as pd

from sos_ggm.components.charts import create_count_chart, create_region_heatmap, create_solution_chart
from sos_ggm.config import config
from sos_ggm.models.boundary_law import ModelParams, solve_zero_field
from sos_ggm.models.data import dumps_json, load_scan, scan_csv, write_output
from sos_ggm.models.external_field import FieldParams, enumerate_measure_candidates, solve_field_generic
from sos_ggm.models.ggm_core import (
    boundary_law_from_pair,
    build_window,
    SizeBudgetExceeded,
    check_consistency,
    compare_tables,
    marginal_table,
    mixed_measure,
    pinned_measure,
)
from sos_ggm.models.phase_diagram import PhaseEngine
from sos_ggm.verify import CHECKS, run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_EMPTY = 2
EXIT_INTERNAL = 3

MARGINAL_TOL = 1e-8


class UsageError(ValueError):
    """Invalid flag values, reported with exit code 1"""


class CommandParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_number(text):
    """Decimal or rational string as an exact Fraction"""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _params(args):
    if args.k < 2:
        raise UsageError(f"--k must be at least 2, got {args.k}")
    if args.tau <= 2:
        raise UsageError(f"--tau must exceed 2, got {args.tau}")
    if args.tol <= 0:
        raise UsageError(f"--tol must be positive, got {args.tol}")
    return ModelParams(args.k, args.tau)


def _field_params(args, params):
    if args.h1 is None and args.h2 is None:
        return None
    h1 = args.h1 if args.h1 is not None else Fraction(1)
    h2 = args.h2 if args.h2 is not None else Fraction(1)
    if h1 <= 0 or h2 <= 0:
        raise UsageError(f"field values must be positive, got h1={h1}, h2={h2}")
    return FieldParams(params, h1=h1, h2=h2)


def _solutions(args):
    params = _params(args)
    fp = _field_params(args, params)
    if fp is None:
        return solve_zero_field(params, method=args.method, tol=args.tol)
    if params.k == 2 and fp.uniform:
        return enumerate_measure_candidates(params.tau, fp.h1, tol=args.tol)
    return solve_field_generic(fp, seed=args.seed, tol=args.tol)


def _solution_record(sol):
    branch = getattr(sol, "branch", None) or sol.kind
    return {"a": float(sol.a), "b": float(sol.b), "branch": branch, "residuals": [float(r) for r in sol.residuals]}


def cmd_solve(args, out):
    solutions = _solutions(args)
    records = [_solution_record(s) for s in solutions]
    write_output(dumps_json(records), args.output, out)
    if args.figure:
        write_output(dumps_json(create_solution_chart(pd.DataFrame(records))), args.figure)
    return EXIT_OK if records else EXIT_EMPTY


def _scan_text(result, fmt):
    if fmt == "csv":
        lines = [f"# transition tau={t.tau:.17g} left={t.left} right={t.right}" for t in result.transitions]
        return scan_csv(result) + "".join(line + "\n" for line in lines)
    return dumps_json(result.to_json())


def _check_scan_flags(args):
    if args.k < 2:
        raise UsageError(f"--k must be at least 2, got {args.k}")
    if not 2 < args.tau_min < args.tau_max:
        raise UsageError(f"need 2 < --tau-min < --tau-max, got {args.tau_min} and {args.tau_max}")
    if args.steps < 2 or (args.h_steps is not None and args.h_steps < 2):
        raise UsageError("--steps and --h-steps must be at least 2")
    if args.workers < 1:
        raise UsageError(f"--workers must be at least 1, got {args.workers}")
    if args.h_min is None and args.h_max is None:
        return False
    if args.h_min is None or args.h_max is None:
        raise UsageError("--h-min and --h-max go together")
    if args.k != 2:
        raise UsageError("field scans are implemented for k=2")
    if not 0 < args.h_min < args.h_max:
        raise UsageError(f"need 0 < --h-min < --h-max, got {args.h_min} and {args.h_max}")
    if args.cache:
        raise UsageError("--cache applies to tau scans only")
    return True


def cmd_scan(args, out):
    field_scan = _check_scan_flags(args)
    engine = PhaseEngine(args.method, args.workers)
    if field_scan:
        result = engine.scan_tau_h(
            (float(args.tau_min), float(args.tau_max)),
            (float(args.h_min), float(args.h_max)),
            (args.steps, args.h_steps or args.steps),
        )
        figure = create_region_heatmap(result.to_frame(), result.metadata["curves"])
    else:
        if args.cache:
            result = load_scan(args.k, args.tau_min, args.tau_max, args.steps, args.method, args.workers)
        else:
            result = engine.scan_tau(args.k, args.tau_min, args.tau_max, args.steps)
        figure = create_count_chart(result.to_frame(), result.transitions)
    write_output(_scan_text(result, args.format), args.output, out)
    if args.figure:
        write_output(dumps_json(figure), args.figure)
    return EXIT_OK if result.points else EXIT_EMPTY


def cmd_ggm(args, out):
    solutions = _solutions(args)
    if not 0 <= args.index < len(solutions):
        raise UsageError(f"--index must lie in [0, {len(solutions) - 1}], got {args.index}")
    if args.radius < 1 or args.window < 1:
        raise UsageError("--radius and --window must be at least 1")
    budget = args.budget or config.budget
    law = boundary_law_from_pair(solutions[args.index])
    pin = "mixed" if args.mixed else args.pin
    window = build_window(law.k, args.radius)
    report = {
        "solution": _solution_record(solutions[args.index]),
        "law": {"u": list(law.u), "h": list(law.h), "z": list(law.z)},
        "consistency_residual": check_consistency(law),
    }

    status = EXIT_OK
    if args.check_consistency:
        if args.radius < 2:
            raise UsageError("--check-consistency needs --radius of at least 2")
        inner_window = build_window(law.k, args.radius - 1)
        marginal = marginal_table(law, window, pin, args.window, args.radius - 1, budget=budget)
        if args.mixed:
            direct = mixed_measure(law, inner_window, args.window, budget=budget)
        else:
            direct = pinned_measure(law, inner_window, args.pin, args.window, budget=budget)
        residual = compare_tables(marginal, direct)
        report["marginal_residual"] = residual
        report["table"] = marginal.to_json()
        if residual > MARGINAL_TOL:
            logger.error("marginalisation residual %.3e exceeds %.0e", residual, MARGINAL_TOL)
            status = EXIT_INTERNAL
    elif args.mixed:
        report["table"] = mixed_measure(law, window, args.window, budget=budget).to_json()
    else:
        report["table"] = pinned_measure(law, window, args.pin, args.window, budget=budget).to_json()
    write_output(dumps_json(report), args.output, out)
    return status


def cmd_verify(args, out):
    only = [name for chunk in args.only or [] for name in chunk.split(",") if name]
    unknown = [name for name in only if name not in CHECKS]
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    results = run_checks(only=only, seed=args.seed)
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail} ({r.seconds:.2f}s)\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INTERNAL


def _add_model_flags(parser, tau=True):
    parser.add_argument("--k", type=int, required=True, help="branching number")
    if tau:
        parser.add_argument("--tau", type=parse_number, required=True, help="coupling tau > 2")
        parser.add_argument("--h1", type=parse_number, help="field on sites 4m-1")
        parser.add_argument("--h2", type=parse_number, help="field on sites 4m+1")
        parser.add_argument("--seed", type=int, default=0, help="multistart seed for general fields")
        parser.add_argument("--tol", type=float, default=config.tol)
    parser.add_argument("--method", choices=["auto", "generic", "closed"], default="auto")
    parser.add_argument("--output", help="write to this path instead of stdout")


def build_parser():
    parser = CommandParser(prog="sos-ggm", description="Periodic boundary laws and gradient Gibbs measures")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)

    solve = sub.add_parser("solve", help="positive solutions at one parameter point")
    _add_model_flags(solve)
    solve.add_argument("--format", choices=["json"], default="json")
    solve.add_argument("--figure", help="also write a solution scatter figure as JSON")
    solve.set_defaults(handler=cmd_solve)

    scan = sub.add_parser("scan", help="solution counts over a tau (or tau, h) grid")
    _add_model_flags(scan, tau=False)
    scan.add_argument("--tau-min", type=parse_number, required=True)
    scan.add_argument("--tau-max", type=parse_number, required=True)
    scan.add_argument("--steps", type=int, default=200)
    scan.add_argument("--h-min", type=parse_number)
    scan.add_argument("--h-max", type=parse_number)
    scan.add_argument("--h-steps", type=int)
    scan.add_argument("--workers", type=int, default=1)
    scan.add_argument("--cache", action="store_true", help="reuse or store the tau scan under the data directory")
    scan.add_argument("--format", choices=["json", "csv"], default="json")
    scan.add_argument("--figure", help="also write the phase-diagram figure as JSON")
    scan.set_defaults(handler=cmd_scan)

    ggm = sub.add_parser("ggm", help="gradient measure table on a tree window")
    _add_model_flags(ggm)
    ggm.add_argument("--index", type=int, default=0, help="position in the solution list")
    ggm.add_argument("--radius", type=int, default=config.radius)
    ggm.add_argument("--window", type=int, default=config.truncation, help="gradient truncation M")
    ggm.add_argument("--pin", type=int, default=0, help="root height residue")
    ggm.add_argument("--mixed", action="store_true", help="sum over the four pins")
    ggm.add_argument("--check-consistency", action="store_true")
    ggm.add_argument("--budget", type=int, help="enumeration budget, overrides SOS_GGM_BUDGET")
    ggm.set_defaults(handler=cmd_ggm)

    verify = sub.add_parser("verify", help="run the self-check suite")
    verify.add_argument("--only", action="append", help="check names, repeatable or comma separated")
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.handler(args, out)
    except (UsageError, SizeBudgetExceeded) as exc:
        logger.error("%s", exc)
        sys.stderr.write(f"sos-ggm: error: {exc}\n")
        return EXIT_USAGE
    except (ArithmeticError, ValueError) as exc:
        logger.error("internal failure: %s", exc)
        sys.stderr.write(f"sos-ggm: internal error: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
