#!/usr/bin/env python3
"""
daelim - index reduction and differential-algebraic elimination for polynomial DAEs

Commands:
- reduce:         differentiate equations until the system can be eliminated
- eliminate:      differential-algebraic resultant for one kept variable
- eliminate-all:  resultants for every dependent variable
- verify:         evaluate a resultant along a numeric trajectory

Configuration comes from flags, then from the environment (a .env file in
the working directory is loaded first): DAELIM_MAX_DIFF, DAELIM_LOG_LEVEL,
DAELIM_WORKERS, DAELIM_TOLERANCE.
"""

import argparse
import json
import logging
import sys
import traceback
from typing import List, Optional

from dotenv import load_dotenv

from .dsl import DAESystem, load_system, render_polynomial, render_system
from .elim import EliminationResult, differential_algebraic_resultant, eliminate_each
from .errors import DaelimError, NotReducible, ToleranceExceeded, UndeclaredSymbol
from .reduction import ReductionResult, reduce_index
from .symcore import Symbol
from .trajectory import evaluate_residual, load_trajectory
from .utils import Settings, load_settings, setup_logging

log = logging.getLogger(__name__)

BANNER = "=" * 80


def _banner(title: str) -> None:
    print(f"\n{BANNER}")
    print(title)
    print(BANNER)


def _tuple(values) -> str:
    return f"({', '.join(str(v) for v in values)})"


def _dump(document: dict) -> None:
    print(json.dumps(document, indent=2, ensure_ascii=False))


def _dependent(system: DAESystem, name: Optional[str]) -> Optional[Symbol]:
    if name is None:
        return None
    sym = system.symbol(name)
    if sym not in system.dependents:
        raise UndeclaredSymbol(f"{name} is not a declared dependent variable of {system.name}")
    return sym


def _print_reduction(result: ReductionResult) -> None:
    print("Initial variable pencil:")
    print(result.initial_pencil.render())
    print("\nEnlarged variable pencil:")
    print(result.pencil.render())
    print(f"\n✅ upsilon = {_tuple(result.upsilon)}, weak index d_w = {result.weak_index}")
    print(f"   Elimination symbols: {', '.join(s.name for s in result.elimination_symbols) or '-'}")
    if result.kept_family:
        print(f"   Kept family: {', '.join(s.name for s in result.kept_family)}")
    if result.pinned:
        print(f"   Pinned: {', '.join(s.name for s in result.pinned)}")


def _print_elimination(result: EliminationResult, show_matrix: bool) -> None:
    kept = result.kept.name if result.kept is not None else "nothing"
    print(f"   Reduction: upsilon = {_tuple(result.reduction.upsilon)}, d_w = {result.reduction.weak_index}")
    print(f"   Elimination matrix: {result.matrix_rows} x {result.matrix_cols}")
    if show_matrix:
        print(result.matrix.render())
    for factor in result.extraneous_factors:
        print(f"   Removed factor: {render_polynomial(factor)}")
    for warning in result.warnings:
        print(f"⚠️  {warning}")
    print(f"\n✅ Resultant keeping {kept}:")
    print(f"   {render_polynomial(result.resultant)}")


def run_reduce(args: argparse.Namespace, settings: Settings) -> int:
    system = load_system(args.file)
    target = _dependent(system, args.target)
    try:
        result = reduce_index(system, target, args.max_diff)
    except NotReducible as e:
        if e.partial is not None and not args.json:
            print("Variable pencil when reduction stopped:", file=sys.stderr)
            print(e.partial.pencil.render(), file=sys.stderr)
        raise
    if args.json:
        _dump(result.to_dict())
        return 0
    _banner(f"🔍 Index reduction: {system.name} ({'target ' + target.name if target else 'no target'})")
    _print_reduction(result)
    print("\nEnlarged system:")
    print(render_system(result.enlarged), end="")
    return 0


def run_eliminate(args: argparse.Namespace, settings: Settings) -> int:
    system = load_system(args.file)
    keep = _dependent(system, args.keep)
    result = differential_algebraic_resultant(system, keep, args.max_diff)
    if args.json:
        document = result.to_dict()
        if args.show_matrix:
            document["matrix"] = result.matrix.to_dict()
        _dump(document)
        return 0
    _banner(f"🎯 Differential-algebraic elimination: {system.name} (keep {keep.name})")
    _print_elimination(result, args.show_matrix)
    return 0


def run_eliminate_all(args: argparse.Namespace, settings: Settings) -> int:
    system = load_system(args.file)
    workers = args.workers or settings.workers
    outcomes = eliminate_each(system, list(system.dependents), workers, args.max_diff)

    exit_code = 0
    documents = []
    for target, outcome in outcomes.items():
        if isinstance(outcome, EliminationResult):
            documents.append(outcome.to_dict())
            continue
        code = outcome.exit_code if isinstance(outcome, DaelimError) else 3
        exit_code = exit_code or code
        documents.append({"kept": target.name, "error": str(outcome), "exit_code": code})

    if args.json:
        _dump({"system": system.name, "results": documents})
        return exit_code
    _banner(f"🎯 Eliminating every dependent variable of {system.name} ({len(outcomes)} targets)")
    for target, outcome in outcomes.items():
        print(f"\n--- keep {target.name} ---")
        if isinstance(outcome, EliminationResult):
            _print_elimination(outcome, False)
        else:
            print(f"❌ {outcome}")
    return exit_code


def run_verify(args: argparse.Namespace, settings: Settings) -> int:
    system = load_system(args.file)
    keep = _dependent(system, args.keep)
    spec = load_trajectory(args.trajectory).with_samples(args.samples)
    tolerance = args.tol if args.tol is not None else settings.tolerance

    result = differential_algebraic_resultant(system, keep, args.max_diff)
    residual = evaluate_residual(result.resultant, spec)
    if residual.max_residual > tolerance:
        raise ToleranceExceeded(residual.max_residual, tolerance)

    if args.json:
        _dump({
            "system": system.name,
            "kept": keep.name,
            "resultant": render_polynomial(result.resultant),
            "samples": spec.count,
            "max_residual": residual.max_residual,
            "tolerance": tolerance,
        })
        return 0
    _banner(f"📏 Verifying the resultant of {system.name} (keep {keep.name})")
    print(f"   Resultant: {render_polynomial(result.resultant)}")
    print(f"   Samples: {spec.count} on [{spec.start}, {spec.end}]")
    print(f"\n✅ Max relative residual {residual.max_residual:.3e} <= {tolerance:.1e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daelim",
        description="Index reduction and differential-algebraic elimination for polynomial DAEs",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Differentiation times and weak index
  %(prog)s reduce systems/gear.dae --target y1

  # Resultant keeping y2, with the elimination matrix
  %(prog)s eliminate systems/pendulum.dae --keep y2 --show-matrix

  # Every dependent variable, 4 threads, JSON
  %(prog)s eliminate-all systems/pendulum.dae --workers 4 --json

  # Check the resultant along an RK4 trajectory
  %(prog)s verify systems/pendulum.dae --keep y2 --trajectory systems/pendulum_theta.traj
        """
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging on stderr')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument('file', help='System file (.dae)')
        p.add_argument('--json', action='store_true', help='Print a JSON document instead of a report')
        p.add_argument('--max-diff', type=int, help='Differentiation budget (overrides DAELIM_MAX_DIFF)')

    reduce = sub.add_parser('reduce', help='Index reduction by the variable pencil')
    common(reduce)
    reduce.add_argument('--target', help='Dependent variable to keep (default: eliminate all)')
    reduce.set_defaults(handler=run_reduce)

    eliminate = sub.add_parser('eliminate', help='Differential-algebraic resultant for one variable')
    common(eliminate)
    eliminate.add_argument('--keep', required=True, help='Dependent variable to keep')
    eliminate.add_argument('--show-matrix', action='store_true', help='Dump the elimination matrix')
    eliminate.set_defaults(handler=run_eliminate)

    eliminate_all = sub.add_parser('eliminate-all', help='Resultants for every dependent variable')
    common(eliminate_all)
    eliminate_all.add_argument('--workers', type=int, help='Thread count (overrides DAELIM_WORKERS)')
    eliminate_all.set_defaults(handler=run_eliminate_all)

    verify = sub.add_parser('verify', help='Evaluate a resultant along a trajectory')
    common(verify)
    verify.add_argument('--keep', required=True, help='Dependent variable to keep')
    verify.add_argument('--trajectory', required=True, help='Trajectory file (.traj)')
    verify.add_argument('--tol', type=float, help='Relative residual tolerance (overrides DAELIM_TOLERANCE)')
    verify.add_argument('--samples', type=int, help='Number of samples (overrides the range line)')
    verify.set_defaults(handler=run_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    load_dotenv()
    try:
        settings = load_settings()
        setup_logging("DEBUG" if args.verbose else settings.log_level)
        log.debug("running %s on %s", args.command, args.file)
        return args.handler(args, settings)
    except DaelimError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        traceback.print_exc()
        return 3


if __name__ == '__main__':
    sys.exit(main())
