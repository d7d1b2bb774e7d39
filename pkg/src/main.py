#!/usr/bin/env python3
"""
randspec command line

    randspec <command> <scenario.json> [--field NAME] [--function NAME] [--measure NAME]
             [--out PATH] [--tol X] [--seed N] [--cells auto|FILE] [--inverse]
    randspec generate KIND --dim N --atoms M [--seed N] [--disorder W] [--out PATH]
"""
import argparse
import logging
import os
import sys
import time
from typing import List, Optional

# Add the repo root to Python path
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from config import DEFAULT_SEED, LOG_LEVEL
from src.scenario.commands import (
    COMMANDS,
    EXIT_ERROR,
    EXIT_OK,
    CommandOptions,
    emit,
    run_command,
)
from src.scenario.ensembles import KINDS, generate_ensemble
from src.scenario.scenario import load_scenario
from src.utils.errors import RandSpecError

logger = logging.getLogger(__name__)


def configure_logging(level: str = LOG_LEVEL):
    # Artifacts own stdout, so logs go to stderr
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def print_banner(command: str, target: str):
    """Print a banner at startup"""
    print("\n" + "=" * 80, file=sys.stderr)
    print(f"🧮 RANDSPEC :: {command.upper()}", file=sys.stderr)
    print("=" * 80, file=sys.stderr)
    print(f"📄 Input: {target}", file=sys.stderr)
    print("=" * 80 + "\n", file=sys.stderr)


def print_summary(status: int, start_time: float):
    """Print summary after completion"""
    elapsed = time.time() - start_time
    label = {0: "✅ Status: COMPLETED", 2: "⚠️  Status: VALIDATION FAILED"}.get(status, "❌ Status: FAILED")
    print("\n" + "=" * 80, file=sys.stderr)
    print(label, file=sys.stderr)
    print(f"⏱️  Total Time: {elapsed:.3f} s", file=sys.stderr)
    print("=" * 80, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randspec", description="Spectral theory of random operators on finite sample spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--field", action="append", default=[], dest="fields",
                       help="field name; compose takes it twice, outer first")
        p.add_argument("--function", help="function name (integrate)")
        p.add_argument("--measure", help="measure name (integrate, dos)")
        p.add_argument("--out", help="output path; stdout when omitted")
        p.add_argument("--tol", type=float, help="tolerance override")
        p.add_argument("--seed", type=int, help="seed override for sampled checks")
        p.add_argument("--cells", help="'auto' or a JSON file of cells")
        p.add_argument("--inverse", action="store_true", help="transform: apply the inverse map")
        p.add_argument("--quiet", action="store_true", help="skip banner and summary")

    g = sub.add_parser("generate")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--atoms", type=int, required=True)
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--disorder", type=float, default=1.0, help="anderson-tridiagonal: potential on [-w, w]")
    g.add_argument("--out", help="output path; stdout when omitted")
    g.add_argument("--quiet", action="store_true", help="skip banner and summary")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "generate":
        scenario = generate_ensemble(args.kind, args.dim, args.atoms, args.seed, args.disorder)
        emit(scenario.dumps(), args.out)
        return EXIT_OK

    scenario = load_scenario(args.scenario)
    options = CommandOptions(
        fields=args.fields,
        function=args.function,
        measure=args.measure,
        out=args.out,
        tol=args.tol,
        seed=args.seed,
        cells=args.cells,
        inverse=args.inverse,
    )
    return run_command(args.command, scenario, options)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    start_time = time.time()
    target = getattr(args, "scenario", None) or args.kind

    if not args.quiet:
        print_banner(args.command, target)
    try:
        status = dispatch(args)
    except (RandSpecError, OSError) as e:
        logger.error(f"❌ {args.command} failed: {type(e).__name__}: {e}")
        status = EXIT_ERROR
    if not args.quiet:
        print_summary(status, start_time)
    return status


if __name__ == "__main__":
    sys.exit(main())
