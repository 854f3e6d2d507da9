"""Command-line entry point: run, list, oracle, and compare subcommands.

Exit codes are severity-graded so CI pipelines can distinguish outcomes:

* ``run``: 0 when every selected test's overall status is ACCEPTABLE, 2 when
  any is INTERESTING (and none FORBIDDEN), 3 when any is FORBIDDEN, 1 on
  operational errors (unknown selector, bad flags, runner failure).
* ``compare``: 0 with no discrepancies, 4 with any gating discrepancy
  (informational frequency differences never gate), 1 on operational errors.
* ``list`` and ``oracle``: 0 on success, 1 on operational errors.

When the ``LITMUS_AFFINITY`` environment variable is set it overrides the
``--affinity`` flag, so a CI environment can force or forbid pinning without
editing every invocation.
"""

from __future__ import annotations

import argparse
import difflib
import fnmatch
import os
import sys
from typing import Sequence

from .model import LitmusError, OutcomeType
from .oracle import MemoryModel, enumerate_outcomes
from .report import (
    FREQ_STYLES,
    FREQ_UNIFORM,
    compare,
    format_table,
    from_json,
    to_json,
)
from .runner import AffinityScheme, RunParams, run_test
from .suite import builtin_registry, builtin_suite

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INTERESTING = 2
EXIT_FORBIDDEN = 3
EXIT_DISCREPANCIES = 4

_STATUS_EXIT = {
    OutcomeType.ACCEPTABLE: EXIT_OK,
    OutcomeType.INTERESTING: EXIT_INTERESTING,
    OutcomeType.FORBIDDEN: EXIT_FORBIDDEN,
}

AFFINITY_ENV = "LITMUS_AFFINITY"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakmem",
        description="Stress-test weak-memory litmus programs and check their "
        "outcome specs against an exhaustive SC/TSO oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="stress-run the tests matching a selector")
    run_p.add_argument("selector", help='test name or glob, e.g. "sb.*"')
    run_p.add_argument("--batch-size", type=int, default=1_000_000,
                       help="states per batch (default 1,000,000)")
    run_p.add_argument("--rounds", type=int, default=10,
                       help="batches per test (default 10)")
    run_p.add_argument("--sync-every", type=int, default=100,
                       help="cells between barrier waits (default 100)")
    run_p.add_argument("--affinity", default="none",
                       help="none | seq | spread | comma-separated CPU ids "
                            f"(overridden by ${AFFINITY_ENV} when set)")
    run_p.add_argument("--padding", type=int, default=0,
                       help="inert bytes per state cell: 0, 64, 128, or any "
                            "multiple of 8 (default 0)")
    run_p.add_argument("--parallel", type=int, default=1,
                       help="independent merged runner instances (default 1)")
    run_p.add_argument("--duration", type=float, default=None, metavar="SECONDS",
                       help="wall-clock cap per test; truncates remaining "
                            "rounds, never a running batch")
    run_p.add_argument("--format", choices=("text", "json"), default="text",
                       help="stdout format (default text)")
    run_p.add_argument("--output", default=None, metavar="PATH",
                       help="also write the JSON report to PATH "
                            "(single selected test only)")
    run_p.add_argument("--freq-style", choices=FREQ_STYLES, default=FREQ_UNIFORM,
                       help="frequency rendering: uniform rounds to 4 "
                            "significant digits, paper truncates to 5")

    list_p = sub.add_parser("list", help="list available tests")
    list_p.add_argument("selector", nargs="?", default="*",
                        help="optional glob filter")

    oracle_p = sub.add_parser(
        "oracle", help="print a test's exhaustively enumerated outcome set"
    )
    oracle_p.add_argument("selector", help='test name or glob, e.g. "sb.*"')
    oracle_p.add_argument("--model", choices=("sc", "tso"), default="sc",
                          help="memory model to enumerate under (default sc)")

    compare_p = sub.add_parser(
        "compare", help="diff two JSON reports of the same test"
    )
    compare_p.add_argument("report_a")
    compare_p.add_argument("report_b")
    compare_p.add_argument("--freq-ratio", type=float, default=100.0,
                           help="informational threshold for frequency "
                                "differences (default 100x)")
    return parser


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _select_tests(selector: str):
    registry = builtin_registry()
    matches = registry.lookup(selector)
    if matches:
        return matches, None
    names = registry.names()
    suggestions = difflib.get_close_matches(selector, names, n=3, cutoff=0.4)
    hint = f"; did you mean: {', '.join(suggestions)}?" if suggestions else ""
    return [], (
        f"no test matches selector {selector!r}{hint} "
        f"(run `weakmem list` to see all {len(names)} tests)"
    )


def cmd_run(args: argparse.Namespace) -> int:
    tests, problem = _select_tests(args.selector)
    if problem:
        return _fail(problem)
    affinity_text = os.environ.get(AFFINITY_ENV, args.affinity)
    try:
        params = RunParams(
            batch_size=args.batch_size,
            rounds=args.rounds,
            sync_every=args.sync_every,
            affinity=AffinityScheme.parse(affinity_text),
            padding_bytes=args.padding,
            parallel_instances=args.parallel,
            time_budget=args.duration,
        )
    except ValueError as exc:
        return _fail(str(exc))
    if (args.output or args.format == "json") and len(tests) != 1:
        return _fail(
            f"JSON output needs exactly one selected test, "
            f"selector {args.selector!r} matched {len(tests)}"
        )
    worst = OutcomeType.ACCEPTABLE
    for test in tests:
        try:
            report = run_test(test, params)
        except (LitmusError, OSError, MemoryError) as exc:
            return _fail(f"running {test.name}: {exc}")
        if args.format == "json":
            sys.stdout.write(to_json(report).decode("utf-8"))
        else:
            print(format_table(report, args.freq_style), end="")
            if len(tests) > 1:
                print()
        if args.output:
            try:
                with open(args.output, "wb") as f:
                    f.write(to_json(report))
            except OSError as exc:
                return _fail(f"writing {args.output}: {exc}")
        worst = max(worst, report.overall)
    return _STATUS_EXIT[worst]


def cmd_list(args: argparse.Namespace) -> int:
    tests, problem = _select_tests(args.selector)
    if problem:
        return _fail(problem)
    width = max(len(t.name) for t in tests)
    for test in tests:
        print(f"{test.name:<{width}}  {test.n_threads} threads  {test.description}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    model = MemoryModel.SC if args.model == "sc" else MemoryModel.TSO
    selected = [
        entry for entry in builtin_suite()
        if fnmatch.fnmatchcase(entry.test.name, args.selector)
    ]
    if not selected:
        _, problem = _select_tests(args.selector)
        return _fail(problem or f"no test matches selector {args.selector!r}")
    printed = 0
    for entry in selected:
        if entry.twin is None:
            print(
                f"note: {entry.test.name} has no abstract twin; skipping",
                file=sys.stderr,
            )
            continue
        if printed:
            print()
        print(f"{entry.test.name} [{model}]")
        for outcome in sorted(enumerate_outcomes(entry.twin, model)):
            print("(" + ", ".join(str(v) for v in outcome) + ")")
        printed += 1
    if not printed:
        return _fail(f"selector {args.selector!r} matched no test with a twin")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    reports = []
    for path in (args.report_a, args.report_b):
        try:
            with open(path, "rb") as f:
                reports.append(from_json(f.read()))
        except OSError as exc:
            return _fail(f"reading {path}: {exc}")
        except LitmusError as exc:
            return _fail(f"parsing {path}: {exc}")
    try:
        found = compare(reports[0], reports[1], freq_ratio=args.freq_ratio)
    except LitmusError as exc:
        return _fail(str(exc))
    if not found:
        print("no discrepancies")
        return EXIT_OK
    for d in found:
        print(d)
    if any(not d.informational for d in found):
        return EXIT_DISCREPANCIES
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would collide with the
        # "interesting outcome observed" code; usage problems are operational
        # errors here (--help keeps exiting 0).
        if isinstance(exc.code, int) and exc.code == 0:
            return EXIT_OK
        return EXIT_ERROR
    handler = {
        "run": cmd_run,
        "list": cmd_list,
        "oracle": cmd_oracle,
        "compare": cmd_compare,
    }[args.command]
    return handler(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
