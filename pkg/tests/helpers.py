"""Test utilities: an independent SC reference oracle, random generators,
and the acceptance-criteria reporting hook.

``brute_force_sc`` deliberately shares no code or representation with
``weakmem.oracle``: it interleaves instructions recursively over plain
dictionaries, with no memoization and no store buffers.  The two
implementations check each other over randomized programs.
"""

from __future__ import annotations

import random
import string

from weakmem.model import (
    AccessMode,
    Outcome,
    OutcomeSpec,
    OutcomeType,
    classify,
    overall_status,
)
from weakmem.oracle import AbstractProgram, AtomicBlock, Read, Write
from weakmem.report import ReportEntry, RunReport

#: One line per acceptance criterion, printed by the conftest summary hook.
CRITERION_LINES: list[str] = []


def record_criterion(number: int, name: str, status: str, detail: str) -> None:
    CRITERION_LINES.append(f"criterion {number} ({name}): {status} — {detail}")


# ---------------------------------------------------------------------------
# Independent SC reference oracle
# ---------------------------------------------------------------------------


def _run_op(op, mem: dict, regs: dict) -> None:
    if isinstance(op, Read):
        regs[op.reg] = mem[op.loc]
    elif isinstance(op.value, str):
        mem[op.loc] = regs[op.value]
    else:
        mem[op.loc] = op.value


def brute_force_sc(program: AbstractProgram) -> frozenset[Outcome]:
    """All final outcomes over every SC interleaving, by plain recursion."""
    results: set[Outcome] = set()
    n_threads = len(program.threads)

    def explore(positions: tuple[int, ...], mem: dict, regs: dict) -> None:
        advanced = False
        for t in range(n_threads):
            thread = program.threads[t]
            if positions[t] >= len(thread):
                continue
            advanced = True
            instr = thread[positions[t]]
            mem2, regs2 = dict(mem), dict(regs)
            if isinstance(instr, AtomicBlock):
                for op in instr.ops:
                    _run_op(op, mem2, regs2)
            else:
                _run_op(instr, mem2, regs2)
            next_positions = positions[:t] + (positions[t] + 1,) + positions[t + 1 :]
            explore(next_positions, mem2, regs2)
        if not advanced:
            results.add(tuple(regs[r] for r in program.outcome_registers))

    mem0 = {loc: 0 for loc in program.locations}
    regs0 = {reg: 0 for reg in program.registers}
    explore((0,) * n_threads, mem0, regs0)
    return frozenset(results)


# ---------------------------------------------------------------------------
# Random program generation (for oracle property tests)
# ---------------------------------------------------------------------------

_LOAD_MODES = (
    AccessMode.PLAIN, AccessMode.RELAXED, AccessMode.ACQUIRE, AccessMode.SEQ_CST,
)
_STORE_MODES = (
    AccessMode.PLAIN, AccessMode.RELAXED, AccessMode.RELEASE, AccessMode.SEQ_CST,
)


def random_program(
    rng: random.Random,
    *,
    max_threads: int = 3,
    max_instructions: int = 3,
    all_seqcst_writes: bool = False,
) -> AbstractProgram:
    """Small well-formed program: ≤3 threads × ≤3 instructions, ≤2 locations.

    Writes store the constants 1/2 or a previously read register; a few
    instructions are atomic blocks.  ``all_seqcst_writes`` forces every
    write's mode to SeqCst (for the TSO-collapse property).
    """
    locations = ("x", "y")[: rng.randint(1, 2)]
    n_threads = rng.randint(2, max_threads)
    reg_counter = 0
    threads = []
    for t in range(n_threads):
        ops: list = []
        readable: list[str] = []

        def one_access():
            nonlocal reg_counter
            loc = rng.choice(locations)
            roll = rng.random()
            if roll < 0.45:
                reg_counter += 1
                reg = f"r{reg_counter}"
                readable.append(reg)
                return Read(loc, reg, rng.choice(_LOAD_MODES))
            mode = AccessMode.SEQ_CST if all_seqcst_writes else rng.choice(_STORE_MODES)
            if readable and roll < 0.60:
                return Write(loc, rng.choice(readable), mode)
            return Write(loc, rng.choice((1, 2)), mode)

        for _ in range(rng.randint(1 if t > 0 else 2, max_instructions)):
            if rng.random() < 0.15:
                ops.append(AtomicBlock([one_access() for _ in range(rng.randint(1, 2))]))
            else:
                ops.append(one_access())
        threads.append(tuple(ops))

    program = AbstractProgram(
        locations=locations,
        threads=tuple(threads),
        outcome_registers=(),
    )
    outcome = program.registers[:4]
    if not outcome:  # ensure the outcome is non-trivial
        threads[0] = (Read(locations[0], "r0", AccessMode.RELAXED),) + threads[0]
        program = AbstractProgram(
            locations=locations, threads=tuple(threads), outcome_registers=()
        )
        outcome = ("r0",)
    return AbstractProgram(
        locations=locations,
        threads=program.threads,
        outcome_registers=outcome,
    )


# ---------------------------------------------------------------------------
# Random report generation (for persistence round-trip tests)
# ---------------------------------------------------------------------------


def random_report(rng: random.Random) -> RunReport:
    """Structured-random report with a consistent embedded spec."""
    arity = rng.randint(1, 4)
    outcomes = set()
    while len(outcomes) < rng.randint(1, 6):
        outcomes.add(
            tuple(rng.choice((-1, 0, 1, 2, 42, 2**31, -(2**40))) for _ in range(arity))
        )
    outcomes = sorted(outcomes)
    buckets: dict[str, set] = {"accepted": set(), "interesting": set(), "forbidden": set()}
    for outcome in outcomes:
        if rng.random() < 0.8:
            buckets[rng.choice(("accepted", "interesting", "forbidden"))].add(outcome)
    spec = OutcomeSpec(
        accepted=frozenset(buckets["accepted"]),
        interesting=frozenset(buckets["interesting"]),
        forbidden=frozenset(buckets["forbidden"]),
        default=rng.choice(tuple(OutcomeType)),
    )
    histogram = {outcome: rng.randint(1, 10**9) for outcome in outcomes}
    entries = tuple(
        ReportEntry(outcome, classify(outcome, spec), count)
        for outcome, count in histogram.items()
    )
    name = "rand." + "".join(rng.choice(string.ascii_lowercase) for _ in range(6))
    return RunReport(
        test_name=name,
        entries=entries,
        total_count=sum(histogram.values()),
        overall=overall_status(histogram, spec),
        spec=spec,
        params={
            "batch_size": rng.randint(1, 10**7),
            "rounds": rng.randint(1, 20),
            "affinity": rng.choice(("none", "seq", "spread", "0,3")),
            "time_budget": rng.choice((None, 1.5, 60.0)),
        },
        environment={
            "cpu_model": "Test CPU",
            "cpu_count": rng.randint(1, 128),
            "os": "Linux test",
            "python": "3.10.12",
            "timestamp": "2026-08-14T00:00:00+00:00",
            "tool_version": "0.1.0",
        },
        warnings=tuple(
            f"warning {i}" for i in range(rng.randint(0, 3))
        ),
    )
