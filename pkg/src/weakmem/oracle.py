"""Exhaustive outcome enumeration under SC and TSO operational semantics.

The oracle grounds the "acceptable" category of a hand-written outcome
spec: acceptable outcomes are exactly those reproducible as an interleaving
of the threads' instructions (sequential consistency).  A TSO mode (SC plus
per-thread FIFO store buffers with store-to-load forwarding) is provided to
mechanically justify weak-but-expected outcomes such as store buffering's
(0, 0); anything weaker than TSO stays hand-curated.

The explorer is a depth-first search over machine states with a visited
memo.  States are plain tuples, so determinism and hashability come for
free.  Orderings weaker than SEQ_CST are all treated as relaxed inside the
TSO exploration: the only mode the buffer machinery distinguishes is a
SEQ_CST write, which drains its own buffer after enqueueing.  Atomic blocks
model lock-guarded bodies: the executing thread drains its buffer, then
runs the whole block against memory in one indivisible transition.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Union

from .model import AccessMode, LitmusError, Outcome, SpecError

MAX_THREAD_INSTRUCTIONS = 8
DEFAULT_STATE_CAP = 10_000_000


class StateSpaceLimitError(LitmusError):
    """Exploration exceeded the visited-state cap; the program is too large."""


class MissingTwinError(LitmusError):
    """A suite entry without an abstract twin was given to the oracle."""


class MemoryModel(enum.Enum):
    SC = "sc"
    TSO = "tso"

    def __str__(self) -> str:
        return self.name


# ---------------------------------------------------------------------------
# Instruction forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Write:
    """Store a constant or a previously-read register value to a location."""

    loc: str
    value: int | str
    mode: AccessMode = AccessMode.RELAXED


@dataclass(frozen=True)
class Read:
    """Load a location into a thread-local register."""

    loc: str
    reg: str
    mode: AccessMode = AccessMode.RELAXED


@dataclass(frozen=True)
class AtomicBlock:
    """A lock-guarded body: its ops execute as one indivisible step."""

    ops: tuple[Union[Write, Read], ...]

    def __init__(self, ops: Iterable[Union[Write, Read]]):
        ops = tuple(ops)
        for op in ops:
            if not isinstance(op, (Write, Read)):
                raise SpecError("atomic blocks may contain only reads and writes")
        object.__setattr__(self, "ops", ops)


Instruction = Union[Write, Read, AtomicBlock]


@dataclass(frozen=True)
class AbstractProgram:
    """Ordering-annotated read/write program for exhaustive exploration.

    Every location starts at zero; registers are written at most once and
    the outcome is the final value of ``outcome_registers`` in order.
    """

    locations: tuple[str, ...]
    threads: tuple[tuple[Instruction, ...], ...]
    outcome_registers: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "threads", tuple(tuple(t) for t in self.threads))
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "outcome_registers", tuple(self.outcome_registers))
        self._validate()

    def _validate(self) -> None:
        if len(self.threads) < 2:
            raise SpecError("a litmus program needs at least two threads")
        locs = set(self.locations)
        if len(locs) != len(self.locations):
            raise SpecError("duplicate location names")
        regs_seen: dict[str, int] = {}
        for t, thread in enumerate(self.threads):
            if len(thread) > MAX_THREAD_INSTRUCTIONS:
                raise SpecError(
                    f"thread {t} has {len(thread)} instructions, "
                    f"max {MAX_THREAD_INSTRUCTIONS}"
                )
            assigned: set[str] = set()
            for instr in thread:
                for op in instr.ops if isinstance(instr, AtomicBlock) else (instr,):
                    if op.loc not in locs:
                        raise SpecError(f"undeclared location {op.loc!r}")
                    if isinstance(op, Read):
                        if op.reg in regs_seen:
                            raise SpecError(
                                f"register {op.reg!r} written more than once"
                            )
                        regs_seen[op.reg] = t
                        assigned.add(op.reg)
                    elif isinstance(op.value, str) and op.value not in assigned:
                        raise SpecError(
                            f"write of register {op.value!r} before it is read "
                            f"in thread {t}"
                        )
        for reg in self.outcome_registers:
            if reg not in regs_seen:
                raise SpecError(f"outcome register {reg!r} is never assigned")

    @property
    def registers(self) -> tuple[str, ...]:
        """All registers, in first-assignment order across threads."""
        seen: list[str] = []
        for thread in self.threads:
            for instr in thread:
                for op in instr.ops if isinstance(instr, AtomicBlock) else (instr,):
                    if isinstance(op, Read) and op.reg not in seen:
                        seen.append(op.reg)
        return tuple(seen)


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------

_READ, _WRITE_CONST, _WRITE_REG, _BLOCK = range(4)


def _compile(program: AbstractProgram):
    loc_index = {name: i for i, name in enumerate(program.locations)}
    reg_index = {name: i for i, name in enumerate(program.registers)}

    def compile_op(op):
        if isinstance(op, Read):
            return (_READ, loc_index[op.loc], reg_index[op.reg])
        if isinstance(op.value, str):
            return (_WRITE_REG, loc_index[op.loc], reg_index[op.value],
                    op.mode == AccessMode.SEQ_CST)
        return (_WRITE_CONST, loc_index[op.loc], int(op.value),
                op.mode == AccessMode.SEQ_CST)

    threads = []
    for thread in program.threads:
        compiled = []
        for instr in thread:
            if isinstance(instr, AtomicBlock):
                compiled.append((_BLOCK, tuple(compile_op(op) for op in instr.ops)))
            else:
                compiled.append(compile_op(instr))
        threads.append(tuple(compiled))
    out_regs = tuple(reg_index[r] for r in program.outcome_registers)
    return threads, len(program.locations), len(reg_index), out_regs


def _apply_direct(op, mem: tuple, regs: tuple):
    """Execute one op straight against memory (SC step / drained block op)."""
    kind = op[0]
    if kind == _READ:
        regs = regs[: op[2]] + (mem[op[1]],) + regs[op[2] + 1 :]
    elif kind == _WRITE_CONST:
        mem = mem[: op[1]] + (op[2],) + mem[op[1] + 1 :]
    else:
        mem = mem[: op[1]] + (regs[op[2]],) + mem[op[1] + 1 :]
    return mem, regs


def _buffered_value(buffer: tuple, loc: int):
    """Newest pending store to ``loc`` in this thread's buffer, if any."""
    for pending_loc, value in reversed(buffer):
        if pending_loc == loc:
            return value
    return None


def _successors(state, threads, model: MemoryModel):
    pcs, mem, regs, buffers = state
    succs = []
    tso = model is MemoryModel.TSO
    for t, pc in enumerate(pcs):
        if pc >= len(threads[t]):
            continue
        instr = threads[t][pc]
        next_pcs = pcs[:t] + (pc + 1,) + pcs[t + 1 :]
        kind = instr[0]
        if not tso:
            new_mem, new_regs = mem, regs
            if kind == _BLOCK:
                for op in instr[1]:
                    new_mem, new_regs = _apply_direct(op, new_mem, new_regs)
            else:
                new_mem, new_regs = _apply_direct(instr, mem, regs)
            succs.append((next_pcs, new_mem, new_regs, buffers))
            continue

        buf = buffers[t]
        if kind == _READ:
            value = _buffered_value(buf, instr[1])
            if value is None:
                value = mem[instr[1]]
            new_regs = regs[: instr[2]] + (value,) + regs[instr[2] + 1 :]
            succs.append((next_pcs, mem, new_regs, buffers))
        elif kind in (_WRITE_CONST, _WRITE_REG):
            value = instr[2] if kind == _WRITE_CONST else regs[instr[2]]
            new_buf = buf + ((instr[1], value),)
            new_mem = mem
            if instr[3]:  # SEQ_CST write: enqueue, then drain own buffer
                mem_list = list(mem)
                for loc, val in new_buf:
                    mem_list[loc] = val
                new_mem = tuple(mem_list)
                new_buf = ()
            new_buffers = buffers[:t] + (new_buf,) + buffers[t + 1 :]
            succs.append((next_pcs, new_mem, regs, new_buffers))
        else:  # atomic block: drain own buffer, run block against memory
            mem_list = list(mem)
            for loc, val in buf:
                mem_list[loc] = val
            new_mem, new_regs = tuple(mem_list), regs
            for op in instr[1]:
                new_mem, new_regs = _apply_direct(op, new_mem, new_regs)
            new_buffers = buffers[:t] + ((),) + buffers[t + 1 :]
            succs.append((next_pcs, new_mem, new_regs, new_buffers))

    if tso:
        # Independently of program steps, any thread's oldest pending store
        # may drain to memory.
        for t, buf in enumerate(buffers):
            if buf:
                loc, value = buf[0]
                new_mem = mem[:loc] + (value,) + mem[loc + 1 :]
                new_buffers = buffers[:t] + (buf[1:],) + buffers[t + 1 :]
                succs.append((pcs, new_mem, regs, new_buffers))
    return succs


def enumerate_outcomes(
    program: AbstractProgram,
    model: MemoryModel = MemoryModel.SC,
    *,
    max_states: int = DEFAULT_STATE_CAP,
) -> frozenset[Outcome]:
    """Exact set of final outcome tuples reachable under ``model``.

    Raises :class:`StateSpaceLimitError` once more than ``max_states``
    distinct states have been visited.
    """
    threads, n_locs, n_regs, out_regs = _compile(program)
    start = (
        (0,) * len(threads),
        (0,) * n_locs,
        (0,) * n_regs,
        ((),) * len(threads),
    )
    seen = {start}
    stack = [start]
    outcomes: set[Outcome] = set()
    while stack:
        state = stack.pop()
        succs = _successors(state, threads, model)
        if not succs:
            # All program counters done and all buffers empty.
            regs = state[2]
            outcomes.add(tuple(regs[i] for i in out_regs))
            continue
        for succ in succs:
            if succ not in seen:
                seen.add(succ)
                if len(seen) > max_states:
                    raise StateSpaceLimitError(
                        f"exceeded {max_states} states; use a smaller program"
                    )
                stack.append(succ)
    return frozenset(outcomes)


def count_sc_interleavings(program: AbstractProgram) -> int:
    """Number of complete SC interleavings, with no visited-state memo.

    Atomic blocks count as single steps.  For block-free programs this is
    the multinomial coefficient of the per-thread instruction counts; it is
    exposed as a sanity check on the explorer's transition relation and is
    only intended for small programs.
    """
    threads, n_locs, n_regs, _ = _compile(program)
    start = (
        (0,) * len(threads),
        (0,) * n_locs,
        (0,) * n_regs,
        ((),) * len(threads),
    )
    count = 0
    stack = [start]
    while stack:
        state = stack.pop()
        succs = _successors(state, threads, MemoryModel.SC)
        if not succs:
            count += 1
        else:
            stack.extend(succs)
    return count


# ---------------------------------------------------------------------------
# Spec validation
# ---------------------------------------------------------------------------

ACCEPTED_NOT_SC = "accepted-but-not-sc"
SC_NOT_ACCEPTED = "sc-but-not-accepted"


@dataclass(frozen=True)
class SpecMismatch:
    """One disagreement between a hand-written spec and the SC oracle."""

    outcome: Outcome
    direction: str

    def __str__(self) -> str:
        outcome = "(" + ", ".join(str(v) for v in self.outcome) + ")"
        return f"{self.direction}: {outcome}"


def validate_spec(entry) -> list[SpecMismatch]:
    """Check a suite entry's accepted set against its twin's SC outcomes.

    Returns an empty list iff ``entry.test.spec.accepted`` equals the SC
    enumeration of ``entry.twin``.  Mismatches name the outcome and the
    direction of the disagreement.
    """
    if entry.twin is None:
        raise MissingTwinError(
            f"suite entry {entry.test.name!r} has no abstract twin"
        )
    sc_set = enumerate_outcomes(entry.twin, MemoryModel.SC)
    accepted = entry.test.spec.accepted
    mismatches = [
        SpecMismatch(outcome, ACCEPTED_NOT_SC) for outcome in sorted(accepted - sc_set)
    ]
    mismatches += [
        SpecMismatch(outcome, SC_NOT_ACCEPTED) for outcome in sorted(sc_set - accepted)
    ]
    return mismatches
