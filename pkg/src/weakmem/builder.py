"""Authoring API for litmus tests, and lowering to executable forms.

Tests are written against :class:`LitmusTestBuilder` using the instruction
vocabulary shared with the oracle — :class:`Write`, :class:`Read`,
:class:`AtomicBlock` — plus :class:`GuardedRead`, which only the runnable
side supports (it models reading through a maybe-published handle).

Each thread's instruction list is lowered twice:

* ``lower_thread`` produces a flat ``(n, 6)`` int64 opcode table consumed by
  the JIT-compiled stress worker (one generic interpreter kernel serves all
  tests, so adding a test never recompiles anything);
* ``synthesize_body`` produces an ordinary Python procedure over a
  :class:`~weakmem.model.TestState`, used wherever single-threaded semantics
  suffice (doc examples, sanity tests).

``build_twin`` re-expresses the same instructions as an
:class:`~weakmem.oracle.AbstractProgram` so the spec can be checked against
exhaustive enumeration; it returns None for tests the oracle's instruction
set cannot express.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from .model import (
    AccessMode,
    LitmusTest,
    OutcomeSpec,
    OutcomeType,
    SpecError,
    StateLayout,
    TestState,
)
from .oracle import AbstractProgram, AtomicBlock, Read, Write

__all__ = [
    "Write",
    "Read",
    "AtomicBlock",
    "GuardedRead",
    "LitmusTestBuilder",
    "lower_thread",
    "synthesize_body",
]

#: Interpreter opcodes (column 0 of a lowered instruction row).
OP_STORE_CONST = 0
OP_STORE_REG = 1
OP_LOAD = 2
OP_CLOAD = 3
OP_LOCK = 4
OP_UNLOCK = 5

#: Columns per lowered instruction: opcode + up to five operands.
N_COLS = 6

#: Name of the hidden slot backing AtomicBlock mutual exclusion.
LOCK_SLOT = "_lock"

_LOAD_MODES = frozenset(
    {AccessMode.PLAIN, AccessMode.RELAXED, AccessMode.ACQUIRE, AccessMode.SEQ_CST}
)
_STORE_MODES = frozenset(
    {AccessMode.PLAIN, AccessMode.RELAXED, AccessMode.RELEASE, AccessMode.SEQ_CST}
)

_WORD_MIN = -(1 << 63)
_WORD_MAX = (1 << 63) - 1


@dataclass(frozen=True)
class GuardedRead:
    """Read ``loc`` into ``reg`` only if register ``guard`` is non-zero.

    When the guard is zero, ``reg`` receives ``fallback`` instead.  This is
    the shape of reading fields through a maybe-null published handle; the
    oracle's instruction set has no conditionals, so tests using it carry no
    abstract twin.
    """

    loc: str
    reg: str
    guard: str
    fallback: int = -1
    mode: AccessMode = AccessMode.PLAIN


ThreadOp = Union[Write, Read, AtomicBlock, GuardedRead]


def _check_load_mode(op: Union[Read, GuardedRead]) -> None:
    if op.mode not in _LOAD_MODES:
        raise SpecError(f"load of {op.loc!r} cannot use mode {op.mode.name}")


def _check_store_mode(op: Write) -> None:
    if op.mode not in _STORE_MODES:
        raise SpecError(f"store to {op.loc!r} cannot use mode {op.mode.name}")


def _check_const(value: int) -> int:
    value = int(value)
    if not _WORD_MIN <= value <= _WORD_MAX:
        raise SpecError(f"constant {value} does not fit a signed machine word")
    return value


def lower_thread(ops: Iterable[ThreadOp], layout: StateLayout) -> np.ndarray:
    """Lower one thread's instructions to an ``(n, 6)`` int64 opcode table.

    Row layout by opcode::

        OP_STORE_CONST  loc-slot  constant   mode  -     -
        OP_STORE_REG    loc-slot  reg-slot   mode  -     -
        OP_LOAD         loc-slot  reg-slot   mode  -     -
        OP_CLOAD        loc-slot  reg-slot   mode  guard fallback
        OP_LOCK/UNLOCK  lock-slot -          -     -     -
    """
    rows: list[list[int]] = []

    def emit(op: Union[Write, Read, GuardedRead]) -> None:
        if isinstance(op, Write):
            _check_store_mode(op)
            if isinstance(op.value, str):
                rows.append(
                    [OP_STORE_REG, layout.index(op.loc), layout.index(op.value),
                     int(op.mode), 0, 0]
                )
            else:
                rows.append(
                    [OP_STORE_CONST, layout.index(op.loc), _check_const(op.value),
                     int(op.mode), 0, 0]
                )
        elif isinstance(op, Read):
            _check_load_mode(op)
            rows.append(
                [OP_LOAD, layout.index(op.loc), layout.index(op.reg),
                 int(op.mode), 0, 0]
            )
        elif isinstance(op, GuardedRead):
            _check_load_mode(op)
            rows.append(
                [OP_CLOAD, layout.index(op.loc), layout.index(op.reg),
                 int(op.mode), layout.index(op.guard), _check_const(op.fallback)]
            )
        else:
            raise SpecError(f"cannot lower instruction {op!r}")

    for op in ops:
        if isinstance(op, AtomicBlock):
            lock = layout.index(LOCK_SLOT)
            rows.append([OP_LOCK, lock, 0, 0, 0, 0])
            for inner in op.ops:
                emit(inner)
            rows.append([OP_UNLOCK, lock, 0, 0, 0, 0])
        else:
            emit(op)

    table = np.asarray(rows, dtype=np.int64)
    return table.reshape(len(rows), N_COLS)


def synthesize_body(ops: Iterable[ThreadOp]) -> Callable[[TestState], None]:
    """Single-threaded executable form of one thread's instructions.

    Under one thread there is no concurrency, so atomic blocks run inline
    and every access mode behaves identically.
    """
    ops = tuple(ops)

    def run_one(op: Union[Write, Read, GuardedRead], state: TestState) -> None:
        if isinstance(op, Write):
            state[op.loc] = state[op.value] if isinstance(op.value, str) else op.value
        elif isinstance(op, Read):
            state[op.reg] = state[op.loc]
        else:
            state[op.reg] = state[op.loc] if state[op.guard] != 0 else op.fallback

    def body(state: TestState) -> None:
        for op in ops:
            if isinstance(op, AtomicBlock):
                for inner in op.ops:
                    run_one(inner, state)
            else:
                run_one(op, state)

    return body


class LitmusTestBuilder:
    """Fluent builder for a litmus test and (when expressible) its twin.

    >>> b = LitmusTestBuilder("sb.demo", locations=("x", "y"),
    ...                       registers=("r1", "r2"))
    >>> _ = b.thread(Write("x", 1), Read("y", "r1"))
    >>> _ = b.thread(Write("y", 1), Read("x", "r2"))
    >>> _ = b.accept((0, 1), (1, 0), (1, 1)).interesting((0, 0))
    >>> test = b.build()
    >>> test.arity
    2

    Registers live in the state cell next to the locations, so each register
    may be assigned by only one thread; the builder enforces single
    assignment across the whole test.
    """

    def __init__(
        self,
        name: str,
        *,
        locations: Iterable[str],
        registers: Iterable[str],
        description: str = "",
    ):
        self._name = name
        self._locations = tuple(locations)
        self._registers = tuple(registers)
        self._description = description
        self._threads: list[tuple[ThreadOp, ...]] = []
        self._outcome: tuple[str, ...] | None = None
        self._accepted: set[tuple[int, ...]] = set()
        self._interesting: set[tuple[int, ...]] = set()
        self._forbidden: set[tuple[int, ...]] = set()
        self._default = OutcomeType.FORBIDDEN

    def thread(self, *ops: ThreadOp) -> "LitmusTestBuilder":
        """Append one thread running ``ops`` in order."""
        self._threads.append(tuple(ops))
        return self

    def outcome(self, *registers: str) -> "LitmusTestBuilder":
        """Fix the outcome tuple's registers (default: all, in order)."""
        self._outcome = tuple(registers)
        return self

    def accept(self, *outcomes: tuple[int, ...]) -> "LitmusTestBuilder":
        self._accepted.update(tuple(o) for o in outcomes)
        return self

    def interesting(self, *outcomes: tuple[int, ...]) -> "LitmusTestBuilder":
        self._interesting.update(tuple(o) for o in outcomes)
        return self

    def forbid(self, *outcomes: tuple[int, ...]) -> "LitmusTestBuilder":
        self._forbidden.update(tuple(o) for o in outcomes)
        return self

    def default(self, outcome_type: OutcomeType) -> "LitmusTestBuilder":
        self._default = outcome_type
        return self

    # -- assembly -----------------------------------------------------------

    def _each_access(self):
        for t, thread in enumerate(self._threads):
            for op in thread:
                if isinstance(op, AtomicBlock):
                    for inner in op.ops:
                        yield t, inner
                else:
                    yield t, op

    def _validate(self) -> None:
        locs = set(self._locations)
        regs = set(self._registers)
        if LOCK_SLOT in locs | regs:
            raise SpecError(f"{LOCK_SLOT!r} is reserved for the runner")
        writers: dict[str, int] = {}
        assigned_before: dict[int, set[str]] = {t: set() for t in range(len(self._threads))}
        for t, op in self._each_access():
            if op.loc not in locs:
                raise SpecError(f"thread {t} accesses undeclared location {op.loc!r}")
            if isinstance(op, Write):
                _check_store_mode(op)
                if isinstance(op.value, str):
                    if op.value not in regs:
                        raise SpecError(
                            f"thread {t} stores undeclared register {op.value!r}"
                        )
                    if op.value not in assigned_before[t]:
                        raise SpecError(
                            f"thread {t} stores register {op.value!r} before "
                            f"assigning it"
                        )
                continue
            _check_load_mode(op)
            if op.reg not in regs:
                raise SpecError(f"thread {t} assigns undeclared register {op.reg!r}")
            if op.reg in writers:
                raise SpecError(
                    f"register {op.reg!r} is assigned by thread {writers[op.reg]} "
                    f"and thread {t}; registers are single-assignment"
                )
            writers[op.reg] = t
            if isinstance(op, GuardedRead):
                if op.guard not in regs:
                    raise SpecError(
                        f"thread {t} guards on undeclared register {op.guard!r}"
                    )
                if op.guard not in assigned_before[t]:
                    raise SpecError(
                        f"thread {t} guards on register {op.guard!r} before "
                        f"assigning it"
                    )
            assigned_before[t].add(op.reg)
        self._writers = writers

    def _layout(self) -> StateLayout:
        has_block = any(
            isinstance(op, AtomicBlock) for thread in self._threads for op in thread
        )
        aux = (LOCK_SLOT,) if has_block else ()
        return StateLayout(self._locations, self._registers, aux)

    def _outcome_registers(self) -> tuple[str, ...]:
        return self._outcome if self._outcome is not None else self._registers

    def build(self) -> LitmusTest:
        self._validate()
        return LitmusTest(
            name=self._name,
            layout=self._layout(),
            programs=tuple(self._threads),
            spec=OutcomeSpec(
                accepted=frozenset(self._accepted),
                interesting=frozenset(self._interesting),
                forbidden=frozenset(self._forbidden),
                default=self._default,
            ),
            outcome_registers=self._outcome_registers(),
            description=self._description,
        )

    def build_twin(self) -> AbstractProgram | None:
        """The same program in the oracle's instruction set, or None.

        A twin exists only when every instruction is a plain read, write, or
        atomic block, and every outcome register is assigned somewhere.
        """
        self._validate()
        for _, op in self._each_access():
            if isinstance(op, GuardedRead):
                return None
        if any(reg not in self._writers for reg in self._outcome_registers()):
            return None
        return AbstractProgram(
            locations=self._locations,
            threads=tuple(self._threads),
            outcome_registers=self._outcome_registers(),
        )
