"""Core litmus-test model: access modes, outcomes, specs, classification.

An *outcome* is the tuple of register values one execution of a litmus test
leaves behind.  An *outcome spec* partitions the outcome space into
acceptable / interesting / forbidden, with a default category applied to
anything the test author did not list.  Unlisted outcomes default to
FORBIDDEN so that surprising results fail loudly; every rendered report
carries a footer reminding the reader of that rule.
"""

from __future__ import annotations

import enum
import fnmatch
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping

import numpy as np

Outcome = tuple[int, ...]

#: Packed outcome keys budget: 4 elements x 32 signed bits each.
PACKED_ELEMS = 4
PACKED_ELEM_BITS = 32
_ELEM_MIN = -(1 << (PACKED_ELEM_BITS - 1))
_ELEM_MAX = (1 << (PACKED_ELEM_BITS - 1)) - 1
_ELEM_MASK = (1 << PACKED_ELEM_BITS) - 1

_NAME_RE = re.compile(r"^[a-z0-9_]+(\.[a-z0-9_]+)*$")


class LitmusError(Exception):
    """Base class for all errors raised by this package."""


class ArityError(LitmusError):
    """An outcome's tuple length does not match the spec it is checked against."""


class SpecError(LitmusError):
    """An outcome spec or test definition violates a structural invariant."""


class DuplicateTestError(LitmusError):
    """A test name was registered twice in the same registry."""


class AccessMode(enum.IntEnum):
    """Memory ordering carried by a single shared-location access.

    PLAIN is the weakest racy-but-well-defined access the engine offers; it
    is executed as a relaxed atomic machine access, since a plain data race
    would be undefined behavior at the LLVM level.  This mapping can mask
    compiler-level reorderings of truly plain accesses; tests that exist to
    provoke such reorderings document that caveat in their provenance notes.
    """

    PLAIN = 0
    RELAXED = 1
    ACQUIRE = 2
    RELEASE = 3
    SEQ_CST = 4


class OutcomeType(enum.IntEnum):
    """Classification of one outcome; the integer value is its severity."""

    ACCEPTABLE = 0
    INTERESTING = 1
    FORBIDDEN = 2

    def __str__(self) -> str:
        return self.name


def _freeze_outcomes(outcomes: Iterable[Iterable[int]]) -> frozenset[Outcome]:
    return frozenset(tuple(int(v) for v in o) for o in outcomes)


@dataclass(frozen=True)
class OutcomeSpec:
    """Per-test partition of outcomes into the three categories.

    The three sets must be pairwise disjoint and hold same-length tuples.
    ``default`` applies to any outcome not listed in any set.
    """

    accepted: frozenset[Outcome]
    interesting: frozenset[Outcome] = frozenset()
    forbidden: frozenset[Outcome] = frozenset()
    default: OutcomeType = OutcomeType.FORBIDDEN

    def __post_init__(self) -> None:
        object.__setattr__(self, "accepted", _freeze_outcomes(self.accepted))
        object.__setattr__(self, "interesting", _freeze_outcomes(self.interesting))
        object.__setattr__(self, "forbidden", _freeze_outcomes(self.forbidden))
        pairs = [
            ("accepted", "interesting", self.accepted & self.interesting),
            ("accepted", "forbidden", self.accepted & self.forbidden),
            ("interesting", "forbidden", self.interesting & self.forbidden),
        ]
        for a_name, b_name, overlap in pairs:
            if overlap:
                raise SpecError(
                    f"outcome sets {a_name} and {b_name} overlap on "
                    f"{sorted(overlap)}"
                )
        arities = {len(o) for s in (self.accepted, self.interesting, self.forbidden) for o in s}
        if len(arities) > 1:
            raise SpecError(f"outcome tuples have mixed lengths: {sorted(arities)}")
        object.__setattr__(self, "_arity", arities.pop() if arities else None)

    @property
    def arity(self) -> int | None:
        """Tuple length shared by all listed outcomes, or None if none listed."""
        return self._arity  # type: ignore[attr-defined]

    def classify(self, outcome: Outcome) -> OutcomeType:
        return classify(outcome, self)

    def as_dict(self) -> dict:
        """JSON-ready snapshot (embedded in reports for cross-run comparison)."""
        return {
            "accepted": [list(o) for o in sorted(self.accepted)],
            "interesting": [list(o) for o in sorted(self.interesting)],
            "forbidden": [list(o) for o in sorted(self.forbidden)],
            "default": self.default.name,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> OutcomeSpec:
        return cls(
            accepted=_freeze_outcomes(data.get("accepted", ())),
            interesting=_freeze_outcomes(data.get("interesting", ())),
            forbidden=_freeze_outcomes(data.get("forbidden", ())),
            default=OutcomeType[data.get("default", "FORBIDDEN")],
        )


def classify(outcome: Outcome, spec: OutcomeSpec) -> OutcomeType:
    """Return the category of ``outcome`` under ``spec``.

    Listed outcomes get their listed category (construction guarantees the
    sets are disjoint, so the category is unique); everything else gets
    ``spec.default``.
    """
    outcome = tuple(outcome)
    if spec.arity is not None and len(outcome) != spec.arity:
        raise ArityError(
            f"outcome {outcome} has arity {len(outcome)}, spec expects {spec.arity}"
        )
    if outcome in spec.accepted:
        return OutcomeType.ACCEPTABLE
    if outcome in spec.interesting:
        return OutcomeType.INTERESTING
    if outcome in spec.forbidden:
        return OutcomeType.FORBIDDEN
    return spec.default


def overall_status(histogram: Mapping[Outcome, int], spec: OutcomeSpec) -> OutcomeType:
    """Maximum severity over all outcomes observed at least once.

    An empty histogram (or one with only zero counts) is ACCEPTABLE.
    """
    status = OutcomeType.ACCEPTABLE
    for outcome, count in histogram.items():
        if count < 0:
            raise ValueError(f"negative count {count} for outcome {outcome}")
        if count == 0:
            continue
        status = max(status, classify(outcome, spec))
    return status


# ---------------------------------------------------------------------------
# Compact outcome keys
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpilledOutcome:
    """Key for an outcome that does not fit the packed 4x32-bit budget.

    Keeps the exact values instead of truncating them.
    """

    values: Outcome

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))


def encode_outcome(outcome: Outcome) -> int | SpilledOutcome:
    """Pack an outcome into a single integer key (spilling when oversized).

    Each element is stored as a signed 32-bit field, up to four elements.
    Outcomes with out-of-range elements or more than four elements come back
    as a :class:`SpilledOutcome` carrying the exact tuple.
    """
    outcome = tuple(int(v) for v in outcome)
    if len(outcome) > PACKED_ELEMS or any(
        v < _ELEM_MIN or v > _ELEM_MAX for v in outcome
    ):
        return SpilledOutcome(outcome)
    key = 0
    for i, v in enumerate(outcome):
        key |= (v & _ELEM_MASK) << (PACKED_ELEM_BITS * i)
    return key


def decode_outcome(key: int | SpilledOutcome, arity: int) -> Outcome:
    """Inverse of :func:`encode_outcome` for the given tuple length."""
    if isinstance(key, SpilledOutcome):
        if len(key.values) != arity:
            raise ArityError(
                f"spilled outcome has arity {len(key.values)}, requested {arity}"
            )
        return key.values
    values = []
    for i in range(arity):
        v = (key >> (PACKED_ELEM_BITS * i)) & _ELEM_MASK
        if v > _ELEM_MAX:
            v -= 1 << PACKED_ELEM_BITS
        values.append(v)
    return tuple(values)


# ---------------------------------------------------------------------------
# Test state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateLayout:
    """Slot layout of one test state cell.

    Shared locations come first, then thread-local registers, then any
    runner-internal slots (currently just the atomic-block lock).  Every
    slot is one signed machine word, zero-initialized.
    """

    locations: tuple[str, ...]
    registers: tuple[str, ...]
    aux: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = self.locations + self.registers + self.aux
        if len(set(names)) != len(names):
            raise SpecError(f"duplicate slot names in layout: {names}")
        if not self.registers:
            raise SpecError("layout must declare at least one register")

    @cached_property
    def slots(self) -> dict[str, int]:
        names = self.locations + self.registers + self.aux
        return {name: i for i, name in enumerate(names)}

    @property
    def n_slots(self) -> int:
        return len(self.locations) + len(self.registers) + len(self.aux)

    def index(self, name: str) -> int:
        return self.slots[name]


class TestState:
    """One mutable cell of test state: named word-sized slots, all zero.

    Thread bodies race on the location slots; registers are thread-local by
    convention.  Backed by a flat int64 array so the same layout is shared
    with the stress engine's state arrays.
    """

    __slots__ = ("layout", "raw")

    def __init__(self, layout: StateLayout, raw: np.ndarray | None = None):
        self.layout = layout
        if raw is None:
            raw = np.zeros(layout.n_slots, dtype=np.int64)
        self.raw = raw

    def __getitem__(self, name: str) -> int:
        return int(self.raw[self.layout.index(name)])

    def __setitem__(self, name: str, value: int) -> None:
        self.raw[self.layout.index(name)] = value

    def snapshot(self) -> dict[str, int]:
        return {name: int(self.raw[i]) for name, i in self.layout.slots.items()}

    def __repr__(self) -> str:
        return f"TestState({self.snapshot()})"


# ---------------------------------------------------------------------------
# Litmus tests and the registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LitmusTest:
    """A runnable litmus test.

    ``programs`` holds one instruction sequence per thread (the builder's
    ordering-annotated ops); ``thread_bodies`` are equivalent plain-Python
    procedures over a :class:`TestState`, usable anywhere single-threaded
    semantics suffice.  The stress engine executes the instruction form.
    """

    name: str
    layout: StateLayout
    programs: tuple[tuple, ...]
    spec: OutcomeSpec
    outcome_registers: tuple[str, ...]
    description: str = ""

    def __post_init__(self) -> None:
        if not _NAME_RE.match(self.name):
            raise SpecError(
                f"test name {self.name!r} must be a lowercase dotted identifier"
            )
        if len(self.programs) < 2:
            raise SpecError(f"test {self.name!r} needs at least 2 threads")
        if not 1 <= len(self.outcome_registers) <= 4:
            raise SpecError(
                f"test {self.name!r} must extract 1..4 outcome registers"
            )
        for reg in self.outcome_registers:
            if reg not in self.layout.registers:
                raise SpecError(f"outcome register {reg!r} not in layout")
        if self.spec.arity is not None and self.spec.arity != len(self.outcome_registers):
            raise ArityError(
                f"spec arity {self.spec.arity} != outcome tuple length "
                f"{len(self.outcome_registers)}"
            )

    @property
    def arity(self) -> int:
        """Width of the outcome tuple this test produces."""
        return len(self.outcome_registers)

    @property
    def n_threads(self) -> int:
        return len(self.programs)

    def state_factory(self) -> TestState:
        """Fresh zeroed state cell for this test."""
        return TestState(self.layout)

    @cached_property
    def thread_bodies(self) -> tuple[Callable[[TestState], None], ...]:
        from .builder import synthesize_body

        return tuple(synthesize_body(ops) for ops in self.programs)

    @property
    def outcome_extractor(self) -> Callable[[TestState], Outcome]:
        indices = tuple(self.layout.index(r) for r in self.outcome_registers)

        def extract(state: TestState) -> Outcome:
            return tuple(int(state.raw[i]) for i in indices)

        return extract

    @cached_property
    def kernel_tables(self) -> tuple[np.ndarray, ...]:
        from .builder import lower_thread

        return tuple(lower_thread(ops, self.layout) for ops in self.programs)

    def __repr__(self) -> str:
        return f"LitmusTest({self.name!r}, arity={self.arity})"


class TestRegistry:
    """Name-keyed collection of litmus tests with glob lookup."""

    def __init__(self) -> None:
        self._tests: dict[str, LitmusTest] = {}

    def register(self, test: LitmusTest) -> LitmusTest:
        if test.name in self._tests:
            raise DuplicateTestError(f"test {test.name!r} is already registered")
        self._tests[test.name] = test
        return test

    def lookup(self, pattern: str) -> list[LitmusTest]:
        """Tests whose names match the glob ``pattern``, sorted by name."""
        return [
            self._tests[name]
            for name in sorted(self._tests)
            if fnmatch.fnmatchcase(name, pattern)
        ]

    def names(self) -> list[str]:
        return sorted(self._tests)

    def __len__(self) -> int:
        return len(self._tests)

    def __iter__(self):
        return iter(self._tests.values())

    def __contains__(self, name: str) -> bool:
        return name in self._tests
