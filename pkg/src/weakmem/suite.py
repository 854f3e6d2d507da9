"""The built-in litmus test catalog.

Each entry bundles a runnable test, its abstract twin for the oracle (when
the oracle's instruction set can express it), a provenance note, and the
subset of its "interesting" outcomes that no model in this package derives
(``hand_curated_interesting``): outcomes tolerated because they are known
weak behaviors of real platforms beyond TSO, not because our oracle permits
them.

Every accepted set below is written out by hand and kept honest by
``validate_spec``, which re-derives it from the twin by exhaustive SC
enumeration; none of the literals are generated from the oracle at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .builder import AtomicBlock, GuardedRead, LitmusTestBuilder, Read, Write
from .model import AccessMode, LitmusTest, Outcome, TestRegistry
from .oracle import AbstractProgram

PLAIN = AccessMode.PLAIN
RELAXED = AccessMode.RELAXED
SEQ_CST = AccessMode.SEQ_CST

#: SC outcomes of IRIW: every register assignment except (1, 0, 1, 0), the
#: two readers disagreeing on the order of the two independent stores.
IRIW_SC_SET = frozenset(
    {
        (0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0), (0, 0, 1, 1),
        (0, 1, 0, 0), (0, 1, 0, 1), (0, 1, 1, 0), (0, 1, 1, 1),
        (1, 0, 0, 0), (1, 0, 0, 1),              (1, 0, 1, 1),
        (1, 1, 0, 0), (1, 1, 0, 1), (1, 1, 1, 0), (1, 1, 1, 1),
    }
)

#: The reader outcome of upub.adapted when the handle was never observed.
UNPUBLISHED = (-1, -1)


@dataclass(frozen=True)
class SuiteEntry:
    """One catalog entry: runnable test, optional abstract twin, provenance."""

    test: LitmusTest
    twin: AbstractProgram | None
    provenance_note: str
    hand_curated_interesting: frozenset[Outcome] = frozenset()


def _entry(builder: LitmusTestBuilder, note: str,
           hand_curated: frozenset[Outcome] = frozenset()) -> SuiteEntry:
    return SuiteEntry(
        test=builder.build(),
        twin=builder.build_twin(),
        provenance_note=note,
        hand_curated_interesting=hand_curated,
    )


def _atom_word() -> SuiteEntry:
    b = LitmusTestBuilder(
        "atom.word",
        locations=("x",),
        registers=("r1",),
        description="word tearing: a racing reader sees 0 or -1, never a mix",
    )
    b.thread(Write("x", -1, PLAIN))
    b.thread(Read("x", "r1", PLAIN))
    b.outcome("r1").accept((0,), (-1,))
    return _entry(
        b,
        "Classic word-atomicity check: one thread stores an all-bits-set "
        "word while another reads it. Any result other than 0 or -1 would "
        "be a torn access. Plain accesses here lower to relaxed atomics, "
        "which cannot tear by construction; the test still guards against "
        "regressions in the engine's access lowering.",
    )


def _sb(name: str, mode: AccessMode, description: str) -> LitmusTestBuilder:
    b = LitmusTestBuilder(
        name, locations=("x", "y"), registers=("r1", "r2"),
        description=description,
    )
    b.thread(Write("x", 1, mode), Read("y", "r1", mode))
    b.thread(Write("y", 1, mode), Read("x", "r2", mode))
    return b.outcome("r1", "r2").accept((0, 1), (1, 0), (1, 1))


def _sb_relaxed() -> SuiteEntry:
    b = _sb(
        "sb.relaxed", RELAXED,
        "store buffering: cross stores then loads; (0,0) witnesses buffers",
    ).interesting((0, 0))
    return _entry(
        b,
        "Store buffering, the canonical weak-memory litmus test: each "
        "thread stores its flag and then loads the other thread's. Both loads "
        "returning 0 is impossible under any interleaving but is permitted "
        "by TSO store buffers, so it is classified interesting, not "
        "forbidden; x86 exhibits it readily on multicore hosts.",
    )


def _sb_seqcst() -> SuiteEntry:
    b = _sb(
        "sb.seqcst", SEQ_CST,
        "store buffering with SeqCst accesses: interleavings only",
    )
    return _entry(
        b,
        "Store buffering with sequentially consistent accesses. SeqCst "
        "stores flush the store buffer, so only the three interleaving "
        "outcomes may appear; observing (0,0) here indicates a broken "
        "SeqCst lowering.",
    )


def _mp(name: str, mode: AccessMode, description: str) -> LitmusTestBuilder:
    b = LitmusTestBuilder(
        name, locations=("x", "y"), registers=("r1", "r2"),
        description=description,
    )
    b.thread(Write("x", 1, mode), Write("y", 1, mode))
    b.thread(Read("y", "r1", mode), Read("x", "r2", mode))
    return b.outcome("r1", "r2").accept((0, 0), (0, 1), (1, 1))


def _mp_relaxed() -> SuiteEntry:
    b = _mp(
        "mp.relaxed", RELAXED,
        "message passing: data then flag vs flag then data",
    ).interesting((1, 0))
    return _entry(
        b,
        "Message passing: the writer publishes data then a flag, the "
        "reader polls the flag then reads the data. Seeing the flag but "
        "stale data, (1,0), needs store-store or load-load reordering -- "
        "beyond TSO, hence beyond this package's oracle, but real on Arm "
        "hardware and under optimizing compilers, so it is tolerated as "
        "interesting by hand.",
        hand_curated=frozenset({(1, 0)}),
    )


def _mp_seqcst() -> SuiteEntry:
    b = _mp(
        "mp.seqcst", SEQ_CST,
        "message passing with SeqCst accesses",
    )
    return _entry(
        b,
        "Message passing with sequentially consistent accesses: the "
        "publication must be observed in order, so only the interleaving "
        "outcomes are accepted.",
    )


def _mp_drf() -> SuiteEntry:
    b = LitmusTestBuilder(
        "mp.drf",
        locations=("x", "y"),
        registers=("r1", "r2"),
        description="message passing with both bodies lock-guarded",
    )
    b.thread(AtomicBlock([Write("x", 1, PLAIN), Write("y", 1, PLAIN)]))
    b.thread(AtomicBlock([Read("y", "r1", PLAIN), Read("x", "r2", PLAIN)]))
    b.outcome("r1", "r2").accept((0, 0), (1, 1))
    return _entry(
        b,
        "Data-race-free message passing: both bodies run under one lock, "
        "so whole blocks interleave atomically and the reader sees either "
        "nothing or everything. Any other outcome means the mutual "
        "exclusion or its memory ordering is broken.",
    )


def _corr(name: str, mode: AccessMode, description: str,
          note: str) -> SuiteEntry:
    b = LitmusTestBuilder(
        name, locations=("x",), registers=("r1", "r2"),
        description=description,
    )
    b.thread(Write("x", 1, mode))
    b.thread(Read("x", "r1", mode), Read("x", "r2", mode))
    b.outcome("r1", "r2").accept((0, 0), (0, 1), (1, 1)).forbid((1, 0))
    return _entry(b, note)


def _corr_relaxed() -> SuiteEntry:
    return _corr(
        "corr.relaxed", RELAXED,
        "read-read coherence: same-location reads never go backwards",
        "Coherence of read-read pairs: two reads of one location by one "
        "thread must not observe values out of modification order, so "
        "(1,0) is explicitly forbidden even though every other "
        "combination is an ordinary race.",
    )


def _corr_cse() -> SuiteEntry:
    return _corr(
        "corr.cse", PLAIN,
        "read-read coherence via repeated plain reads (invites folding)",
        "Coherence with deliberately plain repeated reads of the same "
        "location, the shape that invites a compiler to fold the second "
        "read into the first. Folding is legal (it can only produce "
        "(v,v) results) but anti-chronological (1,0) never is. Because "
        "plain accesses lower to relaxed atomics in this engine, the "
        "folding provocation is weaker than in languages where these "
        "would be ordinary loads; the spec is identical to corr.relaxed.",
    )


def _iriw(name: str, mode: AccessMode, description: str) -> LitmusTestBuilder:
    b = LitmusTestBuilder(
        name, locations=("x", "y"), registers=("r1", "r2", "r3", "r4"),
        description=description,
    )
    b.thread(Write("x", 1, mode))
    b.thread(Write("y", 1, mode))
    b.thread(Read("x", "r1", mode), Read("y", "r2", mode))
    b.thread(Read("y", "r3", mode), Read("x", "r4", mode))
    return b.outcome("r1", "r2", "r3", "r4").accept(*sorted(IRIW_SC_SET))


def _iriw_relaxed() -> SuiteEntry:
    b = _iriw(
        "iriw.relaxed", RELAXED,
        "independent reads of independent writes: is store order global?",
    ).interesting((1, 0, 1, 0))
    return _entry(
        b,
        "Independent reads of independent writes: two writers touch "
        "disjoint locations and two readers read them in opposite orders. "
        "The readers disagreeing on the store order, (1,0,1,0), requires "
        "a non-multi-copy-atomic machine -- impossible under SC and even "
        "TSO, but observed on Power and on some managed runtimes, so it "
        "is tolerated as interesting by hand.",
        hand_curated=frozenset({(1, 0, 1, 0)}),
    )


def _iriw_seqcst() -> SuiteEntry:
    b = _iriw(
        "iriw.seqcst", SEQ_CST,
        "IRIW with SeqCst accesses: all threads agree on store order",
    )
    return _entry(
        b,
        "IRIW with sequentially consistent accesses: SeqCst restores a "
        "single global order of the two stores, so the disagreement "
        "outcome must never appear.",
    )


def _lb_relaxed() -> SuiteEntry:
    b = LitmusTestBuilder(
        "lb.relaxed",
        locations=("x", "y"),
        registers=("r1", "r2"),
        description="load buffering: loads then cross stores",
    )
    b.thread(Read("y", "r1", RELAXED), Write("x", 1, RELAXED))
    b.thread(Read("x", "r2", RELAXED), Write("y", 1, RELAXED))
    b.outcome("r1", "r2").accept((0, 0), (0, 1), (1, 0)).interesting((1, 1))
    return _entry(
        b,
        "Load buffering: each thread loads the other's location before "
        "storing its own. Both loads returning 1 requires load-store "
        "reordering; no interleaving nor TSO execution produces it, but "
        "Arm-class hardware can, so with no value dependency in the way "
        "it is tolerated as interesting by hand.",
        hand_curated=frozenset({(1, 1)}),
    )


def _lb_deps() -> SuiteEntry:
    b = LitmusTestBuilder(
        "lb.deps",
        locations=("x", "y"),
        registers=("r1", "r2"),
        description="load buffering with value dependencies",
    )
    b.thread(Read("y", "r1", RELAXED), Write("x", "r1", RELAXED))
    b.thread(Read("x", "r2", RELAXED), Write("y", "r2", RELAXED))
    b.outcome("r1", "r2").accept((0, 0)).forbid((1, 1))
    return _entry(
        b,
        "Load buffering with the stored value taken from the load: the "
        "dependency chain means any non-zero result would have to invent "
        "its own justification. Only (0,0) is reachable under any "
        "reasonable model; (1,1) is explicitly forbidden.",
    )


def _oota() -> SuiteEntry:
    b = LitmusTestBuilder(
        "oota",
        locations=("x", "y"),
        registers=("r1", "r2"),
        description="out of thin air: circular values must never appear",
    )
    b.thread(Read("x", "r1", RELAXED), Write("y", "r1", RELAXED))
    b.thread(Read("y", "r2", RELAXED), Write("x", "r2", RELAXED))
    b.outcome("r1", "r2").accept((0, 0))
    return _entry(
        b,
        "Out-of-thin-air: each thread copies the other's location, so any "
        "non-zero value would be self-justifying. Universally forbidden "
        "on every platform and model; only (0,0) is accepted.",
    )


def _upub_adapted() -> SuiteEntry:
    b = LitmusTestBuilder(
        "upub.adapted",
        locations=("h", "a", "b"),
        registers=("rh", "r1", "r2"),
        description="unsafe publication: may the reader see partial init?",
    )
    b.thread(
        Write("a", 42, PLAIN),
        Write("b", 42, PLAIN),
        Write("h", 1, RELAXED),
    )
    b.thread(
        Read("h", "rh", RELAXED),
        GuardedRead("a", "r1", guard="rh", fallback=-1, mode=PLAIN),
        GuardedRead("b", "r2", guard="rh", fallback=-1, mode=PLAIN),
    )
    b.outcome("r1", "r2")
    b.accept(UNPUBLISHED, (42, 42))
    b.interesting((0, 0), (0, 42), (42, 0))
    return _entry(
        b,
        "Unsafe publication, adapted to a memory-safe setting: the writer "
        "initializes a two-field cell and only then publishes a handle "
        "with no ordering; the reader dereferences the fields only if it "
        "saw the handle. Reading the handle but partially (or not yet) "
        "initialized fields is real under relaxed publication and is "
        "classified interesting. The notorious full version of this test "
        "-- publishing an object reference so an unlucky reader sees "
        "garbage memory -- needs a memory-unsafe host and is deliberately "
        "out of scope; no abstract twin exists because the oracle's "
        "instruction set has no conditional reads.",
        hand_curated=frozenset({(0, 0), (0, 42), (42, 0)}),
    )


@lru_cache(maxsize=1)
def _suite() -> tuple[SuiteEntry, ...]:
    return (
        _atom_word(),
        _sb_relaxed(),
        _sb_seqcst(),
        _mp_relaxed(),
        _mp_seqcst(),
        _mp_drf(),
        _corr_relaxed(),
        _corr_cse(),
        _iriw_relaxed(),
        _iriw_seqcst(),
        _lb_relaxed(),
        _lb_deps(),
        _oota(),
        _upub_adapted(),
    )


def builtin_suite() -> list[SuiteEntry]:
    """All built-in suite entries, in catalog order."""
    return list(_suite())


def suite_entry(name: str) -> SuiteEntry:
    """The entry whose test has exactly ``name``; raises KeyError otherwise."""
    for entry in _suite():
        if entry.test.name == name:
            return entry
    raise KeyError(f"no built-in test named {name!r}")


def builtin_registry() -> TestRegistry:
    """Fresh registry holding every built-in test."""
    registry = TestRegistry()
    for entry in _suite():
        registry.register(entry.test)
    return registry
