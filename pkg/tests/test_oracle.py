"""Tests for the SC/TSO enumeration oracle and spec validation."""

import random

import pytest

from helpers import brute_force_sc, random_program
from weakmem.oracle import (
    ACCEPTED_NOT_SC,
    SC_NOT_ACCEPTED,
    AbstractProgram,
    AtomicBlock,
    MemoryModel,
    MissingTwinError,
    Read,
    SpecError,
    StateSpaceLimitError,
    Write,
    count_sc_interleavings,
    enumerate_outcomes,
    validate_spec,
)
from weakmem.suite import suite_entry

SC = MemoryModel.SC
TSO = MemoryModel.TSO


def sb_program(mode=None):
    kw = {} if mode is None else {"mode": mode}
    return AbstractProgram(
        locations=("x", "y"),
        threads=(
            (Write("x", 1, **kw), Read("y", "r1", **kw)),
            (Write("y", 1, **kw), Read("x", "r2", **kw)),
        ),
        outcome_registers=("r1", "r2"),
    )


def mp_program():
    return AbstractProgram(
        locations=("x", "y"),
        threads=(
            (Write("x", 1), Write("y", 1)),
            (Read("y", "r1"), Read("x", "r2")),
        ),
        outcome_registers=("r1", "r2"),
    )


def iriw_program():
    return AbstractProgram(
        locations=("x", "y"),
        threads=(
            (Write("x", 1),),
            (Write("y", 1),),
            (Read("x", "r1"), Read("y", "r2")),
            (Read("y", "r3"), Read("x", "r4")),
        ),
        outcome_registers=("r1", "r2", "r3", "r4"),
    )


class TestExactSets:
    """Closed-form result sets for the classic shapes.

    Each expected literal below was derived by hand-enumerating the
    interleavings (and buffer schedules) before the implementation existed,
    then frozen here; the suite module's own constants are cross-checked
    against these in test_suite.py.
    """

    def test_store_buffering(self):
        assert enumerate_outcomes(sb_program(), SC) == {(0, 1), (1, 0), (1, 1)}
        assert enumerate_outcomes(sb_program(), TSO) == {
            (0, 0),
            (0, 1),
            (1, 0),
            (1, 1),
        }

    def test_store_buffering_seqcst_restores_sc(self):
        from weakmem.model import AccessMode

        program = sb_program(AccessMode.SEQ_CST)
        assert enumerate_outcomes(program, TSO) == enumerate_outcomes(program, SC)

    def test_message_passing(self):
        expected = {(0, 0), (0, 1), (1, 1)}
        assert enumerate_outcomes(mp_program(), SC) == expected
        assert enumerate_outcomes(mp_program(), TSO) == expected

    def test_message_passing_drf(self):
        program = AbstractProgram(
            locations=("x", "y"),
            threads=(
                (AtomicBlock((Write("x", 1), Write("y", 1))),),
                (AtomicBlock((Read("y", "r1"), Read("x", "r2"))),),
            ),
            outcome_registers=("r1", "r2"),
        )
        expected = {(0, 0), (1, 1)}
        assert enumerate_outcomes(program, SC) == expected
        assert enumerate_outcomes(program, TSO) == expected

    def test_load_buffering(self):
        program = AbstractProgram(
            locations=("x", "y"),
            threads=(
                (Read("y", "r1"), Write("x", 1)),
                (Read("x", "r2"), Write("y", 1)),
            ),
            outcome_registers=("r1", "r2"),
        )
        expected = {(0, 0), (0, 1), (1, 0)}
        assert enumerate_outcomes(program, SC) == expected
        assert enumerate_outcomes(program, TSO) == expected

    def test_coherence_read_read(self):
        program = AbstractProgram(
            locations=("x",),
            threads=(
                (Write("x", 1),),
                (Read("x", "r1"), Read("x", "r2")),
            ),
            outcome_registers=("r1", "r2"),
        )
        expected = {(0, 0), (0, 1), (1, 1)}
        assert enumerate_outcomes(program, SC) == expected
        assert enumerate_outcomes(program, TSO) == expected

    def test_iriw(self):
        sc_set = enumerate_outcomes(iriw_program(), SC)
        all_binary = {
            (a, b, c, d)
            for a in (0, 1)
            for b in (0, 1)
            for c in (0, 1)
            for d in (0, 1)
        }
        assert sc_set == all_binary - {(1, 0, 1, 0)}
        assert enumerate_outcomes(iriw_program(), TSO) == sc_set

    def test_atomicity(self):
        # The runtime kernel models word tearing; the abstract machine cannot,
        # so here we only pin the block semantics: the read and write are not
        # separable by the concurrent store.
        program = AbstractProgram(
            locations=("x",),
            threads=(
                (AtomicBlock((Write("x", 1), Read("x", "r1"))),),
                (Write("x", 2),),
            ),
            outcome_registers=("r1",),
        )
        assert enumerate_outcomes(program, SC) == {(1,)}
        assert enumerate_outcomes(program, TSO) == {(1,)}


class TestInterleavingCounts:
    def test_store_buffering_has_six(self):
        assert count_sc_interleavings(sb_program()) == 6

    def test_message_passing_has_six(self):
        assert count_sc_interleavings(mp_program()) == 6

    def test_iriw_has_180(self):
        # 6!/(1!*1!*2!*2!) interleavings of 6 instructions across 4 threads.
        assert count_sc_interleavings(iriw_program()) == 180

    def test_atomic_block_counts_as_one_step(self):
        program = AbstractProgram(
            locations=("x",),
            threads=(
                (AtomicBlock((Write("x", 1), Write("x", 2))),),
                (Read("x", "r1"),),
            ),
            outcome_registers=("r1",),
        )
        assert count_sc_interleavings(program) == 2


class TestModelRelations:
    def test_sc_subset_of_tso_on_random_programs(self):
        rng = random.Random(2024)
        for _ in range(120):
            program = random_program(rng)
            sc = enumerate_outcomes(program, SC)
            tso = enumerate_outcomes(program, TSO)
            assert sc <= tso, program

    def test_all_seqcst_writes_collapse_tso_to_sc(self):
        rng = random.Random(53)
        for _ in range(120):
            program = random_program(rng, all_seqcst_writes=True)
            assert enumerate_outcomes(program, TSO) == enumerate_outcomes(
                program, SC
            ), program

    def test_sc_agrees_with_independent_reference(self):
        rng = random.Random(99)
        for _ in range(200):
            program = random_program(rng)
            assert enumerate_outcomes(program, SC) == brute_force_sc(program), program

    def test_enumeration_is_deterministic(self):
        program = iriw_program()
        assert enumerate_outcomes(program, TSO) == enumerate_outcomes(program, TSO)


class TestValidateSpec:
    def test_exact_spec_validates_clean(self):
        assert validate_spec(suite_entry("sb.relaxed")) == []

    def test_missing_sc_outcome_is_flagged(self):
        entry = suite_entry("sb.relaxed")
        spec = entry.test.spec
        narrowed = type(spec)(
            accepted=spec.accepted - {(1, 1)},
            interesting=spec.interesting,
            forbidden=spec.forbidden,
            default=spec.default,
        )
        from dataclasses import replace

        bad = replace(entry, test=replace_spec(entry.test, narrowed))
        mismatches = validate_spec(bad)
        assert [(m.outcome, m.direction) for m in mismatches] == [
            ((1, 1), SC_NOT_ACCEPTED)
        ]
        assert "(1, 1)" in str(mismatches[0])

    def test_extra_accepted_outcome_is_flagged(self):
        entry = suite_entry("mp.relaxed")
        spec = entry.test.spec
        widened = type(spec)(
            accepted=spec.accepted | {(1, 0)},
            interesting=spec.interesting - {(1, 0)},
            forbidden=spec.forbidden,
            default=spec.default,
        )
        from dataclasses import replace

        bad = replace(entry, test=replace_spec(entry.test, widened))
        mismatches = validate_spec(bad)
        assert [(m.outcome, m.direction) for m in mismatches] == [
            ((1, 0), ACCEPTED_NOT_SC)
        ]

    def test_twinless_entry_raises(self):
        with pytest.raises(MissingTwinError, match="upub.adapted"):
            validate_spec(suite_entry("upub.adapted"))


def replace_spec(test, spec):
    from dataclasses import replace

    return replace(test, spec=spec)


class TestProgramValidation:
    def test_instruction_budget(self):
        nine = tuple(Write("x", i) for i in range(1, 9)) + (Read("x", "r1"),)
        with pytest.raises(SpecError, match="max 8"):
            AbstractProgram(
                locations=("x",), threads=(nine, ()), outcome_registers=("r1",)
            )

    def test_eight_instructions_allowed(self):
        eight = tuple(Write("x", i) for i in range(1, 8)) + (Read("x", "r1"),)
        AbstractProgram(
            locations=("x",), threads=(eight, ()), outcome_registers=("r1",)
        )

    def test_register_single_assignment(self):
        with pytest.raises(SpecError, match="r1"):
            AbstractProgram(
                locations=("x",),
                threads=((Read("x", "r1"),), (Read("x", "r1"),)),
                outcome_registers=("r1",),
            )

    def test_undeclared_location(self):
        with pytest.raises(SpecError, match="z"):
            AbstractProgram(
                locations=("x",),
                threads=((Write("z", 1),), (Read("x", "r1"),)),
                outcome_registers=("r1",),
            )

    def test_register_write_requires_prior_same_thread_read(self):
        with pytest.raises(SpecError, match="before"):
            AbstractProgram(
                locations=("x", "y"),
                threads=(
                    (Write("y", "r1"), Read("x", "r1")),
                    (Read("y", "r2"),),
                ),
                outcome_registers=("r1", "r2"),
            )

    def test_outcome_register_must_be_assigned(self):
        with pytest.raises(SpecError, match="r9"):
            AbstractProgram(
                locations=("x",),
                threads=((Write("x", 1),), (Read("x", "r1"),)),
                outcome_registers=("r9",),
            )

    def test_needs_two_threads(self):
        with pytest.raises(SpecError, match="two threads"):
            AbstractProgram(
                locations=("x",),
                threads=((Read("x", "r1"),),),
                outcome_registers=("r1",),
            )

    def test_atomic_block_contents_restricted(self):
        with pytest.raises(SpecError, match="only reads and writes"):
            AtomicBlock((AtomicBlock((Write("x", 1),)),))

    def test_duplicate_locations(self):
        with pytest.raises(SpecError, match="duplicate"):
            AbstractProgram(
                locations=("x", "x"),
                threads=((Write("x", 1),), (Read("x", "r1"),)),
                outcome_registers=("r1",),
            )


def test_state_cap_enforced():
    program = iriw_program()
    with pytest.raises(StateSpaceLimitError):
        enumerate_outcomes(program, TSO, max_states=5)


def test_memory_model_names():
    assert str(MemoryModel.SC) == "SC"
    assert str(MemoryModel.TSO) == "TSO"
