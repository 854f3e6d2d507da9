"""Stress engine: races a test's threads over a large array of states.

One run executes ``rounds`` batches.  Per batch, every parallel instance
owns a freshly zeroed :class:`StateArray` of ``batch_size`` cells and spawns
one OS thread per test thread; the workers walk the cells in the same
ascending order, synchronizing on a shared barrier every ``sync_every``
cells so the racing bodies stay overlapped, and optionally pin themselves to
CPUs.  After all workers join, a single collector extracts each cell's
outcome registers into a histogram; instance and round histograms merge by
pointwise sum.  All bookkeeping happens on the orchestrating thread — the
only data raced are the test's own state cells, under the access modes the
test declares.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass

import numpy as np

from .model import ArityError, LitmusError, LitmusTest, Outcome, StateLayout, TestState
from .report import RunReport, build_report

WORD_BYTES = 8

_AFFINITY_KINDS = ("none", "sequential", "spread", "explicit")


class RunnerError(LitmusError):
    """A run aborted; partial results were discarded."""


@dataclass(frozen=True)
class AffinityScheme:
    """How worker threads map to CPUs.

    ``sequential`` pins global thread rank i to the i-th online CPU
    (wrapping); ``spread`` pins ranks round-robin over one representative
    logical CPU per physical core; ``explicit`` pins rank i to ``cpus[i]``
    and fails for ranks beyond the list.  Ranks count across parallel
    instances (instance j, thread t → rank j·n_threads+t) so instances get
    disjoint CPU sets.
    """

    kind: str = "none"
    cpus: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in _AFFINITY_KINDS:
            raise ValueError(f"unknown affinity kind {self.kind!r}")
        object.__setattr__(self, "cpus", tuple(int(c) for c in self.cpus))
        if self.kind == "explicit" and not self.cpus:
            raise ValueError("explicit affinity needs at least one CPU id")
        if self.kind != "explicit" and self.cpus:
            raise ValueError(f"affinity kind {self.kind!r} takes no CPU list")
        if any(c < 0 for c in self.cpus):
            raise ValueError("CPU ids must be non-negative")

    @classmethod
    def none(cls) -> "AffinityScheme":
        return cls("none")

    @classmethod
    def sequential(cls) -> "AffinityScheme":
        return cls("sequential")

    @classmethod
    def spread(cls) -> "AffinityScheme":
        return cls("spread")

    @classmethod
    def explicit(cls, cpus) -> "AffinityScheme":
        return cls("explicit", tuple(cpus))

    @classmethod
    def parse(cls, text: str) -> "AffinityScheme":
        """Parse a CLI/env spelling: none | seq | sequential | spread | 3,5,7."""
        text = text.strip().lower()
        if text in ("", "none"):
            return cls.none()
        if text in ("seq", "sequential"):
            return cls.sequential()
        if text == "spread":
            return cls.spread()
        try:
            return cls.explicit(int(part) for part in text.split(","))
        except ValueError:
            raise ValueError(
                f"cannot parse affinity {text!r}: expected none, seq, spread, "
                f"or a comma-separated CPU list"
            ) from None

    def __str__(self) -> str:
        if self.kind == "explicit":
            return ",".join(str(c) for c in self.cpus)
        return self.kind


@dataclass(frozen=True)
class PinResult:
    """Outcome of one pin attempt: success, unsupported, or failed(reason)."""

    status: str  # "success" | "unsupported" | "failed"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "success"


def _online_cpus() -> list[int]:
    try:
        return sorted(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        return list(range(os.cpu_count() or 1))


def _physical_core_representatives() -> list[int]:
    """One logical CPU per physical core, lowest id first.

    Falls back to all online CPUs when topology information is missing
    (non-Linux hosts, stripped-down /proc).
    """
    try:
        with open("/proc/cpuinfo", encoding="ascii", errors="replace") as f:
            text = f.read()
    except OSError:
        return _online_cpus()
    reps: dict[tuple[str, str], int] = {}
    block: dict[str, str] = {}
    for line in text.splitlines() + [""]:
        if not line.strip():
            if "processor" in block:
                key = (
                    block.get("physical id", "0"),
                    block.get("core id", block["processor"]),
                )
                reps.setdefault(key, int(block["processor"]))
            block = {}
        elif ":" in line:
            name, _, value = line.partition(":")
            block[name.strip()] = value.strip()
    online = set(_online_cpus())
    cpus = sorted(c for c in reps.values() if c in online)
    return cpus or _online_cpus()


def _target_cpus(rank: int, scheme: AffinityScheme) -> set[int]:
    if scheme.kind == "sequential":
        online = _online_cpus()
        return {online[rank % len(online)]}
    if scheme.kind == "spread":
        reps = _physical_core_representatives()
        return {reps[rank % len(reps)]}
    if rank >= len(scheme.cpus):
        raise ValueError(f"no CPU assigned for thread rank {rank}")
    return {scheme.cpus[rank]}


def pin_thread(rank: int, scheme: AffinityScheme) -> PinResult:
    """Pin the calling thread per ``scheme``; must run on the target thread.

    Never raises: pinning is best-effort, and the runner records a warning
    and continues unpinned on anything but success.
    """
    if scheme.kind == "none":
        return PinResult("success", "unpinned by request")
    if not hasattr(os, "sched_setaffinity"):
        return PinResult("unsupported", "platform cannot pin threads")
    try:
        cpus = _target_cpus(rank, scheme)
    except ValueError as exc:
        return PinResult("failed", str(exc))
    try:
        os.sched_setaffinity(0, cpus)
    except OSError as exc:
        return PinResult("failed", f"invalid cpu set {sorted(cpus)}: {exc}")
    return PinResult("success", f"cpus {sorted(cpus)}")


@dataclass(frozen=True)
class RunParams:
    """Runner configuration; validated at construction."""

    batch_size: int = 1_000_000
    rounds: int = 10
    sync_every: int = 100
    affinity: AffinityScheme = AffinityScheme("none")
    padding_bytes: int = 0
    parallel_instances: int = 1
    time_budget: float | None = None

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 1 <= self.sync_every <= self.batch_size:
            raise ValueError(
                f"sync_every must be in 1..batch_size, got {self.sync_every} "
                f"with batch_size {self.batch_size}"
            )
        if self.parallel_instances < 1:
            raise ValueError(
                f"parallel_instances must be >= 1, got {self.parallel_instances}"
            )
        if self.padding_bytes < 0 or self.padding_bytes % WORD_BYTES:
            raise ValueError(
                f"padding_bytes must be a non-negative multiple of {WORD_BYTES}, "
                f"got {self.padding_bytes}"
            )
        if self.time_budget is not None and not self.time_budget > 0:
            raise ValueError(f"time_budget must be positive, got {self.time_budget}")

    def as_dict(self) -> dict:
        """JSON-ready echo embedded in reports."""
        return {
            "batch_size": self.batch_size,
            "rounds": self.rounds,
            "sync_every": self.sync_every,
            "affinity": str(self.affinity),
            "padding_bytes": self.padding_bytes,
            "parallel_instances": self.parallel_instances,
            "time_budget": self.time_budget,
        }


class StateArray:
    """Contiguous storage of ``n_cells`` state cells plus per-cell padding."""

    def __init__(self, layout: StateLayout, n_cells: int, padding_bytes: int = 0):
        self.layout = layout
        self.n_cells = n_cells
        self.stride = layout.n_slots + padding_bytes // WORD_BYTES
        self.buf = np.zeros(n_cells * self.stride, dtype=np.int64)

    def reset(self) -> None:
        self.buf[:] = 0

    def cell(self, i: int) -> TestState:
        """View of cell ``i`` (orchestrator-side inspection only)."""
        base = i * self.stride
        return TestState(self.layout, self.buf[base : base + self.layout.n_slots])


def merge_histograms(parts) -> dict[Outcome, int]:
    """Pointwise sum of outcome histograms; all parts must share one arity."""
    merged: dict[Outcome, int] = {}
    arity: int | None = None
    for part in parts:
        for outcome, count in part.items():
            outcome = tuple(outcome)
            if arity is None:
                arity = len(outcome)
            elif len(outcome) != arity:
                raise ArityError(
                    f"cannot merge histograms of arity {arity} and {len(outcome)}"
                )
            merged[outcome] = merged.get(outcome, 0) + int(count)
    return merged


def _worker_entry(kernels, array, table, sync_every, bar, n_threads, rank, scheme,
                  pin_notes, failures, all_bars):
    try:
        result = pin_thread(rank, scheme)
        if not result.ok:
            pin_notes.add(
                f"affinity degraded: thread {rank} {result.status}"
                f" ({result.detail}); running unpinned"
            )
        rc = kernels.run_worker(
            array.buf, array.n_cells, array.stride, table, sync_every, bar, n_threads
        )
        if rc != 0:
            failures.append(RunnerError(f"worker {rank} saw the abort flag"))
    except BaseException as exc:  # propagate through the orchestrator
        failures.append(exc)
        for b in all_bars:
            kernels.signal_abort(b)


def run_test(test: LitmusTest, params: RunParams | None = None) -> RunReport:
    """Stress-run ``test`` under ``params`` and report the histogram.

    Aborts with :class:`RunnerError` (discarding partial results) if any
    worker thread fails; degraded CPU pinning is only a report warning.  The
    time budget is checked between rounds, never mid-batch, so every counted
    batch is complete and the histogram total is exact.
    """
    if params is None:
        params = RunParams()
    from . import _kernels  # deferred: compiles/loads the JIT kernels

    _kernels.ensure_compiled()
    tables = test.kernel_tables
    n_threads = test.n_threads
    n_out = len(test.outcome_registers)
    out_slots = np.zeros(4, dtype=np.int64)
    for j, reg in enumerate(test.outcome_registers):
        out_slots[j] = test.layout.index(reg)

    arrays = [
        StateArray(test.layout, params.batch_size, params.padding_bytes)
        for _ in range(params.parallel_instances)
    ]
    bars = [np.zeros(_kernels.BAR_SLOTS, dtype=np.int64) for _ in arrays]

    warnings: list[str] = []
    pin_notes: set[str] = set()
    histogram: dict[Outcome, int] = {}
    deadline = (
        None if params.time_budget is None
        else time.monotonic() + params.time_budget
    )
    executed_rounds = 0

    for rnd in range(params.rounds):
        failures: list[BaseException] = []
        threads: list[threading.Thread] = []
        for array, bar in zip(arrays, bars):
            array.reset()
            bar[:] = 0
        for inst, (array, bar) in enumerate(zip(arrays, bars)):
            for t in range(n_threads):
                rank = inst * n_threads + t
                threads.append(
                    threading.Thread(
                        target=_worker_entry,
                        args=(_kernels, array, tables[t], params.sync_every, bar,
                              n_threads, rank, params.affinity, pin_notes, failures,
                              bars),
                        name=f"weakmem-{test.name}-i{inst}t{t}",
                        daemon=True,
                    )
                )
        started: list[threading.Thread] = []
        try:
            for th in threads:
                th.start()
                started.append(th)
        except BaseException as exc:
            for bar in bars:
                _kernels.signal_abort(bar)
            for th in started:
                th.join()
            raise RunnerError(
                f"thread spawn failed; partial results discarded: {exc}"
            ) from exc
        for th in threads:
            th.join()
        if failures:
            raise RunnerError(
                "worker thread failed; partial results discarded"
            ) from failures[0]

        for array in arrays:
            packed = _kernels.new_histogram()
            _kernels.run_collector(
                array.buf, array.n_cells, array.stride, out_slots, n_out, packed
            )
            part = {
                tuple(int(v) for v in key[:n_out]): int(count)
                for key, count in packed.items()
            }
            if sum(part.values()) != array.n_cells:
                raise RunnerError(
                    f"count conservation violated: collected "
                    f"{sum(part.values())} outcomes from {array.n_cells} cells"
                )
            histogram = merge_histograms([histogram, part])

        executed_rounds = rnd + 1
        if (
            deadline is not None
            and time.monotonic() >= deadline
            and executed_rounds < params.rounds
        ):
            warnings.append(
                f"time budget exhausted: ran {executed_rounds} of "
                f"{params.rounds} rounds"
            )
            break

    warnings.extend(sorted(pin_notes))
    params_echo = params.as_dict()
    params_echo["executed_rounds"] = executed_rounds
    return build_report(
        test, histogram, params=params_echo, warnings=warnings
    )
