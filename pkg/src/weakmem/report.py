"""Run reports: construction, table rendering, JSON persistence, diffing.

A :class:`RunReport` is an immutable value object: the observed histogram
with per-outcome classifications, the overall status, an echo of the run
parameters, environment metadata, and a snapshot of the outcome spec the
classifications were computed under.  Embedding the spec lets ``compare``
detect classification changes across tool versions or configurations, not
just outcome-set changes.

Frequencies are always derived from ``count / total_count`` at render time,
never stored, so a report can't carry inconsistent numbers.  Two rendering
styles exist: ``uniform`` rounds to four significant digits; ``paper``
truncates to five and strips trailing zeros, matching the style of
previously published litmus tables for golden comparisons.
"""

from __future__ import annotations

import json
import os
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import ROUND_DOWN, Decimal
from importlib import metadata
from typing import Iterable, Mapping

from .model import (
    LitmusError,
    LitmusTest,
    Outcome,
    OutcomeSpec,
    OutcomeType,
    classify,
    overall_status,
)

SCHEMA = "litmus-report/1"

FREQ_UNIFORM = "uniform"
FREQ_PAPER = "paper"
FREQ_STYLES = (FREQ_UNIFORM, FREQ_PAPER)

#: Frequencies strictly below this fraction render as "<0.001%".
_FREQ_FLOOR_NUM, _FREQ_FLOOR_DEN = 1, 100_000  # 0.001%

try:
    _VERSION = metadata.version("weakmem")
except metadata.PackageNotFoundError:  # running from a source checkout
    _VERSION = "0+unknown"


class ReportParseError(LitmusError):
    """A report document is malformed or has an unknown schema."""


class ReportValidationError(LitmusError):
    """A report document is well-formed but violates an invariant."""


@dataclass(frozen=True)
class ReportEntry:
    """One observed outcome: its classification and occurrence count."""

    outcome: Outcome
    outcome_type: OutcomeType
    count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcome", tuple(int(v) for v in self.outcome))
        if self.count < 1:
            raise ReportValidationError(
                f"entry for {self.outcome} has non-positive count {self.count}"
            )


@dataclass(frozen=True)
class RunReport:
    """Immutable result of one stress run."""

    test_name: str
    entries: tuple[ReportEntry, ...]
    total_count: int
    overall: OutcomeType
    spec: OutcomeSpec
    params: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        entries = tuple(
            sorted(self.entries, key=lambda e: (-e.count, e.outcome))
        )
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "warnings", tuple(self.warnings))
        counted = sum(e.count for e in entries)
        if counted != self.total_count:
            raise ReportValidationError(
                f"entry counts sum to {counted}, total_count says "
                f"{self.total_count}"
            )
        arities = {len(e.outcome) for e in entries}
        if len(arities) > 1:
            raise ReportValidationError(
                f"entries mix outcome arities {sorted(arities)}"
            )

    @property
    def arity(self) -> int | None:
        return len(self.entries[0].outcome) if self.entries else self.spec.arity

    def frequency_of(self, entry: ReportEntry) -> float:
        return entry.count / self.total_count

    def histogram(self) -> dict[Outcome, int]:
        return {e.outcome: e.count for e in self.entries}


def capture_environment() -> dict:
    """Host metadata embedded in reports (best effort, never raises)."""
    cpu_model = ""
    try:
        with open("/proc/cpuinfo", encoding="ascii", errors="replace") as f:
            for line in f:
                if line.lower().startswith("model name"):
                    cpu_model = line.partition(":")[2].strip()
                    break
    except OSError:
        pass
    return {
        "cpu_model": cpu_model or platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count() or 1,
        "os": f"{platform.system()} {platform.release()}",
        "python": platform.python_version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "tool_version": _VERSION,
    }


def build_report(
    test: LitmusTest,
    histogram: Mapping[Outcome, int],
    *,
    params: Mapping | None = None,
    environment: Mapping | None = None,
    warnings: Iterable[str] = (),
) -> RunReport:
    """Classify ``histogram`` under ``test``'s spec and assemble a report.

    Zero-count outcomes are dropped: only encountered outcomes get rows.
    """
    entries = tuple(
        ReportEntry(tuple(outcome), classify(outcome, test.spec), int(count))
        for outcome, count in histogram.items()
        if count
    )
    return RunReport(
        test_name=test.name,
        entries=entries,
        total_count=sum(e.count for e in entries),
        overall=overall_status(histogram, test.spec),
        spec=test.spec,
        params=dict(params or {}),
        environment=dict(
            environment if environment is not None else capture_environment()
        ),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _truncate_significant(value: Decimal, digits: int) -> Decimal:
    if value == 0:
        return Decimal(0)
    quantum = Decimal(1).scaleb(value.adjusted() - digits + 1)
    return value.quantize(quantum, rounding=ROUND_DOWN)


def _strip_zeros(text: str) -> str:
    return text.rstrip("0").rstrip(".") if "." in text else text


def format_frequency(count: int, total: int, style: str = FREQ_UNIFORM) -> str:
    """Percentage string for ``count`` of ``total`` under ``style``.

    Anything strictly below 0.001% renders as "<0.001%" (the comparison is
    exact, not floating-point).  ``uniform`` rounds to 4 significant digits;
    ``paper`` truncates to 5 significant digits and strips trailing zeros.
    """
    if style not in FREQ_STYLES:
        raise ValueError(f"unknown frequency style {style!r}")
    if total <= 0:
        raise ValueError(f"total must be positive, got {total}")
    if count == 0:
        return "0%"
    if count * _FREQ_FLOOR_DEN < total * _FREQ_FLOOR_NUM:
        return "<0.001%"
    if style == FREQ_UNIFORM:
        return f"{count / total * 100:.4g}%"
    percent = Decimal(count) * 100 / Decimal(total)
    truncated = _truncate_significant(percent, 5)
    return _strip_zeros(format(truncated, "f")) + "%"


def format_table(report: RunReport, freq_style: str = FREQ_UNIFORM) -> str:
    """Four-column text table plus footer; byte-stable for equal reports."""
    header = ("Outcome", "Type", "Count", "Frequency")
    rows = [
        (
            "(" + ", ".join(str(v) for v in e.outcome) + ")",
            str(e.outcome_type),
            f"{e.count:,}",
            format_frequency(e.count, report.total_count, freq_style),
        )
        for e in report.entries
    ]
    widths = [
        max(len(header[col]), *(len(r[col]) for r in rows)) if rows
        else len(header[col])
        for col in range(4)
    ]
    # Outcome and Type read left-to-right; Count and Frequency are numeric.
    aligned_header = " | ".join(
        h.ljust(w) if col < 2 else h.rjust(w)
        for col, (h, w) in enumerate(zip(header, widths))
    )
    rule = "-+-".join("-" * w for w in widths)
    lines = [report.test_name, aligned_header, rule]
    for row in rows:
        lines.append(
            " | ".join(
                cell.ljust(w) if col < 2 else cell.rjust(w)
                for col, (cell, w) in enumerate(zip(row, widths))
            )
        )
    lines.append(rule)
    lines.append(
        f"total count: {report.total_count:,}, overall status: {report.overall}"
    )
    lines.append(
        f"note: outcomes not listed in the spec are classified "
        f"{report.spec.default} by default"
    )
    for warning in report.warnings:
        lines.append(f"warning: {warning}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _require(doc: Mapping, key: str, kind, path: str):
    if key not in doc:
        raise ReportParseError(f"missing {path}.{key}")
    value = doc[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise ReportParseError(
            f"{path}.{key} should be {getattr(kind, '__name__', kind)}, "
            f"got {type(value).__name__}"
        )
    return value


def to_json(report: RunReport) -> bytes:
    """Serialize a report to the versioned JSON document format."""
    doc = {
        "schema": SCHEMA,
        "test": report.test_name,
        "total_count": report.total_count,
        "overall_status": str(report.overall),
        "entries": [
            {
                "outcome": list(e.outcome),
                "type": str(e.outcome_type),
                "count": e.count,
            }
            for e in report.entries
        ],
        "spec": report.spec.as_dict(),
        "params": report.params,
        "environment": report.environment,
        "warnings": list(report.warnings),
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def from_json(data: bytes | str) -> RunReport:
    """Parse a document produced by :func:`to_json`.

    Raises :class:`ReportParseError` for malformed or unknown-schema input
    (naming the offending location) and :class:`ReportValidationError` when
    the document is well-formed but internally inconsistent (e.g. counts not
    summing to the stated total).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ReportParseError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ReportParseError("document root should be an object")
    schema = _require(doc, "schema", str, "$")
    if schema != SCHEMA:
        raise ReportParseError(f"unknown schema {schema!r}, expected {SCHEMA!r}")

    test_name = _require(doc, "test", str, "$")
    total_count = _require(doc, "total_count", int, "$")
    overall_name = _require(doc, "overall_status", str, "$")
    raw_entries = _require(doc, "entries", list, "$")
    raw_spec = _require(doc, "spec", dict, "$")
    params = _require(doc, "params", dict, "$")
    environment = _require(doc, "environment", dict, "$")
    raw_warnings = _require(doc, "warnings", list, "$")

    try:
        spec = OutcomeSpec.from_dict(raw_spec)
    except (KeyError, TypeError, LitmusError) as exc:
        raise ReportParseError(f"$.spec is invalid: {exc}") from exc
    try:
        overall = OutcomeType[overall_name]
    except KeyError:
        raise ReportParseError(
            f"$.overall_status has unknown value {overall_name!r}"
        ) from None

    entries = []
    for i, raw in enumerate(raw_entries):
        path = f"$.entries[{i}]"
        if not isinstance(raw, dict):
            raise ReportParseError(f"{path} should be an object")
        outcome_list = _require(raw, "outcome", list, path)
        if not all(isinstance(v, int) and not isinstance(v, bool)
                   for v in outcome_list):
            raise ReportParseError(f"{path}.outcome should hold integers")
        outcome = tuple(outcome_list)
        type_name = _require(raw, "type", str, path)
        try:
            outcome_type = OutcomeType[type_name]
        except KeyError:
            raise ReportParseError(
                f"{path}.type has unknown value {type_name!r}"
            ) from None
        count = _require(raw, "count", int, path)
        try:
            expected = classify(outcome, spec)
        except LitmusError as exc:
            raise ReportParseError(f"{path}.outcome is invalid: {exc}") from exc
        if outcome_type is not expected:
            raise ReportValidationError(
                f"{path}.type says {outcome_type}, embedded spec classifies "
                f"{outcome} as {expected}"
            )
        entries.append(ReportEntry(outcome, outcome_type, count))

    if not all(isinstance(w, str) for w in raw_warnings):
        raise ReportParseError("$.warnings should hold strings")

    report = RunReport(
        test_name=test_name,
        entries=tuple(entries),
        total_count=total_count,
        overall=overall,
        spec=spec,
        params=params,
        environment=environment,
        warnings=tuple(raw_warnings),
    )
    recomputed = overall_status(report.histogram(), spec)
    if recomputed is not overall:
        raise ReportValidationError(
            f"$.overall_status says {overall}, entries classify as {recomputed}"
        )
    return report


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

STATUS_DIFFERS = "status-differs"
CLASSIFICATION_DIFFERS = "classification-differs"
OUTCOME_ONLY_IN = "outcome-only-in"
FREQUENCY_DIFFERS = "frequency-differs"

_KIND_ORDER = {
    STATUS_DIFFERS: 0,
    CLASSIFICATION_DIFFERS: 1,
    OUTCOME_ONLY_IN: 2,
    FREQUENCY_DIFFERS: 3,
}


@dataclass(frozen=True)
class Discrepancy:
    """One difference between two reports of the same test.

    ``frequency-differs`` findings are informational: they never gate
    comparison success, only the other kinds do.
    """

    kind: str
    outcome: Outcome | None = None
    side: str | None = None  # for outcome-only-in: "a" or "b"
    detail: str = ""

    @property
    def informational(self) -> bool:
        return self.kind == FREQUENCY_DIFFERS

    def __str__(self) -> str:
        parts = [self.kind]
        if self.side is not None:
            parts.append(f"[{self.side}]")
        if self.outcome is not None:
            parts.append("(" + ", ".join(str(v) for v in self.outcome) + ")")
        if self.detail:
            parts.append(f"- {self.detail}")
        return " ".join(parts)


def compare(a: RunReport, b: RunReport, *, freq_ratio: float = 100.0) -> list[Discrepancy]:
    """Differences between two runs of the same test, most severe first.

    Kinds: ``status-differs`` (overall statuses disagree),
    ``classification-differs`` (the embedded specs classify a common outcome
    differently), ``outcome-only-in`` (support difference), and the purely
    informational ``frequency-differs`` (common outcome whose observed
    frequencies differ by more than ``freq_ratio``).  The result for
    ``compare(b, a)`` is the mirror image.
    """
    if a.test_name != b.test_name:
        raise LitmusError(
            f"cannot compare reports of different tests: "
            f"{a.test_name!r} vs {b.test_name!r}"
        )
    if (
        a.arity is not None
        and b.arity is not None
        and a.arity != b.arity
    ):
        raise LitmusError(
            f"cannot compare reports with outcome arities {a.arity} and {b.arity}"
        )
    found: list[Discrepancy] = []
    if a.overall is not b.overall:
        found.append(
            Discrepancy(
                STATUS_DIFFERS,
                detail=f"a: {a.overall}, b: {b.overall}",
            )
        )
    in_a = {e.outcome: e for e in a.entries}
    in_b = {e.outcome: e for e in b.entries}
    for outcome in sorted(in_a.keys() - in_b.keys()):
        found.append(Discrepancy(OUTCOME_ONLY_IN, outcome, side="a"))
    for outcome in sorted(in_b.keys() - in_a.keys()):
        found.append(Discrepancy(OUTCOME_ONLY_IN, outcome, side="b"))
    for outcome in sorted(in_a.keys() & in_b.keys()):
        ea, eb = in_a[outcome], in_b[outcome]
        if ea.outcome_type is not eb.outcome_type:
            found.append(
                Discrepancy(
                    CLASSIFICATION_DIFFERS,
                    outcome,
                    detail=f"a: {ea.outcome_type}, b: {eb.outcome_type}",
                )
            )
        fa, fb = a.frequency_of(ea), b.frequency_of(eb)
        ratio = max(fa, fb) / min(fa, fb)
        if ratio > freq_ratio:
            found.append(
                Discrepancy(
                    FREQUENCY_DIFFERS,
                    outcome,
                    detail=f"a: {fa:.6g}, b: {fb:.6g} ({ratio:.3g}x)",
                )
            )
    found.sort(key=lambda d: (_KIND_ORDER[d.kind], d.outcome or ()))
    return found
