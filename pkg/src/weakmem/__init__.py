"""weakmem: stress-based litmus testing for weak-memory behaviors.

Define small concurrent litmus tests, stress-run them over large state
arrays to surface rare weak-memory outcomes, classify every observed outcome
against a per-test spec, and validate those specs against an exhaustive
SC/TSO outcome oracle.  See the README for a tour; the ``weakmem`` console
script exposes the same functionality from the shell.
"""

from importlib import metadata

from .builder import AtomicBlock, GuardedRead, LitmusTestBuilder, Read, Write
from .model import (
    AccessMode,
    ArityError,
    DuplicateTestError,
    LitmusError,
    LitmusTest,
    Outcome,
    OutcomeSpec,
    OutcomeType,
    SpecError,
    StateLayout,
    TestRegistry,
    TestState,
    classify,
    decode_outcome,
    encode_outcome,
    overall_status,
)
from .oracle import (
    AbstractProgram,
    MemoryModel,
    SpecMismatch,
    StateSpaceLimitError,
    enumerate_outcomes,
    validate_spec,
)
from .report import (
    Discrepancy,
    ReportEntry,
    RunReport,
    build_report,
    compare,
    format_table,
    from_json,
    to_json,
)
from .runner import (
    AffinityScheme,
    PinResult,
    RunParams,
    RunnerError,
    StateArray,
    merge_histograms,
    pin_thread,
    run_test,
)
from .suite import SuiteEntry, builtin_registry, builtin_suite, suite_entry

try:
    __version__ = metadata.version("weakmem")
except metadata.PackageNotFoundError:  # running from a source checkout
    __version__ = "0.1.0"

__all__ = [
    "__version__",
    "AbstractProgram",
    "AccessMode",
    "AffinityScheme",
    "ArityError",
    "AtomicBlock",
    "Discrepancy",
    "DuplicateTestError",
    "GuardedRead",
    "LitmusError",
    "LitmusTest",
    "LitmusTestBuilder",
    "MemoryModel",
    "Outcome",
    "OutcomeSpec",
    "OutcomeType",
    "PinResult",
    "Read",
    "ReportEntry",
    "RunParams",
    "RunReport",
    "RunnerError",
    "SpecError",
    "SpecMismatch",
    "StateArray",
    "StateLayout",
    "StateSpaceLimitError",
    "SuiteEntry",
    "TestRegistry",
    "TestState",
    "Write",
    "build_report",
    "builtin_registry",
    "builtin_suite",
    "classify",
    "compare",
    "decode_outcome",
    "encode_outcome",
    "enumerate_outcomes",
    "format_table",
    "from_json",
    "merge_histograms",
    "overall_status",
    "pin_thread",
    "run_test",
    "suite_entry",
    "to_json",
    "validate_spec",
]
