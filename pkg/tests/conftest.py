"""Shared pytest wiring: print the acceptance-criteria summary at the end."""

from helpers import CRITERION_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
