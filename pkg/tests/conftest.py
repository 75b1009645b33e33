"""Replay the acceptance suite's PASS/FAIL lines after the run.

Capture normally swallows stdout from passing tests, so the one-line
verdicts printed by tests/test_acceptance.py would only show up under
``pytest -s``.  This hook pulls them back out of the captured output and
prints them in a summary section at the end of every run.
"""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = set()
    for reports in terminalreporter.stats.values():
        for report in reports:
            if getattr(report, "when", None) != "call":
                continue
            for line in getattr(report, "capstdout", "").splitlines():
                if line.startswith("[criterion"):
                    lines.add(line)
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
