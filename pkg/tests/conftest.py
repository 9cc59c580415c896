from pathlib import Path

import pytest

from collectivity.cli import RunConfig, compute_cells
from collectivity.dynamics import PulseShape

GOLDEN = Path(__file__).parent / "golden"

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE = {}


def record(criterion: int, clause: str, ok: bool, detail: str = ""):
    ACCEPTANCE.setdefault(criterion, []).append((clause, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[n]
        ok = all(c[1] for c in clauses)
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}")
        for clause, c_ok, detail in clauses:
            tr.write_line(f"    [{'pass' if c_ok else 'FAIL'}] {clause}" + (f"  ({detail})" if detail else ""))


@pytest.fixture(scope="session")
def pulse():
    return PulseShape()


@pytest.fixture(scope="session")
def default_config():
    return RunConfig().validate()


@pytest.fixture(scope="session")
def default_sweep(default_config):
    """EnsembleResult per (delta0, gamma) in MHz for the full default grid."""
    return compute_cells(default_config)
