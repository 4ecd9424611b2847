import numpy as np
import pytest

from jpegcompat.feasibility import add_verdict_listener

import oracles

AUDIT = {"feasible": 0, "failed": []}
# one line per acceptance criterion, echoed in the terminal summary
CRITERIA: list = []


def _audit(system, verdict):
    if not verdict.feasible:
        return
    AUDIT["feasible"] += 1
    block = system.block
    x = system.rounded - verdict.k
    ok = x.min() >= 0 and x.max() <= 255
    if ok:
        c2 = oracles.compress(x, (block.shape.rows, block.shape.cols), block.quant.values)
        ok = np.array_equal(c2, block.coeffs)
    if not ok:
        AUDIT["failed"].append((block.coeffs.tolist(), verdict.k.tolist()))


add_verdict_listener(_audit)


def pytest_collection_modifyitems(config, items):
    # the acceptance suite runs last so its audit sees every other solve
    items.sort(key=lambda it: it.nodeid.startswith("tests/test_acceptance.py"))


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
    n, bad = AUDIT["feasible"], len(AUDIT["failed"])
    terminalreporter.write_line(
        f"feasible-verdict audit: {n} verdicts re-verified, {bad} failures")


def pytest_sessionfinish(session, exitstatus):
    if AUDIT["failed"]:
        session.exitstatus = 1


@pytest.fixture
def audit():
    return AUDIT
