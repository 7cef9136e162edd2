import numpy as np
import pytest

from stripbif.continuation import ContinuationConfig, trace_branch
from stripbif.domain import make_strip

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def branch00():
    """The (m, ell) = (0, 0) branch at the default configuration."""
    return trace_branch(make_strip(0, 0), ContinuationConfig())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
