"""Shared fixtures and helpers for the condisp test suite.

Heavy, acceptance-scale computations are cached at module scope inside
``test_acceptance.py``; the fixtures here are deliberately lightweight so
unit-test modules stay fast.
"""

from __future__ import annotations

import numpy as np
import pytest

from condisp import DriveParams, HilbertLayout, SystemParams


@pytest.fixture(scope="session")
def small_layout() -> HilbertLayout:
    """Two qubits with a small resonator cutoff (fast unit tests)."""
    return HilbertLayout(n_qubits=2, fock_dim=10)


@pytest.fixture(scope="session")
def single_layout() -> HilbertLayout:
    """One qubit with a small resonator cutoff."""
    return HilbertLayout(n_qubits=1, fock_dim=10)


@pytest.fixture(scope="session")
def std_params() -> SystemParams:
    """Reference operating point: qubit 3x the resonator, moderate coupling."""
    return SystemParams(omega_q=3.0, g=0.2)


@pytest.fixture(scope="session")
def std_drive(std_params: SystemParams) -> DriveParams:
    """Opposite-sign modulation indices at the carrier-suppression point."""
    return DriveParams.from_alpha((1.20242, -1.20242), std_params.omega_q)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260814)


# --- acceptance reporting -------------------------------------------------
# test_acceptance.py appends one "[criterion N] PASS/FAIL ..." line per
# criterion; pytest captures stdout, so the lines are replayed in the
# terminal summary where they are always visible.

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report() -> list[str]:
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
