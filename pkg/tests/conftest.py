import numpy as np
import pytest

from monopole_qm import ConstantZ, LinearZ, MomentState, Params

ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda n: int(n.split("_")[1][2:])):
        mark = "PASS" if ACCEPTANCE_RESULTS[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {name}")


@pytest.fixture
def unit():
    return Params()


@pytest.fixture
def unit_const():
    return Params(field=ConstantZ(1.0))


def random_state(rng, scale=0.1, mean_scale=1.0):
    """Random mean vector and positive semidefinite moment matrix."""
    mean = rng.uniform(-mean_scale, mean_scale, 6)
    b = rng.normal(size=(6, 6))
    return MomentState.from_matrix(mean, scale * b @ b.T)


__all__ = ["random_state", "LinearZ", "ConstantZ", "np"]
