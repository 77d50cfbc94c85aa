import numpy as np
import pytest

from irs_rotations import harness

_LINES: list[str] = []


class Recorder:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def __call__(self, criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        print(line)
        _LINES.append(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fig1_cfg():
    return harness.load_config(None)


@pytest.fixture(scope="session")
def table_setup(fig1_cfg):
    """Covariance and gains of the default M=2, 8x2 IRS geometry."""
    return harness._setup(fig1_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
