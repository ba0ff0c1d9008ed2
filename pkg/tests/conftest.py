import numpy as np
import pytest

from fdi_glrt.grid import MeasurementMatrix

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_matrix(rng, M, K):
    return MeasurementMatrix.from_H(rng.standard_normal((M, K)))


@pytest.fixture
def mm10x4(rng):
    return random_matrix(rng, 10, 4)


@pytest.fixture
def acceptance_report():
    def record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
