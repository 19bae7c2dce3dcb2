import numpy as np
import pytest

from cdqkd.operators import reference_instance

ENCODINGS = ("single_photon", "dephasing", "rotation", "general4")

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> bool:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=ENCODINGS)
def encoding_name(request):
    return request.param


@pytest.fixture
def opset(encoding_name):
    return reference_instance(encoding_name)


def random_unitary(rng, dim):
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / 2**0.5
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
