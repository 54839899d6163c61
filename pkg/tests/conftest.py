import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0 + 0j, -1.0])
I2 = np.eye(2, dtype=complex)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def jordan_qubit_channel(a=0.3, b=0.2):
    """Unital qubit channel whose Bloch matrix has a 2x2 Jordan block (not diagonalizable)."""
    from disentangle.channels import Superoperator, vec

    bloch = np.array([[a, b, 0], [0, a, 0], [0, 0, a]])
    paulis = [I2, SX, SY, SZ]
    images = [I2] + [sum(bloch[i, j] * paulis[i + 1] for i in range(3)) for j in range(3)]
    s = sum(np.outer(vec(img), vec(p).conj()) for img, p in zip(images, paulis)) / 2
    return Superoperator(s, 2).to_kraus()


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary hook prints them in order."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _CRITERIA[number] = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {detail}"
        print(_CRITERIA[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
