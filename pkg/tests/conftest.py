import numpy as np
import pytest

from pagecurve.davies import BathSpec, build_generator
from pagecurve.opcore import ladder, pauli

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0].rstrip("ab")), k)):
        ok, text = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {text}")


def random_hermitian(rng, d, scale=1.0):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (X + X.conj().T) / 2


def qubit_generator(temperature=0.0, gamma=0.01, eps=1.0):
    return build_generator(0.5 * eps * pauli("z"), pauli("x"), BathSpec(temperature, gamma))


def oscillator_generator(n_max, temperature=0.0, gamma=0.01, omega0=1.0):
    a = ladder(n_max, "lower")
    return build_generator(omega0 * ladder(n_max, "number"), a + a.conj().T,
                           BathSpec(temperature, gamma))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
