import math
from pathlib import Path

import numpy as np
import pytest

from quasicycles.modelset import HullPoint, generate_patch, sample_hull
from quasicycles.scheme import TAU, preset
from quasicycles.spectrum import enumerate_spectrum
from quasicycles.window import Window, default_window

SQRT5 = math.sqrt(5.0)
CONFIGS_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="session")
def z_scheme():
    return preset("z-fixture")


@pytest.fixture(scope="session")
def fib_scheme():
    return preset("fibonacci")


@pytest.fixture(scope="session")
def fib_window():
    return Window(interval=(0.0, TAU))


@pytest.fixture(scope="session")
def z_patch(z_scheme):
    w = default_window("z-fixture")
    return generate_patch(z_scheme, w, sample_hull(z_scheme, w, seed=7, R_check=1000), 1000)


@pytest.fixture(scope="session")
def z_table(z_scheme):
    return enumerate_spectrum(z_scheme, default_window("z-fixture"), 12)


@pytest.fixture(scope="session")
def fib_patch(fib_scheme, fib_window):
    hull = sample_hull(fib_scheme, fib_window, seed=7, R_check=1e4)
    return generate_patch(fib_scheme, fib_window, hull, 1e4)


@pytest.fixture(scope="session")
def fib_table(fib_scheme, fib_window):
    return enumerate_spectrum(fib_scheme, fib_window, 10)


@pytest.fixture(scope="session")
def fib_small_patch(fib_scheme, fib_window):
    return generate_patch(fib_scheme, fib_window, HullPoint.at(0.123, 0.456), 400)


def fib_sign_oracle(k_star):
    """a on the Fibonacci chain with window [0, tau]: product of sign(sinc(tau k*))."""
    return float(np.prod(np.sign(np.sinc(TAU * np.asarray(k_star)))))


ACCEPTANCE: dict = {}


def record_criterion(number, title, ok, detail):
    """Store one acceptance line; printed in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
