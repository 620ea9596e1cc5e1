from pathlib import Path

import numpy as np
import pytest

from shlight.products import build_tripling_tensor
from shlight.sh import fibonacci_sphere

DATA = Path(__file__).parent / "data"

ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def lattice():
    return fibonacci_sphere(64000)


@pytest.fixture(scope="session")
def tensor():
    return build_tripling_tensor()


def random_rotation(rng):
    q = rng.normal(size=4)
    a, b, c, d = q / np.linalg.norm(q)
    return np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ])


def random_directions(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {name}: {detail}")
