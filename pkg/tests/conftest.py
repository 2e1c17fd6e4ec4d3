import itertools
import sys

import numpy as np
import pytest

from attrmean import FinitePopulation


def random_population(rng: np.random.Generator, N: int) -> FinitePopulation:
    """A non-degenerate population whose y depends on both attributes."""
    while True:
        phi1 = rng.integers(0, 2, N)
        phi2 = np.where(rng.random(N) < 0.7, phi1, rng.integers(0, 2, N))
        if 0 < phi1.sum() < N and 0 < phi2.sum() < N and not np.array_equal(phi1, phi2):
            break
    y = 10 + 3 * phi1 + 2 * phi2 + rng.normal(0, 1.5, N)
    return FinitePopulation(y, phi1, phi2)


def brute_force_samples(N: int, n: int, n_prime: int | None = None):
    """Every equally likely (second, first) index pair, by plain iteration."""
    if n_prime is None:
        for s in itertools.combinations(range(N), n):
            yield list(s), None
        return
    for first in itertools.combinations(range(N), n_prime):
        for s in itertools.combinations(first, n):
            yield list(s), list(first)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def small_pop():
    return FinitePopulation(
        np.array([3.0, 5.5, 4.0, 9.0, 7.5, 6.0, 12.0]),
        np.array([0, 0, 1, 1, 1, 0, 1]),
        np.array([0, 1, 0, 1, 1, 0, 1]),
    )


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
