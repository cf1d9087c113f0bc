from __future__ import annotations

import random
from fractions import Fraction

import pytest

from krausmaps.cp_map import KrausFamily
from krausmaps.exact_linalg import GaussianRational, Mat

GRID = [Fraction(k, 4) for k in range(-4, 5)]


def E(n: int, i: int, j: int, value=1) -> Mat:
    return Mat.unit(n, i, j, value)


def rand_scalar(rng: random.Random, complex_ok: bool = True) -> GaussianRational:
    re = rng.choice(GRID)
    im = rng.choice(GRID) if complex_ok and rng.random() < 0.5 else 0
    return GaussianRational(re, im)


def rand_mat(rng: random.Random, n: int, complex_ok: bool = True, density: float = 1.0) -> Mat:
    return Mat(n, n, [rand_scalar(rng, complex_ok) if rng.random() < density else 0 for _ in range(n * n)])


def rand_family(rng: random.Random, n: int, m: int, complex_ok: bool = True) -> KrausFamily:
    mats = [rand_mat(rng, n, complex_ok) for _ in range(m)]
    weights = [Fraction(rng.randint(1, 4), rng.randint(1, 3)) for _ in range(m)]
    return KrausFamily.from_matrices(mats, weights)


def rand_stochastic_rows(rng: random.Random, n: int) -> list[list[Fraction]]:
    """Column-stochastic matrix on a small grid, each entry zero with probability 1/2."""
    cols = []
    for _ in range(n):
        raw = [0 if rng.random() < 0.5 else rng.randint(1, 3) for _ in range(n)]
        if not any(raw):
            raw[rng.randrange(n)] = 1
        s = sum(raw)
        cols.append([Fraction(v, s) for v in raw])
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def swap_family() -> KrausFamily:
    return KrausFamily.from_matrices([E(2, 0, 1), E(2, 1, 0)])


def identity_family(n: int = 2) -> KrausFamily:
    return KrausFamily.from_matrices([Mat.identity(n)])


def depolarizer_family() -> KrausFamily:
    return KrausFamily([(E(2, i, j), Fraction(1, 2)) for i in range(2) for j in range(2)])


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20261016)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
