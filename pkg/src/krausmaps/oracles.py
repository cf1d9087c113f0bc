"""Classical ground truth used to cross-check the noncommutative deciders."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from .cp_map import KrausFamily
from .exact_linalg import Mat
from .positivity import NotClassicalError, is_classical
from .reduction import Cnf, satisfies

__all__ = [
    "StochasticMatrix",
    "Digraph",
    "sat_brute_force",
    "stochastic_embed",
    "digraph",
    "strongly_connected",
    "period",
    "classical_power_positivity",
    "entrywise_positive",
    "classical_pattern",
    "SAT_CAP",
]

SAT_CAP = 24


def sat_brute_force(cnf: Cnf, cap: int = SAT_CAP) -> tuple[bool, tuple[int, ...] | None]:
    """Try all assignments, ``+1`` before ``-1`` in each position from variable 1."""
    if cnf.num_vars > cap:
        raise ValueError(f"{cnf.num_vars} variables exceed the brute-force cap {cap}")
    for a in itertools.product((1, -1), repeat=cnf.num_vars):
        if satisfies(cnf, a):
            return True, a
    return False, None


@dataclass(frozen=True)
class StochasticMatrix:
    """Column-stochastic matrix with exact rational entries."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(Fraction(v) for v in r) for r in rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("stochastic matrix must be square and nonempty")
        if any(v < 0 for r in rows for v in r):
            raise ValueError("entries must be nonnegative")
        for j in range(n):
            s = sum(rows[i][j] for i in range(n))
            if s != 1:
                raise ValueError(f"column {j} sums to {s}, not 1")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: frozenset

    def successors(self) -> list[list[int]]:
        out = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            out[u].append(v)
        return out


def stochastic_embed(p: StochasticMatrix) -> KrausFamily:
    """Weighted matrix-unit family ``{(E_ij, P_ij) : P_ij > 0}``."""
    n = p.n
    ops = [(Mat.unit(n, i, j), p[i, j]) for i in range(n) for j in range(n) if p[i, j] > 0]
    return KrausFamily(ops, n=n)


def digraph(p) -> Digraph:
    """Edge ``(i, j)`` for every positive entry of a nonnegative matrix."""
    rows = p.entries if isinstance(p, StochasticMatrix) else p
    n = len(rows)
    return Digraph(n, frozenset((i, j) for i in range(n) for j in range(n) if rows[i][j] > 0))


def _reach(n: int, succ: list[list[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def strongly_connected(g: Digraph) -> bool:
    if g.n == 0:
        return True
    succ = g.successors()
    pred = Digraph(g.n, frozenset((v, u) for u, v in g.edges)).successors()
    return len(_reach(g.n, succ, 0)) == g.n and len(_reach(g.n, pred, 0)) == g.n


def period(g: Digraph) -> int:
    """Gcd of all cycle lengths, from BFS levels of a strongly connected graph."""
    if not strongly_connected(g):
        raise ValueError("period is defined for strongly connected graphs only")
    succ = g.successors()
    level = {0: 0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
    d = 0
    for u, v in g.edges:
        d = gcd(d, abs(level[u] + 1 - level[v]))
    return d


def _matmul(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n) if a[i][k] and b[k][j]), Fraction(0))
             for j in range(n)] for i in range(n)]


def entrywise_positive(p) -> bool:
    rows = p.entries if isinstance(p, StochasticMatrix) else p
    return all(v > 0 for r in rows for v in r)


def classical_power_positivity(p) -> bool:
    """Whether ``P^(n^2 - 2n + 2)`` is entrywise positive (primitivity test)."""
    rows = [list(r) for r in (p.entries if isinstance(p, StochasticMatrix) else p)]
    n = len(rows)
    e = n * n - 2 * n + 2
    result = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    base = rows
    while e:
        if e & 1:
            result = _matmul(result, base)
        e >>= 1
        if e:
            base = _matmul(base, base)
    return entrywise_positive(result)


def classical_pattern(psi: KrausFamily) -> list[list[Fraction]]:
    """Nonnegative matrix induced by a family of scaled matrix units.

    Entry ``(i, j)`` is ``sum w |c|^2`` over operators ``c E_ij``, so that
    ``apply(psi, diag(v)) = diag(P v)``.
    """
    if not is_classical(psi):
        raise NotClassicalError("family is not made of scaled matrix units")
    n = psi.n
    out = [[Fraction(0)] * n for _ in range(n)]
    for v, w in psi.ops:
        for i, j, c in v.nonzeros():
            out[i][j] += w * c.abs2()
    return out
