"""Completely positive maps in Kraus form and their polynomial-time deciders.

A :class:`KrausFamily` stores weighted operators ``(V_i, w_i)`` and
represents ``X -> sum_i w_i V_i X V_i*``.  A positive integer weight ``w``
means the same thing as ``w`` unit-weight copies of the operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exact_linalg import (
    ZERO,
    DimensionError,
    GaussianRational,
    Mat,
    MatrixSubspace,
    _Echelon,
    _sparse_vec,
    extract_basis,
    weighted_gram,
)

__all__ = [
    "KrausFamily",
    "PrimitivityReport",
    "FloatKrausFamily",
    "NotIrreducibleError",
    "ConvergenceError",
    "apply",
    "adjoint_apply",
    "verify_unital",
    "algebra_closure",
    "bounded_product_span",
    "is_irreducible",
    "product_span",
    "is_primitive",
    "wielandt_bound",
    "transfer_matrix",
    "normalize_to_kraus",
    "expand_weights",
    "expanded_count",
]


class NotIrreducibleError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def _weight(w) -> Fraction:
    if isinstance(w, GaussianRational):
        if not w.is_real():
            raise ValueError("weights must be real")
        w = w.re
    if isinstance(w, float):
        raise TypeError("weights must be exact rationals")
    w = Fraction(w)
    if w <= 0:
        raise ValueError(f"weights must be strictly positive, got {w}")
    return w


class KrausFamily:
    """Weighted family of ``n x n`` operators.

    ``unital_checked`` is ``None`` until :func:`verify_unital` runs, then
    records its answer.  ``provenance`` is set by the reduction module to
    the :class:`~krausmaps.reduction.ReducedInstance` the family came from.
    """

    def __init__(self, ops: Iterable[tuple[Mat, object]], n: int | None = None, provenance=None):
        ops = [(m, _weight(w)) for m, w in ops]
        if n is None:
            if not ops:
                raise ValueError("empty family needs an explicit n")
            n = ops[0][0].rows
        for m, _ in ops:
            if m.shape != (n, n):
                raise DimensionError(f"operator of shape {m.shape} in a family of {n}x{n} operators")
        self.n = n
        self.ops: tuple[tuple[Mat, Fraction], ...] = tuple(ops)
        self.unital_checked: bool | None = None
        self.provenance = provenance

    @classmethod
    def from_matrices(cls, mats: Sequence[Mat], weights: Sequence | None = None, **kw) -> "KrausFamily":
        if weights is None:
            weights = [1] * len(mats)
        if len(weights) != len(mats):
            raise ValueError("one weight per operator required")
        return cls(zip(mats, weights), **kw)

    @property
    def matrices(self) -> list[Mat]:
        return [m for m, _ in self.ops]

    @property
    def weights(self) -> list[Fraction]:
        return [w for _, w in self.ops]

    def __len__(self) -> int:
        return len(self.ops)

    def distinct_count(self) -> int:
        return len(set(self.matrices))

    def __eq__(self, other) -> bool:
        if not isinstance(other, KrausFamily):
            return NotImplemented
        return self.n == other.n and self.ops == other.ops

    def __hash__(self) -> int:
        return hash((self.n, self.ops))

    def __repr__(self) -> str:
        return f"KrausFamily(n={self.n}, m={len(self.ops)})"


def _check_square(psi: KrausFamily, x: Mat) -> None:
    if x.shape != (psi.n, psi.n):
        raise DimensionError(f"input of shape {x.shape} for a map on {psi.n}x{psi.n} matrices")


def apply(psi: KrausFamily, x: Mat) -> Mat:
    """``sum_i w_i V_i X V_i*``."""
    _check_square(psi, x)
    out = Mat.zeros(psi.n)
    for v, w in psi.ops:
        out = out + (v @ x @ v.adjoint()).scale(w)
    return out


def adjoint_apply(psi: KrausFamily, x: Mat) -> Mat:
    """``sum_i w_i V_i* X V_i``, the Hilbert-Schmidt adjoint of :func:`apply`."""
    _check_square(psi, x)
    out = Mat.zeros(psi.n)
    for v, w in psi.ops:
        out = out + (v.adjoint() @ x @ v).scale(w)
    return out


def verify_unital(psi: KrausFamily) -> bool:
    """Exact test of ``sum_i w_i V_i* V_i = I``; records the result on ``psi``."""
    psi.unital_checked = weighted_gram(psi.ops, psi.n) == Mat.identity(psi.n)
    return psi.unital_checked


def _require_ops(psi: KrausFamily) -> None:
    if not psi.ops:
        raise ValueError("family has no operators")


def _grow(psi: KrausFamily, ech: _Echelon, frontier: list[Mat]) -> list[Mat]:
    added = []
    for m in frontier:
        for v, _ in psi.ops:
            prod = v @ m
            if ech.insert(_sparse_vec(prod)):
                added.append(prod)
    return added


def _first_span(psi: KrausFamily) -> tuple[_Echelon, list[Mat]]:
    ech = _Echelon(psi.n * psi.n)
    kept = [v for v, _ in psi.ops if ech.insert(_sparse_vec(v))]
    return ech, kept


def algebra_closure(psi: KrausFamily) -> tuple[MatrixSubspace, int]:
    """Algebra generated by the operators, and the first ``p`` with ``D_{p+1} = D_p``.

    ``D_k`` is the span of products of at most ``k`` operators.  Only the
    elements added in the previous round are multiplied again, since
    ``D_{k+1} = D_k + span{V_i M : M new in D_k}``.
    """
    _require_ops(psi)
    ech, basis = _first_span(psi)
    frontier = list(basis)
    p = 1
    while True:
        added = _grow(psi, ech, frontier)
        if not added:
            break
        basis.extend(added)
        frontier = added
        p += 1
    return MatrixSubspace._from_parts(psi.n, tuple(basis), ech), p


def bounded_product_span(psi: KrausFamily, k: int) -> MatrixSubspace:
    """``D_k``: span of all products of between 1 and ``k`` operators."""
    if k < 1:
        raise ValueError("k must be at least 1")
    _require_ops(psi)
    ech, basis = _first_span(psi)
    frontier = list(basis)
    for _ in range(k - 1):
        if not frontier:
            break
        frontier = _grow(psi, ech, frontier)
        basis.extend(frontier)
    return MatrixSubspace._from_parts(psi.n, tuple(basis), ech)


def is_irreducible(psi: KrausFamily) -> bool:
    space, _ = algebra_closure(psi)
    return space.is_full()


def _next_product_space(psi: KrausFamily, space: MatrixSubspace) -> MatrixSubspace:
    return extract_basis((v @ m for m in space.basis for v, _ in psi.ops), n=psi.n)


def product_span(psi: KrausFamily, k: int) -> MatrixSubspace:
    """``S_k``: span of all products of exactly ``k`` operators."""
    if k < 1:
        raise ValueError("k must be at least 1")
    _require_ops(psi)
    space = extract_basis(psi.matrices, n=psi.n)
    for _ in range(k - 1):
        space = _next_product_space(psi, space)
    return space


def wielandt_bound(n: int, m: int) -> int:
    """``(n^2 - m + 1) n^2``, clamped below at ``n^2``."""
    return max((n * n - m + 1) * n * n, n * n)


@dataclass
class PrimitivityReport:
    irreducible: bool
    primitive: bool
    closure_depth: int | None
    wielandt_q: int | None
    bound: int
    m: int
    steps: int = 0
    cycle: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        if self.primitive and not self.irreducible:
            raise ValueError("a primitive map is irreducible")
        if self.wielandt_q is not None and self.wielandt_q > self.bound:
            raise ValueError("wielandt_q exceeds the bound")


def is_primitive(psi: KrausFamily) -> PrimitivityReport:
    """Decide primitivity by watching ``S_k`` become the full matrix space.

    ``S_{k+1}`` depends only on ``S_k``, so once a space repeats the
    sequence is periodic and can never become full; the loop stops there
    instead of running to the bound.  ``cycle`` records ``(first, repeat)``.
    """
    _require_ops(psi)
    n2 = psi.n * psi.n
    m = psi.distinct_count()
    bound = wielandt_bound(psi.n, m)
    closure, p = algebra_closure(psi)
    if not closure.is_full():
        return PrimitivityReport(False, False, p, None, bound, m)
    seen: dict[tuple, int] = {}
    space = extract_basis(psi.matrices, n=psi.n)
    for k in range(1, bound + 1):
        if space.dim == n2:
            return PrimitivityReport(True, True, p, k, bound, m, steps=k)
        key = space.key()
        if key in seen:
            return PrimitivityReport(True, False, p, None, bound, m, steps=k, cycle=(seen[key], k))
        seen[key] = k
        space = _next_product_space(psi, space)
    return PrimitivityReport(True, False, p, None, bound, m, steps=bound)


def transfer_matrix(psi: KrausFamily) -> Mat:
    """Matrix ``T`` with ``vec(apply(psi, X)) = T vec(X)`` for row-major ``vec``.

    ``T = sum_i w_i V_i (x) conj(V_i)``.
    """
    n = psi.n
    n2 = n * n
    out = [ZERO] * (n2 * n2)
    for v, w in psi.ops:
        nz = v.nonzeros()
        for a, c, x in nz:
            x = x * w
            for b, d, y in nz:
                idx = (a * n + b) * n2 + (c * n + d)
                out[idx] = out[idx] + x * y.conjugate()
    return Mat._trusted(n2, n2, tuple(out))


@dataclass
class FloatKrausFamily:
    """Floating-point family produced by :func:`normalize_to_kraus`.

    ``rho`` is the spectral radius of the input map and ``fixed_point`` the
    positive definite ``A`` with ``sum w V* A V = rho A``, scaled to unit trace.
    """

    n: int
    matrices: list[np.ndarray]
    weights: np.ndarray
    rho: float
    fixed_point: np.ndarray
    iterations: int

    def unital_residual(self) -> float:
        total = sum(w * m.conj().T @ m for m, w in zip(self.matrices, self.weights))
        return float(np.max(np.abs(total - np.eye(self.n))))


def normalize_to_kraus(
    psi: KrausFamily, tolerance: float = 1e-10, max_iter: int = 100_000
) -> FloatKrausFamily:
    """Similarity-rescale an irreducible family into a trace-preserving one.

    Finds the Perron eigenpair ``(rho, A)`` of the adjoint map by power
    iteration from ``A = I`` with trace normalization, and returns
    ``W_i = rho^{-1/2} A^{1/2} V_i A^{-1/2}``.  The iteration runs on
    ``X -> psi*(X) + s X`` with ``s = ||psi*(I)||``; the shift leaves the
    eigenvector unchanged and removes the oscillation of periodic maps.
    """
    if not is_irreducible(psi):
        raise NotIrreducibleError("normalize_to_kraus requires an irreducible family")
    n = psi.n
    mats = [v.to_complex() for v in psi.matrices]
    weights = np.array([float(w) for w in psi.weights])

    def adj(x):
        return sum(w * m.conj().T @ x @ m for m, w in zip(mats, weights))

    shift = float(np.linalg.norm(adj(np.eye(n)), 2))
    inner_tol = min(tolerance * 1e-3, 1e-12)
    a = np.eye(n, dtype=complex) / n
    for it in range(1, max_iter + 1):
        nxt = adj(a) + shift * a
        nxt = (nxt + nxt.conj().T) / 2
        nxt /= np.trace(nxt).real
        delta = np.max(np.abs(nxt - a))
        a = nxt
        if delta < inner_tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
    rho = float(np.trace(adj(a)).real / np.trace(a).real)
    evals, evecs = np.linalg.eigh(a)
    if evals.min() <= 0:
        raise ConvergenceError("Perron eigenvector is not positive definite")
    sqrt_a = (evecs * np.sqrt(evals)) @ evecs.conj().T
    inv_sqrt_a = (evecs / np.sqrt(evals)) @ evecs.conj().T
    out = [sqrt_a @ m @ inv_sqrt_a / np.sqrt(rho) for m in mats]
    result = FloatKrausFamily(n, out, weights, rho, a, it)
    residual = result.unital_residual()
    if residual > tolerance:
        raise ConvergenceError(f"normalized family misses unitality by {residual:.3e}")
    return result


def expanded_count(psi: KrausFamily) -> int:
    """Number of unit-weight operators :func:`expand_weights` would produce."""
    total = 0
    for _, w in psi.ops:
        if w.denominator != 1:
            raise ValueError(f"weight {w} is not an integer")
        total += w.numerator
    return total


def expand_weights(psi: KrausFamily) -> KrausFamily:
    """Replace each integer-weighted operator by ``weight`` unit-weight copies."""
    expanded_count(psi)
    ops = [(v, 1) for v, w in psi.ops for _ in range(w.numerator)]
    out = KrausFamily(ops, n=psi.n, provenance=psi.provenance)
    out.unital_checked = psi.unital_checked
    return out
