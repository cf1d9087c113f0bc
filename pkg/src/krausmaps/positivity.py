"""Strict positivity of completely positive maps.

A map fails to be strictly positive exactly when some nonzero pair
``(x, y)`` satisfies ``x* V_i y = 0`` for every operator.  Such a pair is
a :class:`BilinearWitness` and is always verified in exact arithmetic.

Deciders:

* ``n <= 2``: complete, via binary quadratic forms and a polynomial GCD.
* classical families (every operator a multiple of a matrix unit): complete.
* families built by :mod:`krausmaps.reduction`: complete, via SAT enumeration.
* anything else: multi-start numeric search that can disprove strict
  positivity with an exact witness but never certifies it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cp_map import KrausFamily
from .exact_linalg import (
    ONE,
    ZERO,
    DimensionError,
    GaussianRational,
    Mat,
    as_gaussian,
    gaussian_sqrt,
    nullspace,
)

__all__ = [
    "Status",
    "BilinearWitness",
    "PositivityVerdict",
    "verify_witness",
    "witness_residuals",
    "annihilating_vector",
    "check_exact_small",
    "check_classical",
    "check_numeric",
    "check",
    "is_classical",
    "NotClassicalError",
    "DEFAULT_STARTS",
    "DEFAULT_SEED",
    "DEFAULT_TOL",
]

DEFAULT_STARTS = 64
DEFAULT_SEED = 0
DEFAULT_TOL = 1e-9

# continued-fraction denominator caps tried in order
_RATIONALIZE_CAPS = (10**2, 10**4, 10**6)


class Status(str, enum.Enum):
    STRICTLY_POSITIVE = "STRICTLY_POSITIVE"
    NOT_STRICTLY_POSITIVE = "NOT_STRICTLY_POSITIVE"
    UNKNOWN = "UNKNOWN"


class NotClassicalError(ValueError):
    pass


@dataclass(frozen=True)
class BilinearWitness:
    """Nonzero vectors ``x, y`` meant to satisfy ``x* V_i y = 0`` for all ``i``."""

    x: tuple[GaussianRational, ...]
    y: tuple[GaussianRational, ...]

    def __init__(self, x: Sequence, y: Sequence):
        x = tuple(as_gaussian(v) for v in x)
        y = tuple(as_gaussian(v) for v in y)
        if len(x) != len(y):
            raise DimensionError("witness vectors differ in length")
        if not any(x) or not any(y):
            raise ValueError("witness vectors must be nonzero")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.x)

    def scaled(self, a, b) -> "BilinearWitness":
        a, b = as_gaussian(a), as_gaussian(b)
        return BilinearWitness([a * v for v in self.x], [b * v for v in self.y])


@dataclass
class PositivityVerdict:
    status: Status
    method: str
    witness: BilinearWitness | None = None
    numeric_margin: float | None = None
    irrational_witness: bool = False

    @property
    def strictly_positive(self) -> bool | None:
        if self.status is Status.UNKNOWN:
            return None
        return self.status is Status.STRICTLY_POSITIVE


def _bilinear(v: Mat, x: Sequence[GaussianRational], y: Sequence[GaussianRational]) -> GaussianRational:
    total = ZERO
    for i, j, a in v.nonzeros():
        xi, yj = x[i], y[j]
        if xi and yj:
            total = total + xi.conjugate() * a * yj
    return total


def witness_residuals(psi: KrausFamily, w: BilinearWitness) -> list[tuple[int, GaussianRational]]:
    """``(index, x* V_i y)`` for every operator where the form does not vanish."""
    if w.n != psi.n:
        raise DimensionError(f"witness of length {w.n} for {psi.n}x{psi.n} operators")
    out = []
    for idx, (v, _) in enumerate(psi.ops):
        r = _bilinear(v, w.x, w.y)
        if r:
            out.append((idx, r))
    return out


def verify_witness(psi: KrausFamily, w: BilinearWitness) -> bool:
    """Exact check that ``x* V_i y = 0`` for every listed operator."""
    if w.n != psi.n:
        raise DimensionError(f"witness of length {w.n} for {psi.n}x{psi.n} operators")
    return all(not _bilinear(v, w.x, w.y) for v, _ in psi.ops)


def _mat_vec(v: Mat, y: Sequence[GaussianRational]) -> list[GaussianRational]:
    out = [ZERO] * v.rows
    for i, j, a in v.nonzeros():
        if y[j]:
            out[i] = out[i] + a * y[j]
    return out


def annihilating_vector(psi: KrausFamily, y: Sequence) -> tuple[GaussianRational, ...] | None:
    """A nonzero ``x`` with ``x* V_i y = 0`` for all ``i``, or None.

    Such ``x`` exists iff the columns ``V_i y`` fail to span C^n.
    """
    y = [as_gaussian(v) for v in y]
    # x* c = 0  <=>  sum_k conj(c_k) x_k = 0
    rows = [[c.conjugate() for c in _mat_vec(v, y)] for v, _ in psi.ops]
    null = nullspace(rows, width=psi.n)
    return null[0] if null else None


def _witness_for(psi: KrausFamily, y: Sequence) -> BilinearWitness | None:
    x = annihilating_vector(psi, y)
    if x is None:
        return None
    w = BilinearWitness(x, y)
    return w if verify_witness(psi, w) else None


# -- polynomials over Q(i), coefficient lists low degree first ---------------

def _trim(p: list[GaussianRational]) -> list[GaussianRational]:
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def _poly_rem(a: list[GaussianRational], b: list[GaussianRational]) -> list[GaussianRational]:
    a = _trim(a)
    lead_inv = b[-1].inverse()
    while len(a) >= len(b):
        c = a[-1] * lead_inv
        shift = len(a) - len(b)
        for k, coef in enumerate(b):
            a[shift + k] = a[shift + k] - c * coef
        a = _trim(a)
    return a


def _poly_gcd(a: list[GaussianRational], b: list[GaussianRational]) -> list[GaussianRational]:
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _poly_rem(a, b)
    if not a:
        return a
    inv = a[-1].inverse()
    return [c * inv for c in a]


def _roots_in_field(p: list[GaussianRational]) -> list[GaussianRational]:
    """Roots of a monic polynomial of degree 1 or 2 that lie in Q(i)."""
    if len(p) == 2:
        return [-p[0]]
    if len(p) == 3:
        c, b = p[0], p[1]
        disc = b * b - c * 4
        s = gaussian_sqrt(disc)
        if s is None:
            return []
        return [(-b + s) / 2, (-b - s) / 2]
    return []


def check_exact_small(psi: KrausFamily) -> PositivityVerdict:
    """Complete exact decision for ``n <= 2``.

    For ``n = 2`` the map is not strictly positive iff every 2x2 minor
    ``det[V_i y | V_j y]`` vanishes at a common ``y != 0``.  The minors are
    binary quadratic forms; a common root at ``y = (1, 0)`` is checked
    directly and finite roots ``y = (t, 1)`` through the GCD in ``t``.
    """
    n = psi.n
    if n > 2:
        raise ValueError(f"check_exact_small handles n <= 2, got n = {n}")
    method = f"exact-n{n}"
    if n == 1:
        if any(not v.is_zero() for v in psi.matrices):
            return PositivityVerdict(Status.STRICTLY_POSITIVE, method)
        return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, method, BilinearWitness([ONE], [ONE]))

    coeffs = []
    mats = psi.matrices
    for i in range(len(mats)):
        a, b, c, d = mats[i].entries
        for j in range(i + 1, len(mats)):
            a2, b2, c2, d2 = mats[j].entries
            # det = alpha y1^2 + beta y1 y2 + gamma y2^2
            alpha = a * c2 - c * a2
            beta = a * d2 + b * c2 - c * b2 - d * a2
            gamma = b * d2 - d * b2
            if alpha or beta or gamma:
                coeffs.append((alpha, beta, gamma))

    e1 = (ONE, ZERO)
    if not coeffs:
        return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, method, _witness_for(psi, e1))
    if all(not alpha for alpha, _, _ in coeffs):
        return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, method, _witness_for(psi, e1))

    g: list[GaussianRational] = []
    for alpha, beta, gamma in coeffs:
        g = _poly_gcd(g, [gamma, beta, alpha]) if g else _poly_gcd([gamma, beta, alpha], [])
        if len(g) == 1:
            return PositivityVerdict(Status.STRICTLY_POSITIVE, method)
    for t in _roots_in_field(g):
        w = _witness_for(psi, (t, ONE))
        if w is not None:
            return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, method, w)
    return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, method, None, irrational_witness=True)


def is_classical(psi: KrausFamily) -> bool:
    """True when every operator has at most one nonzero entry."""
    return all(len(v.nonzeros()) <= 1 for v in psi.matrices)


def check_classical(psi: KrausFamily) -> PositivityVerdict:
    """Complete decision for families of scaled matrix units.

    Strictly positive iff every position ``(i, j)`` carries some nonzero
    operator; otherwise ``x = e_i, y = e_j`` for the first uncovered pair.
    """
    if not is_classical(psi):
        raise NotClassicalError("some operator is not a multiple of a matrix unit")
    n = psi.n
    covered = {(i, j) for v in psi.matrices for i, j, _ in v.nonzeros()}
    for i in range(n):
        for j in range(n):
            if (i, j) not in covered:
                x = [ONE if k == i else ZERO for k in range(n)]
                y = [ONE if k == j else ZERO for k in range(n)]
                return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, "exact-classical", BilinearWitness(x, y))
    return PositivityVerdict(Status.STRICTLY_POSITIVE, "exact-classical")


# -- numeric search ----------------------------------------------------------

def _min_eig(vy: np.ndarray, weights: np.ndarray):
    # vy: (starts, m, n) with rows V_i y; H = sum_i w_i (V_i y)(V_i y)^*
    h = np.einsum("i,sik,sil->skl", weights, vy, vy.conj())
    evals, evecs = np.linalg.eigh(h)
    return evals[:, 0], evecs[:, :, 0]


def _normalize_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v / v[k]


def _rationalize(v: np.ndarray, cap: int) -> list[GaussianRational]:
    out = []
    for z in v:
        re = Fraction(float(z.real)).limit_denominator(cap)
        im = Fraction(float(z.imag)).limit_denominator(cap)
        out.append(GaussianRational(re, im))
    return out


def _extract_witness(psi: KrausFamily, y: np.ndarray, x: np.ndarray) -> BilinearWitness | None:
    y = _normalize_phase(y)
    x = _normalize_phase(x)
    for cap in _RATIONALIZE_CAPS:
        yq = _rationalize(y, cap)
        if not any(yq):
            continue
        w = _witness_for(psi, yq)
        if w is not None:
            return w
        xq = _rationalize(x, cap)
        if any(xq):
            cand = BilinearWitness(xq, yq)
            if verify_witness(psi, cand):
                return cand
    return None


def _search(psi: KrausFamily, starts: int, seed: int, iterations: int = 3000):
    n = psi.n
    mats = np.array([v.to_complex() for v in psi.matrices])
    weights = np.array([float(w) for w in psi.weights])
    gram = np.einsum("i,ikl,ikm->lm", weights, mats.conj(), mats)
    lip = float(np.linalg.norm(gram, 2))
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((starts, n)) + 1j * rng.standard_normal((starts, n))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    if lip == 0:
        return y, y.copy(), np.zeros(starts)
    step = 1.0 / lip
    for _ in range(iterations):
        vy = np.einsum("ikl,sl->sik", mats, y)
        f, u = _min_eig(vy, weights)
        # gradient of y* G y with G = sum_i w_i V_i* u u* V_i
        uv = np.einsum("sk,ikl->sil", u.conj(), mats)
        coef = np.einsum("i,sil,sl->si", weights, uv, y)
        grad = np.einsum("si,sil->sl", coef, uv.conj())
        grad -= np.sum(y.conj() * grad, axis=1, keepdims=True) * y
        nxt = y - step * grad
        nxt /= np.linalg.norm(nxt, axis=1, keepdims=True)
        moved = np.max(np.abs(nxt - y))
        y = nxt
        if moved < 1e-14:
            break
    vy = np.einsum("ikl,sl->sik", mats, y)
    f, u = _min_eig(vy, weights)
    return y, u, np.maximum(f, 0.0)


def check_numeric(
    psi: KrausFamily,
    starts: int = DEFAULT_STARTS,
    seed: int = DEFAULT_SEED,
    tol: float = DEFAULT_TOL,
) -> PositivityVerdict:
    """Search for ``min_{|y|=1} lambda_min(sum_i w_i (V_i y)(V_i y)*)``.

    Projected gradient descent on the unit sphere with the fixed step
    ``1 / ||sum_i w_i V_i* V_i||``, run from ``starts`` random points drawn
    from ``seed``.  Minima at or below ``tol`` are rationalized and accepted
    only if the resulting witness verifies exactly.  A search that finds
    nothing returns UNKNOWN with the smallest value seen as the margin.
    """
    if starts < 1:
        raise ValueError("starts must be at least 1")
    ys, us, fs = _search(psi, starts, seed)
    best = int(np.argmin(fs))
    margin = float(fs[best])
    if margin <= tol:
        order = sorted(range(starts), key=lambda s: (fs[s], s))
        for s in order:
            if fs[s] > tol:
                break
            w = _extract_witness(psi, ys[s], us[s])
            if w is not None:
                return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, "numeric", w, margin)
    return PositivityVerdict(Status.UNKNOWN, "numeric", None, margin)


def check(
    psi: KrausFamily,
    starts: int = DEFAULT_STARTS,
    seed: int = DEFAULT_SEED,
    tol: float = DEFAULT_TOL,
) -> PositivityVerdict:
    """Dispatch to the strongest applicable decider."""
    if psi.n <= 2:
        return check_exact_small(psi)
    if is_classical(psi):
        return check_classical(psi)
    if psi.provenance is not None:
        from .reduction import decide_reduced_instance

        feasible, cert = decide_reduced_instance(psi.provenance)
        if feasible:
            return PositivityVerdict(Status.NOT_STRICTLY_POSITIVE, "oracle-reduced", cert.witness)
        return PositivityVerdict(Status.STRICTLY_POSITIVE, "oracle-reduced")
    return check_numeric(psi, starts=starts, seed=seed, tol=tol)
