"""Exact linear algebra over the Gaussian rationals Q(i).

Scalars are :class:`GaussianRational` values backed by ``gmpy2.mpq``;
matrices are dense, immutable and row-major.  Subspaces of ``n x n``
matrices are kept alongside a reduced row echelon form of their
vectorizations so that membership and equality tests are exact.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq

__all__ = [
    "GaussianRational",
    "Mat",
    "MatrixSubspace",
    "DimensionError",
    "as_gaussian",
    "extract_basis",
    "span_contains",
    "hs_inner",
    "hs_orthocomplement",
    "nullspace",
    "rank",
    "rational_sqrt",
    "gaussian_sqrt",
    "weighted_gram",
]


class DimensionError(ValueError):
    """Raised when operands do not have conformable shapes."""


def _to_mpq(value) -> mpq:
    if isinstance(value, mpq):
        return value
    if isinstance(value, bool):
        return mpq(int(value))
    if isinstance(value, (int, Fraction)) or type(value).__name__ == "mpz":
        return mpq(value)
    if isinstance(value, Rational):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return mpq(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


class GaussianRational:
    """Exact complex number ``re + im*i`` with rational parts.

    Instances are immutable and hashable.  Plain ints, Fractions and
    ``mpq`` values mix freely in arithmetic; floats are rejected.
    """

    __slots__ = ("_re", "_im")

    def __init__(self, re=0, im=0):
        self._re = _to_mpq(re)
        self._im = _to_mpq(im)

    @classmethod
    def _raw(cls, re: mpq, im: mpq) -> "GaussianRational":
        obj = object.__new__(cls)
        obj._re = re
        obj._im = im
        return obj

    @property
    def re(self) -> Fraction:
        return Fraction(int(self._re.numerator), int(self._re.denominator))

    @property
    def im(self) -> Fraction:
        return Fraction(int(self._im.numerator), int(self._im.denominator))

    def is_real(self) -> bool:
        return not self._im

    def conjugate(self) -> "GaussianRational":
        if not self._im:
            return self
        return GaussianRational._raw(self._re, -self._im)

    def abs2(self) -> Fraction:
        """Squared modulus, exact."""
        v = self._re * self._re + self._im * self._im
        return Fraction(int(v.numerator), int(v.denominator))

    def __bool__(self) -> bool:
        return bool(self._re) or bool(self._im)

    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self._re == other._re and self._im == other._im
        try:
            o = _to_mpq(other)
        except TypeError:
            return NotImplemented
        return not self._im and self._re == o

    def __hash__(self) -> int:
        if not self._im:
            return hash(Fraction(int(self._re.numerator), int(self._re.denominator)))
        return hash((self._re, self._im))

    def __neg__(self) -> "GaussianRational":
        return GaussianRational._raw(-self._re, -self._im)

    def __pos__(self) -> "GaussianRational":
        return self

    def __add__(self, other) -> "GaussianRational":
        if isinstance(other, GaussianRational):
            return GaussianRational._raw(self._re + other._re, self._im + other._im)
        try:
            return GaussianRational._raw(self._re + _to_mpq(other), self._im)
        except TypeError:
            return NotImplemented

    __radd__ = __add__

    def __sub__(self, other) -> "GaussianRational":
        if isinstance(other, GaussianRational):
            return GaussianRational._raw(self._re - other._re, self._im - other._im)
        try:
            return GaussianRational._raw(self._re - _to_mpq(other), self._im)
        except TypeError:
            return NotImplemented

    def __rsub__(self, other) -> "GaussianRational":
        return (-self).__add__(other)

    def __mul__(self, other) -> "GaussianRational":
        if isinstance(other, GaussianRational):
            a, b, c, d = self._re, self._im, other._re, other._im
            if not b and not d:
                return GaussianRational._raw(a * c, b)
            return GaussianRational._raw(a * c - b * d, a * d + b * c)
        try:
            o = _to_mpq(other)
        except TypeError:
            return NotImplemented
        return GaussianRational._raw(self._re * o, self._im * o)

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        if not self:
            raise ZeroDivisionError("GaussianRational division by zero")
        if not self._im:
            return GaussianRational._raw(1 / self._re, self._im)
        d = self._re * self._re + self._im * self._im
        return GaussianRational._raw(self._re / d, -self._im / d)

    def __truediv__(self, other) -> "GaussianRational":
        if isinstance(other, GaussianRational):
            return self * other.inverse()
        try:
            o = _to_mpq(other)
        except TypeError:
            return NotImplemented
        if not o:
            raise ZeroDivisionError("GaussianRational division by zero")
        return GaussianRational._raw(self._re / o, self._im / o)

    def __rtruediv__(self, other) -> "GaussianRational":
        return GaussianRational(other) * self.inverse()

    def __complex__(self) -> complex:
        return complex(float(self._re), float(self._im))

    def __repr__(self) -> str:
        if not self._im:
            return f"GaussianRational({self._re})"
        return f"GaussianRational({self._re}, {self._im})"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I_UNIT = GaussianRational(0, 1)


def as_gaussian(value) -> GaussianRational:
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, complex):
        raise TypeError("floating-point complex values are not exact")
    return GaussianRational(value)


def rational_sqrt(q) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    q = _to_mpq(q)
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    if not (gmpy2.is_square(num) and gmpy2.is_square(den)):
        return None
    return Fraction(int(gmpy2.isqrt(num)), int(gmpy2.isqrt(den)))


def gaussian_sqrt(z: GaussianRational) -> GaussianRational | None:
    """A square root of ``z`` inside Q(i), or None when none exists."""
    a, b = z.re, z.im
    if b == 0:
        if a >= 0:
            r = rational_sqrt(a)
            return None if r is None else GaussianRational(r)
        r = rational_sqrt(-a)
        return None if r is None else GaussianRational(0, r)
    modulus = rational_sqrt(a * a + b * b)
    if modulus is None:
        return None
    u = rational_sqrt((a + modulus) / 2)
    if u is None or u == 0:
        return None
    root = GaussianRational(u, b / (2 * u))
    return root if root * root == z else None


class Mat:
    """Dense immutable matrix of Gaussian rationals, stored row-major."""

    __slots__ = ("rows", "cols", "_entries", "_nz", "_hash")

    def __init__(self, rows: int, cols: int, entries: Iterable):
        entries = tuple(as_gaussian(e) for e in entries)
        if len(entries) != rows * cols:
            raise DimensionError(
                f"expected {rows * cols} entries for a {rows}x{cols} matrix, got {len(entries)}"
            )
        self.rows = rows
        self.cols = cols
        self._entries = entries
        self._nz = None
        self._hash = None

    @classmethod
    def _trusted(cls, rows: int, cols: int, entries: tuple) -> "Mat":
        obj = object.__new__(cls)
        obj.rows = rows
        obj.cols = cols
        obj._entries = entries
        obj._nz = None
        obj._hash = None
        return obj

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "Mat":
        rows = [list(r) for r in rows]
        if not rows:
            raise DimensionError("matrix must have at least one row")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise DimensionError("ragged rows")
        return cls(len(rows), width, [e for r in rows for e in r])

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "Mat":
        cols = rows if cols is None else cols
        obj = cls._trusted(rows, cols, (ZERO,) * (rows * cols))
        obj._nz = ()
        return obj

    @classmethod
    def identity(cls, n: int) -> "Mat":
        return cls._trusted(n, n, tuple(ONE if i == j else ZERO for i in range(n) for j in range(n)))

    @classmethod
    def unit(cls, n: int, i: int, j: int, value=1) -> "Mat":
        """``value`` times the matrix unit E_ij (0-based)."""
        entries = [ZERO] * (n * n)
        entries[i * n + j] = as_gaussian(value)
        return cls._trusted(n, n, tuple(entries))

    @classmethod
    def column(cls, values: Sequence) -> "Mat":
        return cls(len(values), 1, values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx: tuple[int, int]) -> GaussianRational:
        i, j = idx
        return self.entries[i * self.cols + j]

    def to_rows(self) -> list[list[GaussianRational]]:
        c = self.cols
        return [list(self.entries[r * c:(r + 1) * c]) for r in range(self.rows)]

    @property
    def entries(self) -> tuple[GaussianRational, ...]:
        """Row-major entries; built on first use for sparse-constructed matrices."""
        if self._entries is None:
            dense = [ZERO] * (self.rows * self.cols)
            c = self.cols
            for i, j, v in self._nz:
                dense[i * c + j] = v
            self._entries = tuple(dense)
        return self._entries

    def nonzeros(self) -> tuple:
        """Cached ``(i, j, value)`` triples of the nonzero entries."""
        if self._nz is None:
            c = self.cols
            self._nz = tuple((k // c, k % c, v) for k, v in enumerate(self.entries) if v)
        return self._nz

    def is_zero(self) -> bool:
        return not self.nonzeros()

    def vec(self) -> tuple[GaussianRational, ...]:
        return self.entries

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mat):
            return NotImplemented
        return self.shape == other.shape and self.nonzeros() == other.nonzeros()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.rows, self.cols, self.nonzeros()))
        return self._hash

    def _check_same_shape(self, other: "Mat") -> None:
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    @classmethod
    def _from_sparse(cls, rows: int, cols: int, items: dict[int, GaussianRational]) -> "Mat":
        obj = cls._trusted(rows, cols, None)
        obj._nz = tuple((k // cols, k % cols, items[k]) for k in sorted(items) if items[k])
        return obj

    def _sparse_items(self) -> dict[int, GaussianRational]:
        c = self.cols
        return {i * c + j: v for i, j, v in self.nonzeros()}

    def __add__(self, other: "Mat") -> "Mat":
        self._check_same_shape(other)
        acc = self._sparse_items()
        c = self.cols
        for i, j, v in other.nonzeros():
            k = i * c + j
            acc[k] = acc[k] + v if k in acc else v
        return Mat._from_sparse(self.rows, self.cols, acc)

    def __sub__(self, other: "Mat") -> "Mat":
        return self + (-other)

    def __neg__(self) -> "Mat":
        c = self.cols
        return Mat._from_sparse(self.rows, c, {i * c + j: -v for i, j, v in self.nonzeros()})

    def scale(self, c) -> "Mat":
        c = as_gaussian(c)
        if not c:
            return Mat.zeros(self.rows, self.cols)
        w = self.cols
        return Mat._from_sparse(self.rows, w, {i * w + j: v * c for i, j, v in self.nonzeros()})

    def __mul__(self, c) -> "Mat":
        if isinstance(c, Mat):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other: "Mat") -> "Mat":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        p = other.cols
        acc: dict[int, GaussianRational] = {}
        # row-wise sparse accumulation over nonzeros of both factors
        other_rows: list[list] = [[] for _ in range(other.rows)]
        for t, j, v in other.nonzeros():
            other_rows[t].append((j, v))
        for i, t, a in self.nonzeros():
            base = i * p
            for j, b in other_rows[t]:
                k = base + j
                acc[k] = acc[k] + a * b if k in acc else a * b
        return Mat._from_sparse(self.rows, p, acc)

    def adjoint(self) -> "Mat":
        """Conjugate transpose."""
        r = self.rows
        return Mat._from_sparse(self.cols, r, {j * r + i: v.conjugate() for i, j, v in self.nonzeros()})

    def transpose(self) -> "Mat":
        r, c = self.rows, self.cols
        e = self.entries
        return Mat._trusted(c, r, tuple(e[i * c + j] for j in range(c) for i in range(r)))

    def trace(self) -> GaussianRational:
        if self.rows != self.cols:
            raise DimensionError("trace of a non-square matrix")
        total = ZERO
        for k in range(self.rows):
            total = total + self.entries[k * self.cols + k]
        return total

    def is_diagonal(self) -> bool:
        return all(i == j for i, j, _ in self.nonzeros())

    def to_complex(self):
        import numpy as np

        return np.array([complex(e) for e in self.entries], dtype=complex).reshape(self.rows, self.cols)

    def __repr__(self) -> str:
        return f"Mat({self.rows}x{self.cols}, {self.to_rows()!r})"


def hs_inner(a: Mat, b: Mat) -> GaussianRational:
    """Hilbert-Schmidt inner product ``tr(a* b)``."""
    a._check_same_shape(b)
    total = ZERO
    be = b.entries
    for i, j, v in a.nonzeros():
        w = be[i * a.cols + j]
        if w:
            total = total + v.conjugate() * w
    return total


def weighted_gram(pairs: Iterable[tuple[Mat, object]], n: int) -> Mat:
    """``sum w A* A`` over ``(A, w)`` pairs of ``n x n`` matrices, accumulated sparsely."""
    acc: dict[int, GaussianRational] = {}
    for a, w in pairs:
        if a.shape != (n, n):
            raise DimensionError(f"expected {n}x{n}, got {a.shape}")
        w = as_gaussian(w)
        rows: dict[int, list] = {}
        for i, j, v in a.nonzeros():
            rows.setdefault(i, []).append((j, v))
        for row in rows.values():
            for j, v in row:
                cv = v.conjugate() * w
                base = j * n
                for k, u in row:
                    key = base + k
                    acc[key] = acc[key] + cv * u if key in acc else cv * u
    return Mat._from_sparse(n, n, acc)


class _Echelon:
    """Incrementally maintained reduced row echelon form.

    Rows are stored as dicts ``{coordinate: value}`` with a unit pivot at
    the row's leftmost nonzero coordinate.  Every pivot column is zero in
    all other rows, so the form is canonical for the spanned space.
    """

    __slots__ = ("length", "rows")

    def __init__(self, length: int):
        self.length = length
        self.rows: dict[int, dict[int, GaussianRational]] = {}

    def reduce(self, vec: dict[int, GaussianRational]) -> dict[int, GaussianRational]:
        v = dict(vec)
        for piv in sorted(set(v) & self.rows.keys()):
            c = v.get(piv)
            if not c:
                continue
            for k, r in self.rows[piv].items():
                nv = v.get(k, ZERO) - c * r
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)
        return v

    def insert(self, vec: dict[int, GaussianRational]) -> bool:
        """Add ``vec`` to the span; return True if the dimension grew."""
        v = self.reduce(vec)
        if not v:
            return False
        piv = min(v)
        inv = v[piv].inverse()
        row = {k: x * inv for k, x in v.items()}
        row[piv] = ONE
        for other in self.rows.values():
            c = other.get(piv)
            if c:
                for k, r in row.items():
                    nv = other.get(k, ZERO) - c * r
                    if nv:
                        other[k] = nv
                    else:
                        other.pop(k, None)
        self.rows[piv] = row
        return True

    def contains(self, vec: dict[int, GaussianRational]) -> bool:
        return not self.reduce(vec)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def key(self) -> tuple:
        return tuple(
            (piv, tuple(sorted((k, v._re, v._im) for k, v in self.rows[piv].items())))
            for piv in sorted(self.rows)
        )

    def copy(self) -> "_Echelon":
        e = _Echelon(self.length)
        e.rows = {p: dict(r) for p, r in self.rows.items()}
        return e


def _sparse_vec(m: Mat) -> dict[int, GaussianRational]:
    c = m.cols
    return {i * c + j: v for i, j, v in m.nonzeros()}


class MatrixSubspace:
    """Linearly independent basis of ``n x n`` matrices and the space it spans.

    Two subspaces compare equal when they span the same space, whatever
    their bases.
    """

    __slots__ = ("n", "basis", "_echelon")

    def __init__(self, n: int, basis: Sequence[Mat] = ()):
        self.n = n
        ech = _Echelon(n * n)
        kept = []
        for m in basis:
            if m.shape != (n, n):
                raise DimensionError(f"basis element of shape {m.shape}, expected {(n, n)}")
            if not ech.insert(_sparse_vec(m)):
                raise ValueError("basis elements are linearly dependent")
            kept.append(m)
        self.basis = tuple(kept)
        self._echelon = ech

    @classmethod
    def _from_parts(cls, n: int, basis: tuple, echelon: _Echelon) -> "MatrixSubspace":
        obj = object.__new__(cls)
        obj.n = n
        obj.basis = basis
        obj._echelon = echelon
        return obj

    @property
    def dim(self) -> int:
        return len(self.basis)

    def is_full(self) -> bool:
        return self.dim == self.n * self.n

    def contains(self, m: Mat) -> bool:
        if m.shape != (self.n, self.n):
            raise DimensionError(f"matrix of shape {m.shape} tested against {self.n}x{self.n} space")
        return self._echelon.contains(_sparse_vec(m))

    def key(self) -> tuple:
        """Canonical, hashable description of the spanned space."""
        return (self.n, self._echelon.key())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixSubspace):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __len__(self) -> int:
        return self.dim

    def __iter__(self):
        return iter(self.basis)

    def __repr__(self) -> str:
        return f"MatrixSubspace(n={self.n}, dim={self.dim})"


def extract_basis(vectors: Iterable[Mat], n: int | None = None) -> MatrixSubspace:
    """Select a maximal independent subfamily of ``vectors``, in order.

    Each matrix is kept iff it is not in the span of those kept before it.
    ``n`` is only needed to type an empty input.
    """
    vectors = list(vectors)
    if n is None:
        if not vectors:
            raise ValueError("cannot infer the matrix size of an empty family")
        n = vectors[0].rows
    ech = _Echelon(n * n)
    kept = []
    for m in vectors:
        if m.shape != (n, n):
            raise DimensionError(f"matrix of shape {m.shape} in a family of {n}x{n} matrices")
        if ech.insert(_sparse_vec(m)):
            kept.append(m)
    return MatrixSubspace._from_parts(n, tuple(kept), ech)


def span_contains(space: MatrixSubspace, m: Mat) -> bool:
    return space.contains(m)


def hs_orthocomplement(space: MatrixSubspace) -> MatrixSubspace:
    """Orthogonal complement under ``<A, B> = tr(A* B)``."""
    n = space.n
    rows = space._echelon.rows
    basis = []
    for free in range(n * n):
        if free in rows:
            continue
        # conj of the RREF of the basis is the RREF of the conjugated rows
        entries = [ZERO] * (n * n)
        entries[free] = ONE
        for piv, row in rows.items():
            c = row.get(free)
            if c:
                entries[piv] = -c.conjugate()
        basis.append(Mat._trusted(n, n, tuple(entries)))
    return extract_basis(basis, n=n)


def nullspace(rows: Sequence[Sequence], width: int | None = None) -> list[tuple[GaussianRational, ...]]:
    """Basis of ``{z : sum_k row[k] * z[k] = 0 for every row}``."""
    rows = [[as_gaussian(v) for v in r] for r in rows]
    if width is None:
        if not rows:
            raise ValueError("width required for an empty system")
        width = len(rows[0])
    ech = _Echelon(width)
    for r in rows:
        if len(r) != width:
            raise DimensionError("ragged system")
        ech.insert({k: v for k, v in enumerate(r) if v})
    out = []
    for free in range(width):
        if free in ech.rows:
            continue
        z = [ZERO] * width
        z[free] = ONE
        for piv, row in ech.rows.items():
            c = row.get(free)
            if c:
                z[piv] = -c
        out.append(tuple(z))
    return out


def rank(rows: Sequence[Sequence]) -> int:
    ech = None
    for r in rows:
        r = [as_gaussian(v) for v in r]
        if ech is None:
            ech = _Echelon(len(r))
        ech.insert({k: v for k, v in enumerate(r) if v})
    return 0 if ech is None else ech.dim
