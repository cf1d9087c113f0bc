"""3SAT to strict-positivity reduction with certificates in both directions.

Coordinates of the bilinear system are 0-based: ``0`` is the homogenizing
variable, ``1..N`` the Boolean variables, ``N+i`` stands for the product of
the first two literal variables of clause ``i`` and ``N+M+i`` for
``1 + r_i x_{k3}`` (clauses numbered from 1).

A literal ``+v`` (``X_v``) contributes the factor ``1 - x_v`` and ``-v``
contributes ``1 + x_v``; ``x_v = 1`` means ``X_v`` is true.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cp_map import KrausFamily, verify_unital
from .exact_linalg import ONE, GaussianRational, Mat, weighted_gram
from .positivity import BilinearWitness, verify_witness, witness_residuals

__all__ = [
    "Cnf",
    "DimacsError",
    "HomogeneousSystem",
    "ReducedInstance",
    "Certificate",
    "ReductionError",
    "parse_dimacs",
    "normalize_clauses",
    "build_system",
    "unitalize",
    "reduce_cnf_to_kraus",
    "assignment_vector",
    "encode_assignment",
    "decide_reduced_instance",
    "decode_witness",
    "satisfies",
    "DEFAULT_ENUMERATION_CAP",
]

DEFAULT_ENUMERATION_CAP = 24

GROUP_CLAUSE = 1
GROUP_PRODUCT = 2
GROUP_AUX = 3
GROUP_SQUARE = 4
GROUP_ANTISYM = 5


class DimacsError(ValueError):
    pass


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class Cnf:
    """3-CNF with literals as signed variable indices (DIMACS convention)."""

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        for c in self.clauses:
            if len(c) != 3:
                raise ValueError(f"clause {c} does not have exactly 3 literals")
            if any(lit == 0 or abs(lit) > self.num_vars for lit in c):
                raise ValueError(f"clause {c} mentions a variable outside 1..{self.num_vars}")
            if abs(c[0]) == abs(c[1]):
                raise ValueError(f"clause {c}: the first two literals must use distinct variables")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def satisfies(cnf: Cnf, assignment: Sequence[int]) -> bool:
    """``assignment[v-1]`` is +1 (true) or -1 (false)."""
    if len(assignment) != cnf.num_vars:
        raise ValueError(f"assignment has {len(assignment)} values for {cnf.num_vars} variables")
    return all(any((lit > 0) == (assignment[abs(lit) - 1] > 0) for lit in c) for c in cnf.clauses)


def normalize_clauses(num_vars: int, raw: Sequence[Sequence[int]]) -> Cnf:
    """Rewrite raw 3-literal clauses into an equisatisfiable :class:`Cnf`.

    Literals are reordered so the first two use distinct variables.
    Clauses on a single variable are handled separately: with both
    polarities they are tautologies and dropped; ``(X or X or X)`` becomes
    ``(X or Y or X)`` for one fresh variable ``Y`` shared by all such
    clauses, and ``Y`` is forced false by ``(-Y or Z or -Y)`` and
    ``(-Y or -Z or -Y)`` with one more fresh variable ``Z``.
    """
    clauses = []
    uniform = []
    for c in raw:
        c = tuple(int(lit) for lit in c)
        if len(c) != 3:
            raise DimacsError(f"clause {c} does not have exactly 3 literals")
        if any(lit == 0 or abs(lit) > num_vars for lit in c):
            raise DimacsError(f"clause {c} mentions a variable outside 1..{num_vars}")
        pair = next(((a, b) for a, b in itertools.combinations(range(3), 2) if abs(c[a]) != abs(c[b])), None)
        if pair is None:
            if len(set(c)) > 1:
                continue
            uniform.append(len(clauses))
            clauses.append(c)
            continue
        a, b = pair
        rest = 3 - a - b
        clauses.append((c[a], c[b], c[rest]))
    if uniform:
        y, z = num_vars + 1, num_vars + 2
        num_vars += 2
        for idx in uniform:
            lit = clauses[idx][0]
            clauses[idx] = (lit, y, lit)
        clauses += [(-y, z, -y), (-y, -z, -y)]
    return Cnf(num_vars, tuple(clauses))


def parse_dimacs(text: str) -> Cnf:
    num_vars = None
    expected = None
    literals: list[int] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf" or num_vars is not None:
                raise DimacsError(f"line {lineno}: malformed problem line {line!r}")
            try:
                num_vars, expected = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise DimacsError(f"line {lineno}: malformed problem line {line!r}") from exc
            if num_vars < 0 or expected < 0:
                raise DimacsError(f"line {lineno}: negative counts")
            continue
        if num_vars is None:
            raise DimacsError(f"line {lineno}: clause before the problem line")
        try:
            literals.extend(int(tok) for tok in line.split())
        except ValueError as exc:
            raise DimacsError(f"line {lineno}: non-integer token") from exc
    if num_vars is None:
        raise DimacsError("missing problem line")
    raw, current = [], []
    for lit in literals:
        if lit == 0:
            raw.append(current)
            current = []
        else:
            current.append(lit)
    if current:
        raise DimacsError("last clause is not terminated by 0")
    if len(raw) != expected:
        raise DimacsError(f"problem line announces {expected} clauses, found {len(raw)}")
    return normalize_clauses(num_vars, raw)


@dataclass(frozen=True)
class HomogeneousSystem:
    """Matrices ``A_i`` of the homogeneous bilinear system ``x^T A_i y = 0``.

    ``tags[i]`` is ``(group, clause, coordinate)`` with unused parts 0;
    groups are numbered 1-5 in emission order.
    """

    n: int
    mats: tuple[Mat, ...]
    tags: tuple[tuple[int, int, int], ...]
    gram: Mat

    @property
    def m0(self) -> int:
        return len(self.mats)


def _sign_coef(lit: int) -> int:
    return -1 if lit > 0 else 1


def _sparse_mat(n: int, items: dict[tuple[int, int], int]) -> Mat:
    return Mat._from_sparse(n, n, {i * n + j: GaussianRational(v) for (i, j), v in items.items() if v})


def build_system(cnf: Cnf) -> HomogeneousSystem:
    big_n, big_m = cnf.num_vars, cnf.num_clauses
    n = big_n + 2 * big_m + 1
    mats, tags = [], []

    def emit(items, tag):
        mats.append(_sparse_mat(n, items))
        tags.append(tag)

    for i, (l1, l2, _) in enumerate(cnf.clauses, 1):
        p, q = _sign_coef(l1), _sign_coef(l2)
        col = big_n + big_m + i
        emit({(0, col): 1, (abs(l1), col): p, (abs(l2), col): q, (big_n + i, col): p * q}, (GROUP_CLAUSE, i, 0))
    for i, (l1, l2, _) in enumerate(cnf.clauses, 1):
        emit({(abs(l1), abs(l2)): 1, (0, big_n + i): -1}, (GROUP_PRODUCT, i, 0))
    for i, (_, _, l3) in enumerate(cnf.clauses, 1):
        r = _sign_coef(l3)
        for j in range(n):
            emit({(0, j): 1, (abs(l3), j): r, (big_n + big_m + i, j): -1}, (GROUP_AUX, i, j))
    for i in range(1, big_n + big_m + 1):
        emit({(i, i): 1, (0, 0): -1}, (GROUP_SQUARE, 0, i))
    for i in range(n):
        for j in range(i + 1, n):
            emit({(i, j): 1, (j, i): -1}, (GROUP_ANTISYM, i, j))

    expected = big_n + 3 * big_m + n * (4 * big_m + big_n) // 2
    if len(mats) != expected:
        raise ReductionError(f"emitted {len(mats)} equations, expected {expected}")
    gram = weighted_gram(((a, 1) for a in mats), n)
    if not gram.is_diagonal():
        raise ReductionError("sum of A_i* A_i is not diagonal")
    return HomogeneousSystem(n, tuple(mats), tuple(tags), gram)


@dataclass
class ReducedInstance:
    cnf: Cnf
    system: HomogeneousSystem
    scale: int
    special_indices: tuple[int, ...]
    diagonal: tuple[int, ...]
    multiplicities: tuple[int, ...]
    family: KrausFamily = field(repr=False)

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def m0(self) -> int:
        return self.system.m0

    @property
    def expanded_m(self) -> int:
        return self.m0 + 3 * sum(self.multiplicities)

    def roles(self) -> list[str]:
        """Name of every coordinate, ``x0``, ``var:v``, ``prod:i`` or ``aux:i``."""
        big_n, big_m = self.cnf.num_vars, self.cnf.num_clauses
        out = ["x0"]
        out += [f"var:{v}" for v in range(1, big_n + 1)]
        out += [f"prod:{i}" for i in range(1, big_m + 1)]
        out += [f"aux:{i}" for i in range(1, big_m + 1)]
        return out


def unitalize(system: HomogeneousSystem, cnf: Cnf) -> ReducedInstance:
    """Pad the system with multiples of group-3 matrices until it is unital.

    With ``L = 2N + 7M + 4`` and ``k_j`` the diagonal of ``sum A_i* A_i``,
    coordinate ``j`` receives ``B_j = A_{n_j} / 3`` with multiplicity
    ``3 (L^2 - k_j)``, where ``A_{n_j}* A_{n_j} = 3 e_j e_j^T``.  Every
    operator is divided by ``L``.
    """
    n = system.n
    scale = 2 * cnf.num_vars + 7 * cnf.num_clauses + 4
    diag = []
    for j in range(n):
        v = system.gram[j, j]
        if not v.is_real() or v.re.denominator != 1:
            raise ReductionError(f"diagonal entry {j} is not an integer")
        diag.append(int(v.re))
    special = []
    for j in range(n):
        target = _sparse_mat(n, {(j, j): 3})
        idx = next(
            (k for k, tag in enumerate(system.tags)
             if tag[0] == GROUP_AUX and tag[2] == j and system.mats[k].adjoint() @ system.mats[k] == target),
            None,
        )
        if idx is None:
            raise ReductionError(f"no group-3 matrix isolates coordinate {j}")
        special.append(idx)
    mult = []
    for j, k in enumerate(diag):
        if k > scale * scale:
            raise ReductionError(f"diagonal entry {k} exceeds L^2 = {scale * scale}")
        mult.append(scale * scale - k)

    inv_l = Fraction(1, scale)
    ops = [(a.scale(inv_l), 1) for a in system.mats]
    ops += [(system.mats[special[j]].scale(inv_l / 3), 3 * mult[j]) for j in range(n) if mult[j]]
    inst = ReducedInstance(cnf, system, scale, tuple(special), tuple(diag), tuple(mult), None)
    family = KrausFamily(ops, n=n, provenance=inst)
    if not verify_unital(family):
        raise ReductionError("padded family is not unital")
    inst.family = family
    return inst


def reduce_cnf_to_kraus(cnf: Cnf) -> ReducedInstance:
    if cnf.num_clauses == 0:
        raise ReductionError("the reduction needs at least one clause")
    return unitalize(build_system(cnf), cnf)


@dataclass(frozen=True)
class Certificate:
    assignment: tuple[int, ...] | None = None
    witness: BilinearWitness | None = None

    def __post_init__(self):
        if (self.assignment is None) == (self.witness is None):
            raise ValueError("a certificate holds exactly one of assignment or witness")


def _check_assignment(cnf: Cnf, assignment: Sequence[int]) -> tuple[int, ...]:
    a = tuple(int(v) for v in assignment)
    if len(a) != cnf.num_vars or any(v not in (1, -1) for v in a):
        raise ValueError(f"assignment must be {cnf.num_vars} values in {{+1, -1}}")
    return a


def assignment_vector(inst: ReducedInstance, assignment: Sequence[int]) -> tuple[GaussianRational, ...]:
    """Coordinates ``x`` determined by an assignment; no satisfaction check."""
    cnf = inst.cnf
    a = _check_assignment(cnf, assignment)
    big_n, big_m = cnf.num_vars, cnf.num_clauses
    x = [0] * inst.n
    x[0] = 1
    for v in range(1, big_n + 1):
        x[v] = a[v - 1]
    for i, (l1, l2, l3) in enumerate(cnf.clauses, 1):
        x[big_n + i] = a[abs(l1) - 1] * a[abs(l2) - 1]
        x[big_n + big_m + i] = 1 + _sign_coef(l3) * a[abs(l3) - 1]
    return tuple(GaussianRational(v) for v in x)


def encode_assignment(inst: ReducedInstance, assignment: Sequence[int]) -> BilinearWitness:
    a = _check_assignment(inst.cnf, assignment)
    x = assignment_vector(inst, a)
    w = BilinearWitness(x, x)
    if not satisfies(inst.cnf, a):
        bad = [idx for idx, _ in witness_residuals(inst.family, w)]
        raise ValueError(f"assignment violates the CNF; nonvanishing forms at operators {bad}")
    if not verify_witness(inst.family, w):
        raise ReductionError("encoded witness failed exact verification")
    return w


def _assignments(num_vars: int):
    return itertools.product((1, -1), repeat=num_vars)


def decide_reduced_instance(
    inst: ReducedInstance, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[bool, Certificate | None]:
    """Exact feasibility of a reduced instance by enumerating assignments.

    Only valid for families produced by :func:`reduce_cnf_to_kraus`: their
    nonzero solutions are exactly the encodings of satisfying assignments.
    """
    cnf = inst.cnf
    if cnf.num_vars > cap:
        raise ValueError(f"{cnf.num_vars} variables exceed the enumeration cap {cap}")
    for a in _assignments(cnf.num_vars):
        if satisfies(cnf, a):
            return True, Certificate(witness=encode_assignment(inst, a))
    return False, None


def decode_witness(inst: ReducedInstance, w: BilinearWitness) -> tuple[int, ...]:
    """Recover the assignment ``sign(x_v / x_0)`` from a verified witness."""
    if w.n != inst.n or not verify_witness(inst.family, w):
        raise ValueError("witness does not verify against the instance")
    x0 = w.x[0]
    if not x0:
        raise ValueError("witness has x_0 = 0")
    out = []
    for v in range(1, inst.cnf.num_vars + 1):
        ratio = w.x[v] / x0
        if ratio == ONE:
            out.append(1)
        elif ratio == -ONE:
            out.append(-1)
        else:
            raise ValueError(f"coordinate {v} of the witness is not +-x_0")
    a = tuple(out)
    if not satisfies(inst.cnf, a):
        raise ReductionError("decoded assignment does not satisfy the CNF")
    return a
