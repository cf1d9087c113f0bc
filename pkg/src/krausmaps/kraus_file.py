"""Text formats: Kraus families, bilinear witnesses and scalars.

Scalars are written ``a/b`` or ``a/b+c/di`` / ``a/b-c/di`` with every
fraction in lowest terms and the sign on the numerator.  A Kraus file::

    krausfile 1
    n 2
    scalar exact-rational
    operators 2
    operator 0 weight 1/1
    0/1 1/1
    0/1 0/1
    operator 1 weight 1/1
    0/1 0/1
    1/1 0/1
    end

Files written by ``reduce`` add a provenance block before ``end``::

    provenance
    cnf 2 1
    clause 1 2 2
    scale 15
    multiplicities 215 217 216 216 214
    special 2 8 9 10 11
    roles x0 var:1 var:2 prod:1 aux:1
    expanded 0
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .cp_map import KrausFamily, expand_weights
from .exact_linalg import GaussianRational, Mat
from .positivity import BilinearWitness
from .reduction import Cnf, ReducedInstance, reduce_cnf_to_kraus

__all__ = [
    "FormatError",
    "KrausFile",
    "format_scalar",
    "parse_scalar",
    "format_rational",
    "render_kraus_file",
    "parse_kraus_file",
    "render_witness",
    "parse_witness",
]

FORMAT_VERSION = 1
SCALAR_MODE = "exact-rational"

_RAT = r"[+-]?\d+(?:/\d+)?"
_SCALAR_RE = re.compile(rf"^(?:(?P<re>{_RAT})(?:(?P<sign>[+-])(?P<im>\d+(?:/\d+)?)i)?|(?P<pim>{_RAT})i)$")


class FormatError(ValueError):
    pass


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def format_scalar(z: GaussianRational) -> str:
    if z.is_real():
        return format_rational(z.re)
    im = z.im
    sign = "+" if im > 0 else "-"
    return f"{format_rational(z.re)}{sign}{format_rational(abs(im))}i"


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad rational {text!r}") from exc


def parse_scalar(text: str) -> GaussianRational:
    m = _SCALAR_RE.match(text)
    if m is None:
        raise FormatError(f"bad scalar {text!r}")
    if m.group("pim") is not None:
        return GaussianRational(0, _parse_rational(m.group("pim")))
    re_part = _parse_rational(m.group("re"))
    if m.group("im") is None:
        return GaussianRational(re_part)
    im = _parse_rational(m.group("im"))
    return GaussianRational(re_part, im if m.group("sign") == "+" else -im)


@dataclass
class KrausFile:
    family: KrausFamily
    provenance: ReducedInstance | None = None
    expanded: bool = False

    def __eq__(self, other) -> bool:
        if not isinstance(other, KrausFile):
            return NotImplemented
        mine = None if self.provenance is None else self.provenance.cnf
        theirs = None if other.provenance is None else other.provenance.cnf
        return self.family == other.family and mine == theirs and self.expanded == other.expanded


def render_kraus_file(kf: KrausFile) -> str:
    fam = kf.family
    n = fam.n
    lines = [f"krausfile {FORMAT_VERSION}", f"n {n}", f"scalar {SCALAR_MODE}", f"operators {len(fam.ops)}"]
    for idx, (v, w) in enumerate(fam.ops):
        lines.append(f"operator {idx} weight {format_rational(w)}")
        for row in v.to_rows():
            lines.append(" ".join(format_scalar(e) for e in row))
    inst = kf.provenance
    if inst is not None:
        cnf = inst.cnf
        lines.append("provenance")
        lines.append(f"cnf {cnf.num_vars} {cnf.num_clauses}")
        lines += ["clause " + " ".join(map(str, c)) for c in cnf.clauses]
        lines.append(f"scale {inst.scale}")
        lines.append("multiplicities " + " ".join(map(str, inst.multiplicities)))
        lines.append("special " + " ".join(map(str, inst.special_indices)))
        lines.append("roles " + " ".join(inst.roles()))
        lines.append(f"expanded {int(kf.expanded)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Lines:
    def __init__(self, text: str):
        self.items = [
            (no, line.strip())
            for no, line in enumerate(text.splitlines(), 1)
            if line.strip() and not line.strip().startswith("#")
        ]
        self.pos = 0

    def next(self, what: str) -> tuple[int, list[str]]:
        if self.pos >= len(self.items):
            raise FormatError(f"unexpected end of file, expected {what}")
        no, line = self.items[self.pos]
        self.pos += 1
        return no, line.split()

    def keyword(self, key: str, count: int | None = None) -> list[str]:
        no, toks = self.next(key)
        if not toks or toks[0] != key:
            raise FormatError(f"line {no}: expected {key!r}, got {' '.join(toks)!r}")
        if count is not None and len(toks) != count + 1:
            raise FormatError(f"line {no}: {key!r} takes {count} value(s)")
        return toks[1:]


def _int(tok: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError as exc:
        raise FormatError(f"bad integer for {what}: {tok!r}") from exc


def parse_kraus_file(text: str) -> KrausFile:
    src = _Lines(text)
    (version,) = src.keyword("krausfile", 1)
    if _int(version, "version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    n = _int(src.keyword("n", 1)[0], "n")
    if n < 1:
        raise FormatError("n must be positive")
    (mode,) = src.keyword("scalar", 1)
    if mode != SCALAR_MODE:
        raise FormatError(f"unsupported scalar mode {mode!r}")
    count = _int(src.keyword("operators", 1)[0], "operators")
    ops = []
    for idx in range(count):
        toks = src.keyword("operator", 3)
        if _int(toks[0], "operator index") != idx or toks[1] != "weight":
            raise FormatError(f"malformed header for operator {idx}")
        weight = _parse_rational(toks[2])
        if weight <= 0:
            raise FormatError(f"operator {idx}: weight must be positive")
        entries = []
        for r in range(n):
            no, row = src.next(f"row {r} of operator {idx}")
            if len(row) != n:
                raise FormatError(f"line {no}: expected {n} entries, got {len(row)}")
            entries += [parse_scalar(t) for t in row]
        ops.append((Mat(n, n, entries), weight))
    family = KrausFamily(ops, n=n)

    no, toks = src.next("'provenance' or 'end'")
    if toks == ["end"]:
        return KrausFile(family)
    if toks != ["provenance"]:
        raise FormatError(f"line {no}: expected 'provenance' or 'end'")
    nv, nc = (_int(t, "cnf") for t in src.keyword("cnf", 2))
    clauses = [tuple(_int(t, "literal") for t in src.keyword("clause", 3)) for _ in range(nc)]
    try:
        cnf = Cnf(nv, tuple(clauses))
        inst = reduce_cnf_to_kraus(cnf)
    except ValueError as exc:
        raise FormatError(f"invalid provenance CNF: {exc}") from exc
    scale = _int(src.keyword("scale", 1)[0], "scale")
    mult = tuple(_int(t, "multiplicity") for t in src.keyword("multiplicities"))
    special = tuple(_int(t, "special index") for t in src.keyword("special"))
    roles = src.keyword("roles")
    expanded = bool(_int(src.keyword("expanded", 1)[0], "expanded"))
    src.keyword("end", 0)
    if (scale, mult, special, roles) != (inst.scale, inst.multiplicities, inst.special_indices, inst.roles()):
        raise FormatError("provenance block disagrees with the reduction of its CNF")
    expected = expand_weights(inst.family) if expanded else inst.family
    if family != expected:
        raise FormatError("operators disagree with the reduction of the provenance CNF")
    family.provenance = inst
    return KrausFile(family, inst, expanded)


def render_witness(w: BilinearWitness) -> str:
    return "\n".join([
        "witness 1",
        f"n {w.n}",
        "x " + " ".join(format_scalar(v) for v in w.x),
        "y " + " ".join(format_scalar(v) for v in w.y),
        "end",
    ]) + "\n"


def parse_witness(text: str) -> BilinearWitness:
    src = _Lines(text)
    src.keyword("witness", 1)
    n = _int(src.keyword("n", 1)[0], "n")
    x = [parse_scalar(t) for t in src.keyword("x", n)]
    y = [parse_scalar(t) for t in src.keyword("y", n)]
    src.keyword("end", 0)
    try:
        return BilinearWitness(x, y)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def format_vector(v: Sequence[GaussianRational]) -> str:
    return " ".join(format_scalar(z) for z in v)
