"""Command-line interface.

Exit codes: 0 the property holds (or the certificate verifies), 1 it
fails, 2 the numeric search was inconclusive, 3 usage or input errors.
Reports go to standard output, one ``key value`` pair per line, and end
with a single ``STATUS <property> <verdict> <method>`` line.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import cp_map, oracles, positivity, reduction
from .kraus_file import (
    FormatError,
    KrausFile,
    format_scalar,
    format_vector,
    parse_kraus_file,
    parse_witness,
    render_kraus_file,
)

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Report:
    def __init__(self, prop: str):
        self.prop = prop
        self.lines: list[str] = [f"property {prop}"]
        self.start = time.perf_counter()

    def add(self, key: str, value) -> None:
        self.lines.append(f"{key} {value}")

    def finish(self, verdict: str, method: str) -> str:
        self.lines.append(f"time_seconds {time.perf_counter() - self.start:.6f}")
        self.lines.append(f"STATUS {self.prop} {verdict} {method}")
        return "\n".join(self.lines) + "\n"


def _load(path: str) -> KrausFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return parse_kraus_file(text)


def _bool(b: bool) -> str:
    return "true" if b else "false"


def cmd_check(args, out) -> int:
    report = _Report(args.property)
    kf = _load(args.path)
    psi = kf.family
    report.add("n", psi.n)
    report.add("operators", len(psi.ops))
    if args.property == "irreducible":
        space, depth = cp_map.algebra_closure(psi)
        report.add("algebra_dim", space.dim)
        report.add("closure_depth", depth)
        holds = space.is_full()
        out.write(report.finish("IRREDUCIBLE" if holds else "REDUCIBLE", "algebra-closure"))
        return EXIT_HOLDS if holds else EXIT_FAILS
    if args.property == "primitive":
        rep = cp_map.is_primitive(psi)
        report.add("irreducible", _bool(rep.irreducible))
        report.add("closure_depth", rep.closure_depth)
        report.add("wielandt_q", "none" if rep.wielandt_q is None else rep.wielandt_q)
        report.add("bound", rep.bound)
        out.write(report.finish("PRIMITIVE" if rep.primitive else "NOT_PRIMITIVE", "wielandt"))
        return EXIT_HOLDS if rep.primitive else EXIT_FAILS

    unital = cp_map.verify_unital(psi)
    report.add("unital", _bool(unital))
    if not unital and not args.allow_nonunital:
        raise UsageError("strict-positive expects a unital family; pass --allow-nonunital to override")
    report.add("parameters", f"starts={args.starts} seed={args.seed} tol={args.tol!r}")
    verdict = positivity.check(psi, starts=args.starts, seed=args.seed, tol=args.tol)
    if verdict.numeric_margin is not None:
        report.add("numeric_margin", f"{verdict.numeric_margin:.6e}")
    if verdict.witness is not None:
        report.add("witness_x", format_vector(verdict.witness.x))
        report.add("witness_y", format_vector(verdict.witness.y))
        if kf.provenance is not None:
            a = reduction.decode_witness(kf.provenance, verdict.witness)
            report.add("assignment", " ".join(str(v) for v in a))
    elif verdict.irrational_witness:
        report.add("witness", "irrational")
    out.write(report.finish(verdict.status.value, verdict.method))
    return {
        positivity.Status.STRICTLY_POSITIVE: EXIT_HOLDS,
        positivity.Status.NOT_STRICTLY_POSITIVE: EXIT_FAILS,
        positivity.Status.UNKNOWN: EXIT_UNKNOWN,
    }[verdict.status]


def cmd_reduce(args, out) -> int:
    report = _Report("reduce")
    try:
        text = Path(args.cnf_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {args.cnf_path}: {exc}") from exc
    cnf = reduction.parse_dimacs(text)
    if cnf.num_vars > reduction.DEFAULT_ENUMERATION_CAP:
        print(
            f"warning: {cnf.num_vars} variables exceed the enumeration cap; "
            "the oracle decider will refuse this instance",
            file=sys.stderr,
        )
    inst = reduction.reduce_cnf_to_kraus(cnf)
    family = cp_map.expand_weights(inst.family) if args.expand_weights else inst.family
    Path(args.output_path).write_text(
        render_kraus_file(KrausFile(family, inst, args.expand_weights)), encoding="utf-8"
    )
    report.add("num_vars", cnf.num_vars)
    report.add("num_clauses", cnf.num_clauses)
    report.add("n", inst.n)
    report.add("m0", inst.m0)
    report.add("L", inst.scale)
    report.add("expanded_m", inst.expanded_m)
    report.add("operators_written", len(family.ops))
    out.write(report.finish("OK", "reduction"))
    return EXIT_HOLDS


def _parse_assignment(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError as exc:
        raise UsageError(f"bad assignment {text!r}") from exc
    if not vals or any(v not in (1, -1) for v in vals):
        raise UsageError("assignment values must be +1 or -1")
    return vals


def cmd_certify(args, out) -> int:
    report = _Report("certify")
    kf = _load(args.path)
    psi = kf.family
    if args.assignment is not None:
        if kf.provenance is None:
            raise UsageError("--assignment needs a file with a reduction provenance block")
        a = _parse_assignment(args.assignment)
        if len(a) != kf.provenance.cnf.num_vars:
            raise UsageError(f"assignment needs {kf.provenance.cnf.num_vars} values")
        x = reduction.assignment_vector(kf.provenance, a)
        witness = positivity.BilinearWitness(x, x)
        mode = "assignment"
        report.add("assignment", " ".join(str(v) for v in a))
    else:
        try:
            witness = parse_witness(Path(args.witness).read_text(encoding="utf-8"))
        except OSError as exc:
            raise FormatError(f"cannot read {args.witness}: {exc}") from exc
        mode = "witness"
    if witness.n != psi.n:
        raise FormatError(f"witness length {witness.n} does not match n = {psi.n}")
    report.add("witness_x", format_vector(witness.x))
    report.add("witness_y", format_vector(witness.y))
    residuals = positivity.witness_residuals(psi, witness)
    for idx, value in residuals:
        report.add("residual", f"{idx} {format_scalar(value)}")
    ok = not residuals
    out.write(report.finish("VALID" if ok else "INVALID", mode))
    return EXIT_HOLDS if ok else EXIT_FAILS


def cmd_oracle(args, out) -> int:
    report = _Report(f"oracle-{args.mode}")
    if args.mode == "sat":
        try:
            text = Path(args.path).read_text(encoding="utf-8")
        except OSError as exc:
            raise FormatError(f"cannot read {args.path}: {exc}") from exc
        cnf = reduction.parse_dimacs(text)
        sat, a = oracles.sat_brute_force(cnf)
        report.add("sat", _bool(sat))
        if a is not None:
            report.add("assignment", " ".join(str(v) for v in a))
        out.write(report.finish("SAT" if sat else "UNSAT", "brute-force"))
        return EXIT_HOLDS if sat else EXIT_FAILS

    kf = _load(args.path)
    pattern = oracles.classical_pattern(kf.family)
    g = oracles.digraph(pattern)
    sc = oracles.strongly_connected(g)
    per = oracles.period(g) if sc else None
    pos = oracles.entrywise_positive(pattern)
    report.add(
        "classical",
        f"strongly_connected={_bool(sc)} period={'none' if per is None else per} entrywise_positive={_bool(pos)}",
    )
    report.add("power_positive", _bool(oracles.classical_power_positivity(pattern)))
    primitive = sc and per == 1
    out.write(report.finish("PRIMITIVE" if primitive else "NOT_PRIMITIVE", "classical"))
    return EXIT_HOLDS if primitive else EXIT_FAILS


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="krausmaps", description="Perron-Frobenius properties of Kraus maps.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="decide irreducibility, primitivity or strict positivity")
    p.add_argument("path")
    p.add_argument("--property", required=True, choices=["irreducible", "primitive", "strict-positive"])
    p.add_argument("--starts", type=int, default=positivity.DEFAULT_STARTS)
    p.add_argument("--seed", type=int, default=positivity.DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=positivity.DEFAULT_TOL)
    p.add_argument("--allow-nonunital", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", help="reduce a DIMACS 3-CNF to a Kraus file")
    p.add_argument("cnf_path")
    p.add_argument("output_path")
    p.add_argument("--expand-weights", action="store_true")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("certify", help="verify a certificate of non-strict-positivity")
    p.add_argument("path")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--assignment")
    g.add_argument("--witness")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("oracle", help="run a classical oracle")
    p.add_argument("path")
    p.add_argument("--mode", required=True, choices=["sat", "classical"])
    p.set_defaults(func=cmd_oracle)
    return parser


def _property_name(args) -> str:
    command = getattr(args, "command", None)
    if command == "check":
        return args.property
    if command == "oracle":
        return f"oracle-{args.mode}"
    return command or "usage"


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        out.write("STATUS usage ERROR none\n")
        return EXIT_ERROR
    try:
        return args.func(args, out)
    except (UsageError, FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        out.write(f"STATUS {_property_name(args)} ERROR none\n")
        return EXIT_ERROR


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
