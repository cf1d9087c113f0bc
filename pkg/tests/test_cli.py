import io
import random
import re
import subprocess
import sys
from fractions import Fraction

import pytest

from krausmaps.cli import main
from krausmaps.cp_map import verify_unital
from krausmaps.kraus_file import KrausFile, parse_kraus_file, render_kraus_file, render_witness
from krausmaps.oracles import StochasticMatrix, stochastic_embed
from krausmaps.positivity import BilinearWitness

from conftest import depolarizer_family, identity_family, rand_family, swap_family

UNSAT = "p cnf 2 4\n1 2 2 0\n1 -2 -2 0\n-1 2 2 0\n-1 -2 -2 0\n"
ONE_CLAUSE = "p cnf 2 1\n1 2 2 0\n"


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue()


def fields(report):
    out = {}
    for line in report.splitlines():
        key, _, value = line.partition(" ")
        out.setdefault(key, value)
    return out


def status(report):
    lines = [l for l in report.splitlines() if l.startswith("STATUS ")]
    assert len(lines) == 1 and report.splitlines()[-1] == lines[0]
    return lines[0].split()[1:]


@pytest.fixture
def write(tmp_path):
    def _write(name, family=None, text=None):
        p = tmp_path / name
        p.write_text(text if text is not None else render_kraus_file(KrausFile(family)))
        return p

    return _write


class TestCheck:
    def test_identity_strict(self, write):
        code, out = run("check", write("id.kraus", identity_family()), "--property", "strict-positive")
        assert code == 1 and status(out) == ["strict-positive", "NOT_STRICTLY_POSITIVE", "exact-n2"]
        assert "witness_x" in fields(out)

    def test_swap(self, write):
        path = write("swap.kraus", swap_family())
        code, out = run("check", path, "--property", "irreducible")
        assert code == 0 and status(out)[1] == "IRREDUCIBLE"
        code, out = run("check", path, "--property", "primitive")
        assert code == 1 and status(out)[1] == "NOT_PRIMITIVE"
        assert fields(out)["wielandt_q"] == "none"

    def test_depolarizer(self, write):
        code, out = run("check", write("dep.kraus", depolarizer_family()), "--property", "strict-positive")
        assert code == 0 and status(out)[1:] == ["STRICTLY_POSITIVE", "exact-n2"]

    def test_numeric_fallback(self, write):
        fam = rand_family(random.Random(1), 3, 3)
        code, out = run("check", write("r3.kraus", fam), "--property", "strict-positive",
                        "--allow-nonunital", "--starts", "4")
        assert status(out)[2] == "numeric"
        assert code in (1, 2)
        assert "numeric_margin" in fields(out)

    def test_nonunital_refused(self, write):
        fam = rand_family(random.Random(2), 2, 2)
        path = write("nu.kraus", fam)
        code, out = run("check", path, "--property", "strict-positive")
        assert code == 3 and status(out) == ["strict-positive", "ERROR", "none"]
        code, _ = run("check", path, "--property", "strict-positive", "--allow-nonunital")
        assert code in (0, 1)

    def test_reduced_satisfiable(self, tmp_path):
        cnf = tmp_path / "a.cnf"
        cnf.write_text(ONE_CLAUSE)
        out_path = tmp_path / "a.kraus"
        assert run("reduce", cnf, out_path)[0] == 0
        code, out = run("check", out_path, "--property", "strict-positive")
        assert code == 1 and status(out)[2] == "oracle-reduced"
        assert fields(out)["assignment"] == "1 1"

    def test_reduced_unsat(self, tmp_path):
        cnf = tmp_path / "u.cnf"
        cnf.write_text(UNSAT)
        assert run("reduce", cnf, tmp_path / "u.kraus")[0] == 0
        code, out = run("check", tmp_path / "u.kraus", "--property", "strict-positive")
        assert code == 0 and status(out)[1:] == ["STRICTLY_POSITIVE", "oracle-reduced"]


class TestReduce:
    def test_counts(self, tmp_path):
        cnf = tmp_path / "a.cnf"
        cnf.write_text(ONE_CLAUSE)
        code, out = run("reduce", cnf, tmp_path / "a.kraus")
        f = fields(out)
        assert code == 0 and (f["n"], f["m0"], f["L"]) == ("5", "20", "15")
        kf = parse_kraus_file((tmp_path / "a.kraus").read_text())
        assert verify_unital(kf.family)

    def test_expand(self, tmp_path):
        cnf = tmp_path / "a.cnf"
        cnf.write_text(ONE_CLAUSE)
        code, out = run("reduce", cnf, tmp_path / "b.kraus", "--expand-weights")
        f = fields(out)
        assert code == 0 and f["operators_written"] == f["expanded_m"]
        kf = parse_kraus_file((tmp_path / "b.kraus").read_text())
        assert len(kf.family.ops) == int(f["expanded_m"])

    def test_bad_cnf(self, tmp_path):
        cnf = tmp_path / "bad.cnf"
        cnf.write_text("p cnf 2 1\n1 2 0\n")
        code, out = run("reduce", cnf, tmp_path / "x.kraus")
        assert code == 3 and status(out) == ["reduce", "ERROR", "none"]


class TestCertify:
    @pytest.fixture
    def reduced(self, tmp_path):
        cnf = tmp_path / "a.cnf"
        cnf.write_text(ONE_CLAUSE)
        run("reduce", cnf, tmp_path / "a.kraus")
        return tmp_path / "a.kraus"

    def test_satisfying_assignment(self, reduced):
        code, out = run("certify", reduced, "--assignment", "1,1")
        assert code == 0 and status(out)[1] == "VALID"

    def test_violating_assignment(self, reduced):
        code, out = run("certify", reduced, "--assignment=-1,-1")
        assert code == 1 and status(out)[1] == "INVALID"
        residual = [l for l in out.splitlines() if l.startswith("residual ")]
        assert residual and residual[0].split()[1] == "0"

    def test_witness_on_swap(self, write, tmp_path):
        w = tmp_path / "w.txt"
        w.write_text(render_witness(BilinearWitness([1, 0], [1, 0])))
        code, out = run("certify", write("swap.kraus", swap_family()), "--witness", w)
        assert code == 0 and status(out)[1:] == ["VALID", "witness"]

    def test_bad_witness(self, write, tmp_path):
        w = tmp_path / "w.txt"
        w.write_text(render_witness(BilinearWitness([1, 0], [1, 0])))
        code, out = run("certify", write("id.kraus", identity_family()), "--witness", w)
        assert code == 1 and "residual 0 1/1" in out

    def test_assignment_needs_provenance(self, write):
        code, _ = run("certify", write("swap.kraus", swap_family()), "--assignment", "1")
        assert code == 3

    def test_wrong_length(self, reduced):
        assert run("certify", reduced, "--assignment", "1")[0] == 3


class TestOracle:
    def test_unsat(self, tmp_path):
        p = tmp_path / "u.cnf"
        p.write_text(UNSAT)
        code, out = run("oracle", p, "--mode", "sat")
        assert code == 1 and status(out)[1:] == ["UNSAT", "brute-force"]

    def test_permutation(self, write):
        fam = stochastic_embed(StochasticMatrix([[0, 1], [1, 0]]))
        code, out = run("oracle", write("perm.kraus", fam), "--mode", "classical")
        assert "strongly_connected=true period=2" in out and code == 1

    def test_positive(self, write):
        fam = stochastic_embed(StochasticMatrix([[Fraction(1, 2)] * 2] * 2))
        code, out = run("oracle", write("pos.kraus", fam), "--mode", "classical")
        assert "entrywise_positive=true" in out and code == 0

    def test_not_classical(self, write):
        code, out = run("oracle", write("id.kraus", identity_family()), "--mode", "classical")
        assert code == 3 and status(out) == ["oracle-classical", "ERROR", "none"]


class TestErrors:
    def test_usage(self):
        code, out = run("check")
        assert code == 3 and out == "STATUS usage ERROR none\n"

    def test_missing_file(self, tmp_path):
        code, out = run("check", tmp_path / "nope.kraus", "--property", "irreducible")
        assert code == 3 and status(out) == ["irreducible", "ERROR", "none"]

    def test_malformed_file(self, write):
        code, _ = run("check", write("bad.kraus", text="krausfile 1\nn x\n"), "--property", "irreducible")
        assert code == 3


def strip_time(text):
    return re.sub(r"^time_seconds .*$", "", text, flags=re.M)


def test_deterministic_reports(write):
    fam = rand_family(random.Random(5), 3, 2)
    path = write("r.kraus", fam)
    args = ("check", path, "--property", "strict-positive", "--allow-nonunital", "--starts", "6", "--seed", "4")
    assert strip_time(run(*args)[1]) == strip_time(run(*args)[1])


def test_console_script(write):
    path = write("swap.kraus", swap_family())
    proc = subprocess.run(
        [sys.executable, "-m", "krausmaps", "check", str(path), "--property", "irreducible"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.splitlines()[-1] == "STATUS irreducible IRREDUCIBLE algebra-closure"
