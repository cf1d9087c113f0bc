import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krausmaps.cp_map import expand_weights, expanded_count, verify_unital
from krausmaps.exact_linalg import GaussianRational, Mat
from krausmaps.oracles import sat_brute_force
from krausmaps.positivity import BilinearWitness, Status, check, verify_witness, witness_residuals
from krausmaps.reduction import (
    GROUP_AUX,
    GROUP_CLAUSE,
    GROUP_SQUARE,
    Certificate,
    Cnf,
    DimacsError,
    ReductionError,
    assignment_vector,
    build_system,
    decide_reduced_instance,
    decode_witness,
    encode_assignment,
    normalize_clauses,
    parse_dimacs,
    reduce_cnf_to_kraus,
    satisfies,
)

G = GaussianRational
UNSAT_2 = Cnf(2, ((1, 2, 2), (1, -2, -2), (-1, 2, 2), (-1, -2, -2)))


def random_cnf(rng, n_max=8, m_max=8):
    big_n = rng.randint(2, n_max)
    clauses = []
    for _ in range(rng.randint(1, m_max)):
        a, b = rng.sample(range(1, big_n + 1), 2)
        c = rng.randint(1, big_n)
        clauses.append(tuple(v * rng.choice((1, -1)) for v in (a, b, c)))
    return Cnf(big_n, tuple(clauses))


def allowed_entries(scale):
    base = {Fraction(0), Fraction(1, scale), Fraction(1, 3 * scale)}
    return base | {-v for v in base}


class TestParse:
    def test_single_clause(self):
        cnf = parse_dimacs("p cnf 3 1\n1 2 3 0\n")
        assert cnf.num_vars == 3 and cnf.clauses == ((1, 2, 3),)

    def test_comments_and_wrapping(self):
        cnf = parse_dimacs("c hello\np cnf 3 2\n1 -2\n 3 0 -1 2 -3\n0\n%\n0\n")
        assert cnf.clauses == ((1, -2, 3), (-1, 2, -3))

    def test_reorders_repeated_variable(self):
        cnf = parse_dimacs("p cnf 2 1\n1 -1 2 0\n")
        (c,) = cnf.clauses
        assert abs(c[0]) != abs(c[1]) and sorted(c) == [-1, 1, 2]

    def test_tautology_dropped(self):
        cnf = parse_dimacs("p cnf 2 2\n1 -1 1 0\n1 2 -2 0\n")
        assert cnf.num_clauses == 1

    def test_uniform_clause_adds_variables(self):
        cnf = parse_dimacs("p cnf 1 1\n1 1 1 0\n")
        assert cnf.num_vars > 1
        assert all(abs(c[0]) != abs(c[1]) for c in cnf.clauses)

    @pytest.mark.parametrize(
        "text",
        [
            "1 2 3 0\n",
            "p cnf 3 1\n1 2 0\n",
            "p cnf 3 1\n1 2 3 4 0\n",
            "p cnf 3 1\n1 2 x 0\n",
            "p cnf 3 2\n1 2 3 0\n",
            "p cnf 3 1\n1 2 3\n",
            "p cnf 2 1\n1 2 3 0\n",
            "p dnf 3 1\n1 2 3 0\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(DimacsError):
            parse_dimacs(text)

    def test_round_trip(self, rng):
        for _ in range(20):
            cnf = random_cnf(rng)
            assert parse_dimacs(cnf.to_dimacs()) == cnf

    def test_cnf_invariants(self):
        with pytest.raises(ValueError):
            Cnf(2, ((1, 1, 2),))
        with pytest.raises(ValueError):
            Cnf(2, ((1, 3, 2),))


class TestDegenerateClauses:
    def test_equisatisfiable_by_brute_force(self):
        lits = [1, -1, 2, -2, 3, -3]
        for raw in itertools.product(itertools.product(lits, repeat=3), repeat=2):
            norm = normalize_clauses(3, raw)
            original = any(
                all(any((l > 0) == (a[abs(l) - 1] > 0) for l in c) for c in raw)
                for a in itertools.product((1, -1), repeat=3)
            )
            assert sat_brute_force(norm)[0] == original, raw

    def test_uniform_pair_is_unsat(self):
        cnf = normalize_clauses(1, [(1, 1, 1), (-1, -1, -1)])
        assert not sat_brute_force(cnf)[0]
        assert not decide_reduced_instance(reduce_cnf_to_kraus(cnf))[0]


class TestBuildSystem:
    def test_counts_2_1(self):
        sys_ = build_system(Cnf(2, ((1, 2, 2),)))
        assert sys_.n == 5 and sys_.m0 == 20

    def test_counts_3_1(self):
        sys_ = build_system(Cnf(3, ((1, 2, 3),)))
        assert sys_.n == 6 and sys_.m0 == 27

    def test_first_square_matrix(self):
        sys_ = build_system(Cnf(2, ((1, 2, 2),)))
        k = sys_.tags.index((GROUP_SQUARE, 0, 1))
        assert sys_.mats[k] == Mat.unit(5, 1, 1) - Mat.unit(5, 0, 0)

    def test_clause_matrix_signs(self):
        # X1 or not X2 or X2: p = -1, q = +1, pq = -1, column N+M+1 = 4
        sys_ = build_system(Cnf(2, ((1, -2, 2),)))
        a = sys_.mats[sys_.tags.index((GROUP_CLAUSE, 1, 0))]
        expected = Mat.unit(5, 0, 4) - Mat.unit(5, 1, 4) + Mat.unit(5, 2, 4) - Mat.unit(5, 3, 4)
        assert a == expected

    def test_groups_in_order_and_entries(self, rng):
        for _ in range(10):
            sys_ = build_system(random_cnf(rng))
            groups = [t[0] for t in sys_.tags]
            assert groups == sorted(groups)
            for a in sys_.mats:
                assert all(v in (1, -1) for _, _, v in a.nonzeros())

    def test_gram_diagonal_bound(self, rng):
        for _ in range(10):
            cnf = random_cnf(rng)
            sys_ = build_system(cnf)
            bound = 2 * cnf.num_vars + 7 * cnf.num_clauses + 4
            assert sys_.gram.is_diagonal()
            assert all(sys_.gram[j, j].re <= bound for j in range(sys_.n))


class TestUnitalize:
    def test_scale_and_entries(self):
        inst = reduce_cnf_to_kraus(Cnf(2, ((1, 2, 2),)))
        assert inst.scale == 15
        allowed = allowed_entries(15)
        for v in inst.family.matrices:
            assert all(e.is_real() and e.re in allowed for e in v.entries)

    def test_unital_and_counts(self, rng):
        for _ in range(15):
            cnf = random_cnf(rng)
            inst = reduce_cnf_to_kraus(cnf)
            big_n, big_m = cnf.num_vars, cnf.num_clauses
            assert verify_unital(inst.family)
            assert inst.n == big_n + 2 * big_m + 1
            assert inst.m0 == big_n + 3 * big_m + inst.n * (4 * big_m + big_n) // 2
            assert inst.expanded_m == inst.m0 + 3 * sum(inst.multiplicities)
            assert expanded_count(inst.family) == inst.expanded_m
            assert all(inst.diagonal[j] + inst.multiplicities[j] == inst.scale**2 for j in range(inst.n))

    def test_special_matrices_isolate_coordinates(self):
        inst = reduce_cnf_to_kraus(Cnf(3, ((1, -2, 3), (-1, 2, 3))))
        for j, k in enumerate(inst.special_indices):
            a = inst.system.mats[k]
            assert inst.system.tags[k][0] == GROUP_AUX
            assert a.adjoint() @ a == Mat.unit(inst.n, j, j, 3)

    def test_expansion_small(self):
        inst = reduce_cnf_to_kraus(Cnf(2, ((1, 2, 2),)))
        big = expand_weights(inst.family)
        assert len(big.ops) == inst.expanded_m
        assert verify_unital(big)
        w = encode_assignment(inst, (1, 1))
        assert verify_witness(big, w)

    def test_no_clauses(self):
        with pytest.raises(ReductionError):
            reduce_cnf_to_kraus(Cnf(2, ()))


class TestCertificates:
    def test_encode_example(self):
        inst = reduce_cnf_to_kraus(Cnf(2, ((1, 2, 2),)))
        w = encode_assignment(inst, (1, 1))
        assert w.x == w.y == tuple(G(v) for v in (1, 1, 1, 1, 0))
        assert witness_residuals(inst.family, w) == []

    def test_violated_assignment(self):
        inst = reduce_cnf_to_kraus(Cnf(2, ((1, 2, 2),)))
        with pytest.raises(ValueError):
            encode_assignment(inst, (-1, -1))
        x = assignment_vector(inst, (-1, -1))
        bad = witness_residuals(inst.family, BilinearWitness(x, x))
        assert bad and inst.system.tags[bad[0][0]][0] == GROUP_CLAUSE

    def test_low_coordinates_are_signs(self, rng):
        for _ in range(10):
            cnf = random_cnf(rng)
            inst = reduce_cnf_to_kraus(cnf)
            ok, cert = decide_reduced_instance(inst)
            if ok:
                limit = cnf.num_vars + cnf.num_clauses
                assert all(v in (G(1), G(-1)) for v in cert.witness.x[: limit + 1])

    def test_round_trip_and_scaling(self, rng):
        for _ in range(10):
            cnf = random_cnf(rng, 5, 4)
            inst = reduce_cnf_to_kraus(cnf)
            for a in itertools.product((1, -1), repeat=cnf.num_vars):
                if not satisfies(cnf, a):
                    continue
                w = encode_assignment(inst, a)
                assert decode_witness(inst, w) == a
                assert decode_witness(inst, w.scaled(2, 3)) == a
                assert decode_witness(inst, w.scaled(G(0, 1), G(1, -1))) == a

    def test_x0_zero_rejected(self):
        inst = reduce_cnf_to_kraus(Cnf(2, ((1, 2, 2),)))
        x = [G(0), G(1), G(0), G(0), G(0)]
        with pytest.raises(ValueError):
            decode_witness(inst, BilinearWitness(x, x))

    def test_certificate_exactly_one(self):
        with pytest.raises(ValueError):
            Certificate()
        with pytest.raises(ValueError):
            Certificate((1,), BilinearWitness([1], [1]))


class TestDecide:
    def test_satisfiable_single_clause(self):
        ok, cert = decide_reduced_instance(reduce_cnf_to_kraus(Cnf(3, ((1, 2, 3),))))
        assert ok and cert.witness is not None

    def test_unsat_four_clauses(self):
        assert not sat_brute_force(UNSAT_2)[0]
        inst = reduce_cnf_to_kraus(UNSAT_2)
        assert decide_reduced_instance(inst) == (False, None)
        v = check(inst.family)
        assert v.status is Status.STRICTLY_POSITIVE and v.method == "oracle-reduced"

    def test_matches_brute_force(self, rng):
        for _ in range(40):
            cnf = random_cnf(rng)
            inst = reduce_cnf_to_kraus(cnf)
            ok, cert = decide_reduced_instance(inst)
            assert ok == sat_brute_force(cnf)[0]
            if ok:
                assert verify_witness(inst.family, cert.witness)
                assert satisfies(cnf, decode_witness(inst, cert.witness))

    def test_cap(self):
        inst = reduce_cnf_to_kraus(Cnf(3, ((1, 2, 3),)))
        with pytest.raises(ValueError):
            decide_reduced_instance(inst, cap=2)

    @settings(max_examples=25, deadline=None)
    @given(st.data())
    def test_unsatisfied_assignments_never_verify(self, data):
        rng = random.Random(data.draw(st.integers(0, 10**6)))
        cnf = random_cnf(rng, 4, 4)
        inst = reduce_cnf_to_kraus(cnf)
        a = data.draw(st.tuples(*[st.sampled_from((1, -1))] * cnf.num_vars))
        x = assignment_vector(inst, a)
        assert verify_witness(inst.family, BilinearWitness(x, x)) == satisfies(cnf, a)
