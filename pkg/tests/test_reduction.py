import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcount.errors import BudgetRefusal, InputError, ParseError
from vcount.exact import count_exact
from vcount.reduction import (
    CnfFormula,
    brute_sat_count,
    cnf_to_instance,
    faithful_network,
    format_dimacs,
    fused_network,
    parse_dimacs_text,
    random_3cnf,
)


def cnf(k, *clauses):
    return CnfFormula(k, tuple(tuple(c) for c in clauses))


@st.composite
def formulas(draw, max_vars=6, max_clauses=8):
    k = draw(st.integers(1, max_vars))
    lit = st.integers(1, k).flatmap(lambda v: st.sampled_from([v, -v]))
    clauses = draw(st.lists(st.lists(lit, min_size=1, max_size=3), max_size=max_clauses))
    return CnfFormula(k, tuple(tuple(c) for c in clauses))


class TestReductionExamples:
    def test_unit_clause(self):
        assert count_exact(cnf_to_instance(cnf(1, [1]))).violations == 1

    def test_tautology(self):
        assert count_exact(cnf_to_instance(cnf(1, [1, -1]))).violations == 2

    def test_two_clauses(self):
        f = cnf(3, [1, 2], [-1, 3])
        assert brute_sat_count(f) == 4
        assert count_exact(cnf_to_instance(f)).violations == 4

    def test_faithful_layers(self):
        f = cnf(3, [1, 2], [-1, 3])
        inst = cnf_to_instance(f, faithful_layers=True)
        assert len(inst.network.layers) == 4
        assert count_exact(inst).violations == 4

    def test_rejects_wide_clause(self):
        with pytest.raises(InputError):
            cnf_to_instance(cnf(4, [1, 2, 3, 4]))


class TestBruteCount:
    def test_three_literal_clause(self):
        assert brute_sat_count(cnf(3, [1, 2, 3])) == 7

    def test_unsat(self):
        assert brute_sat_count(cnf(1, [1], [-1])) == 0

    def test_empty_formula(self):
        f = cnf(4)
        assert brute_sat_count(f) == 16
        assert count_exact(cnf_to_instance(f)).violations == 16

    def test_var_cap(self):
        with pytest.raises(BudgetRefusal):
            brute_sat_count(cnf(25, [1]))


class TestGadgets:
    @settings(max_examples=60, deadline=None)
    @given(formulas())
    def test_output_range(self, f):
        n = len(f.clauses)
        for net in (fused_network(f), faithful_network(f)):
            for bits in itertools.product((0, 1), repeat=f.num_vars):
                y = net.forward(np.array(bits, dtype=float))[0]
                assert y == int(y) and 0 <= y <= n
                assert (y == n) == f.satisfied_by(bits)

    def test_literal_gadget(self):
        f = cnf(3, [1, -2, 3])
        net = faithful_network(f)
        for bits in itertools.product((0, 1), repeat=3):
            x = np.array(bits, dtype=float)
            first = np.maximum(net.layers[0].weights @ x + net.layers[0].biases, 0)
            assert first.tolist() == [v for b in bits for v in (b, 1 - b)]


class TestDimacs:
    def test_simple(self):
        f = parse_dimacs_text("p cnf 2 1 \n 1 -2 0")
        assert f == cnf(2, [1, -2])

    def test_comments_and_multiline_clause(self):
        f = parse_dimacs_text("c hi\np cnf 3 2\n1 2\n3 0 -1 0\n")
        assert f.clauses == ((1, 2, 3), (-1,))

    def test_unterminated(self):
        with pytest.raises(ParseError):
            parse_dimacs_text("p cnf 2 1\n1 -2\n")

    def test_literal_out_of_range(self):
        with pytest.raises(ParseError) as err:
            parse_dimacs_text("p cnf 2 1\n1 3 0\n")
        assert err.value.context["line"] == 2

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse_dimacs_text("1 2 0\n")

    @settings(max_examples=100, deadline=None)
    @given(formulas(max_vars=12, max_clauses=15))
    def test_round_trip(self, f):
        assert parse_dimacs_text(format_dimacs(f, ["generated"])) == f

    def test_random_generator(self):
        f = random_3cnf(np.random.default_rng(0), 10, 15)
        assert f.num_vars == 10 and len(f.clauses) == 15 and f.max_width <= 3
