import io

import pytest
from hypothesis import given

from max2sat.formula import (FALSE, TRUE, Assignment, Clause, Formula, FormulaError, Instance,
                             Literal, ParseError, count_satisfied, count_violations,
                             is_satisfiable, read_jsonl, read_wcnf, violations_matrix,
                             write_jsonl, write_wcnf)
from max2sat.ensemble import EnsembleSpec, generate_instances
from strategies import SINGLE_EDGE_UNSAT, all_assignments, formulas, formulas_with_assignment

X12 = Formula.from_dimacs(2, [(1, 2)])


def test_single_clause_satisfied_and_violated():
    assert count_violations(X12, Assignment([TRUE, TRUE])) == 0
    assert count_violations(X12, Assignment([FALSE, FALSE])) == 1


@pytest.mark.parametrize("bits", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_single_edge_formula_violates_exactly_one(bits):
    assert count_violations(SINGLE_EDGE_UNSAT, bits) == 1


def test_is_satisfiable():
    assert is_satisfiable(X12, 0)
    assert not is_satisfiable(X12, 1)
    assert not is_satisfiable(SINGLE_EDGE_UNSAT, 1)


def test_literal_truth_convention():
    assert Literal(0).is_true(TRUE)
    assert not Literal(0).is_true(FALSE)
    assert Literal(0, True).is_true(FALSE)
    assert (-Literal(3)).negated and Literal.from_code(Literal(3, True).code) == Literal(3, True)


def test_self_pair_rejected():
    with pytest.raises(FormulaError):
        Clause(Literal(1), Literal(1, True))


def test_canonical_order_dedups():
    a = Clause(Literal(1), Literal(0))
    b = Clause(Literal(0), Literal(1))
    assert a == b and a.first.variable == 0
    with pytest.raises(FormulaError):
        Formula(2, (a, b))


def test_out_of_range_variable_rejected():
    with pytest.raises(FormulaError):
        Formula(2, (Clause(Literal(0), Literal(2)),))


def test_assignment_length_checked():
    with pytest.raises(FormulaError):
        count_violations(X12, [0])


def test_used_variables_and_density():
    f = Formula.from_dimacs(5, [(1, -3)])
    assert f.used_variables == frozenset({0, 2})
    assert f.clause_density == pytest.approx(0.2)


@given(formulas_with_assignment())
def test_violations_plus_satisfied_is_m(fa):
    f, bits = fa
    v = count_violations(f, bits)
    assert 0 <= v <= f.m
    assert v + count_satisfied(f, bits) == f.m


@given(formulas(max_n=6))
def test_vectorised_count_matches_scalar(f):
    bits = all_assignments(f.n_declared)
    vec = violations_matrix(f, bits)
    assert vec.tolist() == [count_violations(f, b) for b in bits]


# --- WCNF -----------------------------------------------------------------------------

def test_read_minimal_wcnf():
    f = read_wcnf(b"p wcnf 2 1 2\n1 1 2 0\n")
    assert f == X12


def test_write_sign_convention():
    f = Formula.from_dimacs(2, [(1, -2)])
    assert write_wcnf(f) == b"p wcnf 2 1 2\n1 1 -2 0\n"


def test_read_skips_comments():
    f = read_wcnf("c hello\np wcnf 3 1 2\nc mid\n1 -1 3 0\n")
    assert f.dimacs_pairs() == [[-1, 3]]


@pytest.mark.parametrize("text,line", [
    ("p cnf 2 1\n1 2 0\n", 1),
    ("p wcnf 2 1 2\n1 1 2\n", 2),
    ("p wcnf 2 1 2\n2 1 2 0\n", 2),
    ("p wcnf 2 1 2\n1 1 3 0\n", 2),
    ("p wcnf 2 1 2\n1 1 2 3 0\n", 2),
    ("p wcnf 2 2 3\n1 1 2 0\n", None),
])
def test_malformed_wcnf_reports_line(text, line):
    with pytest.raises(ParseError) as exc:
        read_wcnf(text)
    if line is not None:
        assert exc.value.lineno == line


@given(formulas(max_n=10))
def test_wcnf_round_trip(f):
    assert read_wcnf(write_wcnf(f)).same_clauses(f)
    assert write_wcnf(read_wcnf(write_wcnf(f))) == write_wcnf(f)


def test_ensemble_file_round_trips_byte_identically():
    spec = EnsembleSpec("random", 20, 500, seed=11, alpha=1.3)
    buf = io.StringIO()
    write_jsonl(generate_instances(spec), buf)
    first = buf.getvalue()
    again = io.StringIO()
    write_jsonl(read_jsonl(io.StringIO(first)), again)
    assert again.getvalue() == first
    for inst in read_jsonl(io.StringIO(first)):
        assert read_wcnf(write_wcnf(inst.formula)) == inst.formula


def test_jsonl_bad_record_has_line_number():
    with pytest.raises(ParseError) as exc:
        list(read_jsonl(io.StringIO('{"id": "a"}\n')))
    assert exc.value.lineno == 1


def test_instance_record_fields():
    inst = Instance("x", 5, 1.0, "random", X12)
    assert inst.to_record() == {"id": "x", "seed": 5, "n": 2, "alpha": 1.0,
                                "ensemble": "random", "clauses": [[1, 2]]}
