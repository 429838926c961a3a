import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locdilate import StarSemigroup, StructuralError, builtin, cyclic_group, powerset_intersection, truncated_naturals


def test_powerset_two():
    sg = powerset_intersection(2)
    assert sg.n == 4
    assert sg.e == 3
    assert sg.validate().ok
    assert sg.product(1, 2) == 0
    assert list(sg.star) == [0, 1, 2, 3]
    assert sg.labels[3] == "{0,1}"
    assert not sg.is_group_with_inverse_star()


def test_noncommutative_table_rejected():
    # left-zero band on two elements with an adjoined identity 0
    mul = np.array([[0, 1, 2], [1, 1, 1], [2, 2, 2]])
    report = StarSemigroup(mul, [0, 1, 2], 0).validate()
    assert not report.ok
    assert report.violation.law == "commutativity"
    assert set(report.violation.witness) == {1, 2}
    with pytest.raises(StructuralError):
        StarSemigroup(mul, [0, 1, 2], 0).check()


def test_bad_involution():
    sg = StarSemigroup(cyclic_group(3).mul, [1, 2, 0], 0)
    report = sg.validate()
    assert report.violation.law == "involution"


def test_nonassociative():
    # commutative, but (1*1)*2 = 2 while 1*(1*2) = 1
    mul = np.array([[0, 1, 2], [1, 0, 0], [2, 0, 1]])
    report = StarSemigroup(mul, [0, 1, 2], 0).validate()
    assert report.violation.law == "associativity"
    a, b, c = report.violation.witness
    assert mul[mul[a, b], c] != mul[a, mul[b, c]]


def test_star_not_antimultiplicative():
    sg = StarSemigroup(truncated_naturals(2).mul, [0, 2, 1], 0)
    assert sg.validate().violation.law in {"star_product", "involution"}


def test_cyclic_group():
    sg = cyclic_group(4)
    assert sg.validate().ok
    assert list(sg.star) == [0, 3, 2, 1]
    assert sg.is_group_with_inverse_star()
    trivial = cyclic_group(1)
    assert trivial.n == 1 and trivial.validate().ok


def test_truncated_naturals():
    sg = truncated_naturals(3)
    assert sg.validate().ok
    assert sg.product(2, 3) == 3
    assert sg.product(1, 1) == 2


def test_structural_errors():
    with pytest.raises(StructuralError):
        StarSemigroup([[0, 1]], [0], 0)
    with pytest.raises(StructuralError):
        StarSemigroup([[0, 5], [5, 0]], [0, 1], 0)
    with pytest.raises(StructuralError):
        StarSemigroup([[0]], [0], 2)
    with pytest.raises(ValueError):
        builtin("free_monoid")


def test_json_round_trip():
    sg = powerset_intersection(3)
    assert StarSemigroup.from_json(sg.to_json()) == sg
    assert StarSemigroup.from_json({"builtin": {"kind": "cyclic_group", "params": {"n": 3}}}) == cyclic_group(3)
    with pytest.raises(StructuralError):
        StarSemigroup.from_json({"mul": [[0]], "star": [0], "e": 0, "n": 2})


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["powerset_intersection", "cyclic_group", "truncated_naturals"]), st.integers(1, 4))
def test_builtins_satisfy_axioms(kind, k):
    sg = builtin(kind, k)
    idx = np.arange(sg.n)
    assert np.array_equal(sg.mul[sg.e], idx)
    assert np.array_equal(sg.star[sg.star], idx)
    for a in range(sg.n):
        for b in range(sg.n):
            assert sg.star[sg.mul[a, b]] == sg.mul[sg.star[a], sg.star[b]]
