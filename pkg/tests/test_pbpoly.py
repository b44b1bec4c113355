import itertools

import pytest
from hypothesis import given, settings, strategies as st

from carryfactor.pbpoly import (
    Polynomial,
    Role,
    UnboundVariableError,
    VarId,
    aux,
    carry_bit,
    p_bit,
    q_bit,
)

VARS = [p_bit(1), p_bit(2), q_bit(1), carry_bit(2, 0), aux(0)]

monomials = st.frozensets(st.sampled_from(VARS), max_size=3).map(tuple)
polys = st.dictionaries(monomials, st.integers(-20, 20), max_size=6).map(Polynomial)
assignments = st.fixed_dictionaries({v: st.integers(0, 1) for v in VARS})


def brute_eval(terms, a):
    total = 0
    for mono, c in terms.items():
        prod = c
        for v in mono:
            prod *= a[v]
        total += prod
    return total


def test_var_names():
    assert str(p_bit(3)) == "p3"
    assert str(q_bit(0)) == "q0"
    assert str(carry_bit(4, 1)) == "c4_1"
    assert str(aux(2)) == "a2"
    assert VarId.from_json(carry_bit(4, 1).to_json()) == carry_bit(4, 1)
    assert carry_bit(4, 1).role == Role.CARRY


def test_idempotent_product():
    x = Polynomial.var(p_bit(1))
    assert x * x == x
    assert (1 - x) * x == 0
    assert (x + 1) ** 2 == 3 * x + 1


def test_zero_terms_dropped():
    x = Polynomial.var(p_bit(1))
    assert len(x - x) == 0
    assert not (x - x)
    assert Polynomial.const(0) == 0


def test_square_of_column_expression():
    p1, q1 = Polynomial.var(p_bit(1)), Polynomial.var(q_bit(1))
    e = (p1 + q1 - 1) ** 2
    for a, b in itertools.product((0, 1), repeat=2):
        assert e.evaluate({p_bit(1): a, q_bit(1): b}) == (a + b - 1) ** 2


def test_unbound_variable():
    x = Polynomial.var(p_bit(1)) * Polynomial.var(q_bit(1))
    with pytest.raises(UnboundVariableError) as info:
        x.evaluate({p_bit(1): 0})
    assert info.value.var == q_bit(1)


def test_bad_value_rejected():
    with pytest.raises(ValueError):
        Polynomial.var(p_bit(1)).evaluate({p_bit(1): 2})


@given(polys, polys, polys)
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == 0


@given(polys, polys, assignments)
def test_evaluation_is_homomorphic(a, b, x):
    assert (a + b).evaluate(x) == a.evaluate(x) + b.evaluate(x)
    assert (a * b).evaluate(x) == a.evaluate(x) * b.evaluate(x)
    assert a.evaluate(x) == brute_eval(a.terms, x)


@given(polys, assignments)
def test_fix_agrees_with_evaluate(a, x):
    partial = {v: x[v] for v in VARS[:2]}
    rest = {v: x[v] for v in VARS[2:]}
    assert a.fix(partial).evaluate(rest) == a.evaluate(x)
    assert a.fix(x).degree == 0
    assert a.fix(x).constant == a.evaluate(x)


@settings(max_examples=50)
@given(polys)
def test_bounds_contain_every_value(a):
    lo, hi = a.bounds()
    values = [a.evaluate(dict(zip(VARS, bits))) for bits in itertools.product((0, 1), repeat=len(VARS))]
    assert lo <= min(values) and max(values) <= hi


@given(polys)
def test_json_round_trip(a):
    assert Polynomial.from_json(a.to_json()) == a


def test_huge_coefficients_stay_exact():
    big = 1 << 120
    x = Polynomial.var(p_bit(1), big)
    assert (x * x).coeff(p_bit(1)) == big * big
    assert Polynomial.from_json((x + 3).to_json()).coeff(p_bit(1)) == big
