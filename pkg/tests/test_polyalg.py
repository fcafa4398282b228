from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from rungekit.polyalg import (CharacteristicError, ExactComplex, ModeError, MultiPoly,
                              PolySyntaxError, characteristic_directions_2d, check_hypotheses,
                              format_poly, parse_poly, poly_from_json, poly_to_json,
                              principal_part, slab_decompose)

X = sp.symbols("x1:4")


def to_sympy(p):
    out = 0
    for alpha, c in p.terms.items():
        c = sp.Rational(c.re.numerator, c.re.denominator) + sp.I * sp.Rational(c.im.numerator, c.im.denominator)
        out += c * sp.Mul(*[X[j] ** a for j, a in enumerate(alpha)])
    return sp.expand(out)


def apply_sympy(q, f_expr):
    """``Q(D) f`` with ``D_j = -i d/dx_j`` done by sympy."""
    out = 0
    for alpha, c in q.terms.items():
        c = sp.Rational(c.re.numerator, c.re.denominator) + sp.I * sp.Rational(c.im.numerator, c.im.denominator)
        g = f_expr
        for j, a in enumerate(alpha):
            for _ in range(a):
                g = -sp.I * sp.diff(g, X[j])
        out += c * g
    return sp.expand(out)


coeff = st.builds(lambda a, b, c: ExactComplex(Fraction(a, c), Fraction(b, c)),
                  st.integers(-4, 4), st.integers(-2, 2), st.integers(1, 3))


def polys(dim, max_exp=3):
    alpha = st.tuples(*[st.integers(0, max_exp)] * dim)
    return st.dictionaries(alpha, coeff, max_size=5).map(lambda t: MultiPoly(dim, t))


# parsing


def test_parse_heat_symbol():
    p = parse_poly("i*x1 + x2^2", 2)
    assert p.terms == {(1, 0): ExactComplex(0, 1), (0, 2): ExactComplex(1, 0)}


def test_parse_zero_and_cancellation():
    assert parse_poly("0", 3).terms == {}
    assert parse_poly("x1*x2 - x2*x1 + 7", 2) == MultiPoly.constant(2, 7)


@pytest.mark.parametrize("text", ["x1 +* 2", "x3", "(x1", "x1^", "2**x1", ""])
def test_parse_errors(text):
    with pytest.raises(PolySyntaxError):
        parse_poly(text, 2)


@given(polys(2))
@settings(max_examples=60, deadline=None)
def test_format_parse_roundtrip(p):
    assert parse_poly(format_poly(p), 2) == p


@given(polys(3))
@settings(max_examples=40, deadline=None)
def test_json_roundtrip(p):
    assert poly_from_json(poly_to_json(p)) == p


# arithmetic against sympy


@given(polys(2), polys(2))
@settings(max_examples=60, deadline=None)
def test_ring_operations_match_sympy(p, q):
    assert sp.expand(to_sympy(p + q) - (to_sympy(p) + to_sympy(q))) == 0
    assert sp.expand(to_sympy(p * q) - to_sympy(p) * to_sympy(q)) == 0
    assert sp.expand(to_sympy(p.pow(2)) - to_sympy(p) ** 2) == 0


@given(polys(2, 2), polys(2, 4))
@settings(max_examples=60, deadline=None)
def test_act_on_matches_sympy(q, f):
    assert to_sympy(q.act_on(f)) == apply_sympy(q, to_sympy(f))


@given(polys(1, 3), polys(1, 3), st.integers(-3, 3))
@settings(max_examples=40, deadline=None)
def test_shift_symbol_conjugates_exponential(q, p, lam):
    # Q(D)(p e^{i lam x}) = e^{i lam x} Q(D + lam) p
    e = sp.exp(sp.I * lam * X[0])
    lhs = sp.simplify(apply_sympy(q, to_sympy(p) * e) / e)
    rhs = to_sympy(q.shift_symbol((lam,)).act_on(p))
    assert sp.expand(lhs - rhs) == 0


def test_apply_operator_examples():
    x1 = parse_poly("x1", 1)
    assert x1.act_on(parse_poly("x1^2", 1)) == parse_poly("-2*i*x1", 1)
    f = parse_poly("x1^3 - 2", 1)
    assert MultiPoly.constant(1, 1).act_on(f) == f


def test_truncated_multiplication():
    p = parse_poly("1 + x1 + x2^2", 2)
    full = p.pow(3)
    assert p.pow(3, max_degree=2) == full.truncate(2)


def test_mode_mixing_rejected():
    with pytest.raises(ModeError):
        parse_poly("x1", 1) + parse_poly("x1", 1, exact=False)


# structure


def test_principal_part_examples():
    assert principal_part(parse_poly("i*x1 + x2^2", 2)) == parse_poly("x2^2", 2)
    p = parse_poly("x1^2 + 3*x1*x2", 2)
    assert principal_part(p) == p
    assert principal_part(parse_poly("x1^3 + x1*x2^2 + x2", 2)) == parse_poly("x1^3 + x1*x2^2", 2)


def test_slab_decompose_heat():
    dec = slab_decompose(parse_poly("i*x1 + x2^2", 2))
    assert dec.m == 2
    assert dec.q_list == (parse_poly("i*x1", 1), MultiPoly.zero(1), MultiPoly.constant(1, 1))
    assert dec.reassemble() == dec.base


def test_slab_decompose_schrodinger_example():
    dec = slab_decompose(parse_poly("-x1 + x2^2", 2))
    assert dec.q_list == (parse_poly("-x1", 1), MultiPoly.zero(1), MultiPoly.constant(1, 1))


def test_slab_decompose_monomial():
    dec = slab_decompose(parse_poly("x3^3", 3))
    assert all(q.is_zero for q in dec.q_list[:3]) and dec.q_list[3] == MultiPoly.constant(2, 1)


def test_slab_decompose_normalizes_lead():
    dec = slab_decompose(parse_poly("2*x2^2 + x1", 2))
    assert dec.leading_coeff == ExactComplex(2)
    assert dec.q_list[0] == parse_poly("1/2*x1", 1)


@given(polys(3, 2))
@settings(max_examples=40, deadline=None)
def test_reassembly_property(p):
    p = p + parse_poly("x3^3", 3)
    if p.degree != 3:
        return
    dec = slab_decompose(p, normalize=False)
    assert dec.reassemble() == p


def test_characteristic_normal_rejected():
    with pytest.raises(CharacteristicError):
        slab_decompose(parse_poly("x1*x2", 2))


def test_hypotheses_heat_and_schrodinger():
    for text in ("i*x1 + x2^2", "-x1 - x2^2", "-x1 + x2^2"):
        rep = check_hypotheses(slab_decompose(parse_poly(text, 2)))
        assert rep.e1_characteristic and rep.ed_noncharacteristic and rep.degx1_ok
        assert rep.gamma == Fraction(1, 2)
        assert rep.single_direction == "exact-verified"
        assert rep.structural_pass


def test_hypotheses_wave_operator_fails():
    rep = check_hypotheses(slab_decompose(parse_poly("x2^2 - x1^2", 2)))
    assert not rep.e1_characteristic
    assert not rep.structural_pass


def test_characteristic_directions():
    assert characteristic_directions_2d(parse_poly("i*x1 + x2^2", 2)) == [(1.0, 0.0)]
    assert characteristic_directions_2d(parse_poly("x1^2 + x2^2", 2)) == []
    assert characteristic_directions_2d(parse_poly("x1*x2", 2)) == [(1.0, 0.0), (0.0, 1.0)]


def test_sampled_direction_check_in_three_variables():
    rep = check_hypotheses(slab_decompose(parse_poly("i*x1 + x2^2 + x3^2", 3)), samples=2000)
    assert rep.single_direction != "failed"
    rep = check_hypotheses(slab_decompose(parse_poly("i*x1 + x2^2 - x3^2", 3)), samples=2000)
    assert rep.single_direction == "failed"
