import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import rand_data, rand_decomposition
from rungekit.cauchy import (NotNormalizedError, auto_truncation, c_op_explicit, c_op_recursive,
                             cauchy_solve, compositions, convergence_tail_bound,
                             defining_relation_residual, identity_report, l_series, multinomial,
                             operator_bound_q, remark_formula_eval, verify_prep_identity)
from rungekit.funcdata import ExpPolyData, PolyData
from rungekit.nullsol import heat_decomposition, schrodinger_decomposition
from rungekit.polyalg import ExactComplex, parse_poly, slab_decompose

HEAT = heat_decomposition()


def P(text, dim=1):
    return PolyData(parse_poly(text, dim))


# compositions and multinomials


def brute_compositions(l, m):
    ranges = [range(l // j + 1) for j in range(1, m + 1)]
    return {s for s in itertools.product(*ranges) if sum((j + 1) * v for j, v in enumerate(s)) == l}


def test_composition_examples():
    assert [c.s for c in compositions(2, 2)] == [(2, 0), (0, 1)]
    assert [c.s for c in compositions(0, 3)] == [(0, 0, 0)]
    assert len(compositions(6, 3)) == 7


@given(st.integers(0, 10), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_compositions_match_brute_force(l, m):
    got = [c.s for c in compositions(l, m)]
    assert set(got) == brute_compositions(l, m)
    assert got == sorted(got, reverse=True)
    assert all(c.weight == l for c in compositions(l, m))


def test_multinomial_examples():
    assert multinomial(3, (1, 1, 1)) == 6
    assert multinomial(5, (5, 0)) == 1


@given(st.lists(st.integers(0, 6), min_size=1, max_size=4))
def test_multinomial_factorials(parts):
    n = sum(parts)
    want = math.factorial(n) // math.prod(math.factorial(p) for p in parts)
    assert multinomial(n, parts) == want


# C_l


def test_c_op_heat_examples():
    f = P("x1^2")
    assert c_op_recursive(HEAT, 1, f) == f
    assert c_op_recursive(HEAT, 0, f).is_zero
    assert c_op_recursive(HEAT, 3, f) == P("-2*x1")
    assert c_op_explicit(HEAT, 1, f) == f
    assert c_op_explicit(HEAT, 3, f) == P("-2*x1")
    assert c_op_explicit(HEAT, 2, f).is_zero


def test_c_op_heat_odd_terms_are_powers_of_minus_d1():
    f = P("x1^7 - 3*x1^4 + x1")
    d = f
    for k in range(5):
        assert c_op_recursive(HEAT, 2 * k + 1, f) == d
        assert c_op_recursive(HEAT, 2 * k + 2, f).is_zero
        d = d.differentiate((1,)).scale(-1)


def test_explicit_formula_needs_l_at_least_m_minus_1():
    with pytest.raises(ValueError):
        c_op_explicit(HEAT, 0, P("x1"))


def test_not_normalized_rejected():
    dec = slab_decompose(parse_poly("2*x2^2 + x1", 2), normalize=False)
    with pytest.raises(NotNormalizedError):
        c_op_recursive(dec, 2, P("x1"))


def test_defining_relation_and_identity_report():
    rng = random.Random(3)
    for _ in range(15):
        dec = rand_decomposition(rng)
        f = rand_data(rng, dec.dim - 1)
        for l in range(6):
            assert defining_relation_residual(dec, l, f).is_zero
        rep = identity_report(dec, f, dec.m + 6)
        assert rep["exact"] and rep["max_abs_residual"] == 0


def test_explicit_formula_on_exponential_data():
    rng = random.Random(9)
    for _ in range(10):
        dec = rand_decomposition(rng, d=2)
        lam = ExactComplex(Fraction(rng.randint(-3, 3), 2), Fraction(rng.randint(-2, 2), 3))
        f = ExpPolyData({(lam,): parse_poly("1 + x1", 1)})
        for l in range(dec.m - 1, dec.m + 5):
            assert c_op_recursive(dec, l, f) == c_op_explicit(dec, l, f)


# series and assembly


def test_l_series_heat_example():
    s = l_series(HEAT, P("x1"), 3)
    assert s.to_poly() == parse_poly("i*x1*x2 + i/6*x2^3", 2)


def test_l_series_vanishes_on_boundary_and_for_zero_data():
    rng = random.Random(5)
    for _ in range(5):
        dec = rand_decomposition(rng, m=rng.randint(2, 4))
        h = rand_data(rng, dec.dim - 1)
        s = l_series(dec, h, dec.m + 3)
        pt = np.append(np.array([0.3, -0.7])[: dec.dim - 1], 0.0)
        assert s.evaluate(pt) == 0
    assert all(c.is_zero for c in l_series(HEAT, P("0"), 6).coeffs)


def test_trace_law():
    # D_d^k L_n(h)(., 0) = C_k(h)
    rng = random.Random(8)
    for _ in range(10):
        dec = rand_decomposition(rng)
        h = rand_data(rng, dec.dim - 1)
        s = l_series(dec, h, dec.m + 5)
        for k in range(dec.m + 5):
            assert s.shift(k).trace(0) == c_op_recursive(dec, k, h)


def test_cauchy_heat_example():
    sol = cauchy_solve(HEAT, [P("0"), P("x1")], 5)
    assert sol.as_poly() == parse_poly("i*x1*x2 + i/6*x2^3", 2)
    assert sol.pde_residual().is_zero
    assert sol.terminated and sol.exact


def test_cauchy_auto_truncation_and_zero_data():
    sol = cauchy_solve(HEAT, [P("0"), P("0")])
    assert sol.as_poly().is_zero
    with pytest.raises(ValueError):
        cauchy_solve(slab_decompose(parse_poly("1 + x2^2", 2)), [P("x1"), P("0")])


def test_cauchy_plane_wave_two_exponential_oracle():
    # roots mu of i lam + mu^2 = 0; u = a e^{i mu+ x2} + b e^{i mu- x2} e^{i lam x1}
    for lam in (-3.1, -0.7, 0.4, 2.5):
        mu = np.sqrt(-1j * lam) * np.array([1, -1])
        a, b = np.linalg.solve(np.array([[1, 1], mu]), np.array([1, 0]))
        h0 = ExpPolyData.plane_wave((lam,), exact=False)
        h1 = ExpPolyData.plane_wave((lam,), 0.0, exact=False)
        sol = cauchy_solve(HEAT, [h0, h1], 50)
        g = np.linspace(-1, 1, 11)
        pts = np.array([(x, y) for x in g for y in g])
        ref = np.exp(1j * lam * pts[:, 0]) * (a * np.exp(1j * mu[0] * pts[:, 1]) + b * np.exp(1j * mu[1] * pts[:, 1]))
        assert np.max(np.abs(sol.evaluate_array(pts) - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_cauchy_linearity_exact():
    rng = random.Random(21)
    for _ in range(5):
        dec = rand_decomposition(rng)
        h = [rand_data(rng, dec.dim - 1) for _ in range(dec.m)]
        g = [rand_data(rng, dec.dim - 1) for _ in range(dec.m)]
        a, b = Fraction(rng.randint(-5, 5), 3), Fraction(rng.randint(-5, 5), 7)
        n = dec.m + 6
        lhs = cauchy_solve(dec, [x.scale(a) + y.scale(b) for x, y in zip(h, g)], n).as_poly()
        rhs = cauchy_solve(dec, h, n).as_poly().scale(a) + cauchy_solve(dec, g, n).as_poly().scale(b)
        assert lhs == rhs
        for _ in range(2):
            pt = tuple(Fraction(rng.randint(-9, 9), 4) for _ in range(dec.dim))
            assert lhs(pt) == rhs(pt)


def test_data_count_checked():
    with pytest.raises(ValueError):
        cauchy_solve(HEAT, [P("x1")], 5)


def test_prep_identity_examples():
    assert verify_prep_identity(HEAT, [P("x1^3"), P("0")], 0).is_zero
    rng = random.Random(4)
    dec = rand_decomposition(rng, m=4)
    zero = [P("0", dec.dim - 1)] * 4
    assert all(verify_prep_identity(dec, zero, s).is_zero for s in range(4))


def test_remark_formula_examples():
    v = remark_formula_eval(HEAT, [P("0"), P("x1")], 5, (1.0, 1.0))
    assert v == pytest.approx(1j + 1j / 6, abs=1e-14)
    h0 = P("x1^2 - 3")
    assert remark_formula_eval(HEAT, [h0, P("x1")], 6, (0.7, 0.0)) == pytest.approx(0.49 - 3)
    assert remark_formula_eval(HEAT, [P("0"), P("0")], 6, (0.7, 0.3)) == 0


def test_remark_formula_matches_solver():
    rng = random.Random(13)
    for _ in range(8):
        dec = rand_decomposition(rng, d=2)
        h = [rand_data(rng, 1) for _ in range(dec.m)]
        n = dec.m + 6
        u = cauchy_solve(dec, h, n)
        pt = (rng.uniform(-1, 1), rng.uniform(-1, 1))
        assert remark_formula_eval(dec, h, n, pt) == pytest.approx(u.evaluate(pt), rel=1e-12, abs=1e-12)


# convergence bound


def test_tail_bound_geometric_domination():
    q, B, rho, g = operator_bound_q(HEAT), 1.0, 1.5, 0.5
    checked = 0
    for R in (0.1, 0.2, 1.0):
        for n in list(range(1, 40)) + [300, 500]:
            if HEAT.m * q * R * B / (n + 1) ** (1 - rho * g) <= 0.5:
                assert convergence_tail_bound(HEAT, 1.0, R, q, B, rho, n) <= 2 * 0.5 ** (n + 1)
                checked += 1
    assert checked >= 80


def test_tail_bound_edge_cases():
    assert convergence_tail_bound(HEAT, 1, 1, 1, 0.0, 1.5, 10) == 0.0
    assert convergence_tail_bound(HEAT, 1, 1, 1, 1.0, 2.0, 10) == math.inf
    assert convergence_tail_bound(HEAT, 1, 1e6, 1, 1.0, 1.9, 10) == math.inf


def test_tail_bound_monotone_in_n():
    for rigorous in (False, True):
        vals = [convergence_tail_bound(HEAT, 2.0, 3.0, 1.0, 1.0, 1.2, n, rigorous) for n in range(1, 120)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_auto_truncation_meets_tolerance():
    n = auto_truncation(HEAT, 1.0, 2.0, 1.0, 1.0, 1.2, 1e-10)
    assert convergence_tail_bound(HEAT, 1.0, 2.0, 1.0, 1.0, 1.2, n, rigorous=True) <= 1e-10
    assert convergence_tail_bound(HEAT, 1.0, 2.0, 1.0, 1.0, 1.2, n - 1, rigorous=True) > 1e-10


def test_float_data_promote_exact_operator():
    h = ExpPolyData.plane_wave((1.5,), exact=False)
    s = l_series(schrodinger_decomposition(), h, 10)
    assert not s.decomposition.exact
