"""Random exact operators and data shared by the tests."""

import random
from fractions import Fraction

from rungekit.funcdata import PolyData
from rungekit.polyalg import MultiPoly, multi_indices, slab_decompose


def rand_frac(rng, num=5, den=4):
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def rand_poly(rng, dim, max_deg, n_terms=4):
    terms = {}
    monos = list(multi_indices(dim, max_deg))
    for _ in range(n_terms):
        terms[rng.choice(monos)] = rand_frac(rng)
    return MultiPoly(dim, terms)


def rand_decomposition(rng, d=None, m=None):
    """``x_d^m`` with a nonzero rational lead plus lower ``Q_k(x') x_d^k``, deg Q_k <= m-k."""
    d = d or rng.randint(2, 3)
    m = m or rng.randint(1, 4)
    terms = {(0,) * (d - 1) + (m,): Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3))}
    for k in range(m):
        q = rand_poly(rng, d - 1, min(m - k, 2), rng.randint(0, 3))
        for a, c in q.terms.items():
            key = a + (k,)
            terms[key] = terms.get(key, 0) + c
    return slab_decompose(MultiPoly(d, terms))


def rand_data(rng, dim, max_deg=4):
    return PolyData(rand_poly(rng, dim, rng.randint(0, max_deg), rng.randint(1, 5)))


def corpus(seed=2026, size=100):
    rng = random.Random(seed)
    out = []
    for _ in range(size):
        dec = rand_decomposition(rng)
        data = [rand_data(rng, dec.dim - 1) for _ in range(dec.m)]
        out.append((dec, data))
    return out
