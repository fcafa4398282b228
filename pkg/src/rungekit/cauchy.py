"""Power-series solution of the non-characteristic Cauchy problem.

For a normalized decomposition ``P = sum_k Q_k(x') x_d^k`` (``Q_m = 1``) the
operators ``C_l`` are

    C_l = 0 (l <= m-2),   C_{m-1} = id,
    C_l = -sum_{k<m} Q_k(D) C_{k+l-m}   (l >= m),

and ``L_n(h) = sum_{l<=n} C_l(h) (i x_d)^l / l!``.  The solution with
``D_d^s u(., 0) = h_s`` is

    u = sum_j sum_{k=0}^{m-1-j} Q_{j+k+1}(D) D_d^k L(h_j).

Applying ``D_d`` to ``L`` shifts the coefficient index by one, so all of this
is bookkeeping on coefficient lists.
"""

from __future__ import annotations

import csv
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from .funcdata import ExpPolyData, NumericData, PolyData, zero_like
from .polyalg import (ExactComplex, MultiPoly, _degx1_gamma, _embed,
                      slab_decompose)


class NotNormalizedError(ValueError):
    pass


def _require_normalized(dec):
    last = dec.q_list[dec.m]
    one = MultiPoly.constant(last.dim, 1, last.exact)
    if last != one:
        raise NotNormalizedError("decomposition must have Q_m = 1")


_FLOAT_DECS = {}


def _match_mode(dec, *data):
    """Float copy of an exact decomposition when any datum is in float mode."""
    if not dec.exact or all(getattr(h, "exact", True) for h in data):
        return dec
    if dec not in _FLOAT_DECS:
        _FLOAT_DECS[dec] = slab_decompose(dec.base.to_float())
    return _FLOAT_DECS[dec]


def _is_zero(f):
    return bool(getattr(f, "is_zero", False))


def _add_all(items, like):
    acc = None
    for it in items:
        if _is_zero(it):
            continue
        acc = it if acc is None else acc + it
    return zero_like(like) if acc is None else acc


# ---------------------------------------------------------------------------
# compositions and multinomials


@dataclass(frozen=True)
class CompositionIndex:
    s: Tuple[int, ...]

    @property
    def weight(self):
        """sigma(s) = sum_j j s_j."""
        return sum((j + 1) * v for j, v in enumerate(self.s))

    @property
    def size(self):
        return sum(self.s)


def compositions(l, m):
    """All ``s`` in N_0^m with ``sum_j j s_j = l``, lexicographically descending."""
    if l < 0 or m < 1:
        raise ValueError("need l >= 0 and m >= 1")
    out = []

    def rec(prefix, j, rest):
        if j == m:
            if rest == 0:
                out.append(CompositionIndex(tuple(prefix)))
            return
        for v in range(rest // (j + 1), -1, -1):
            prefix.append(v)
            rec(prefix, j + 1, rest - v * (j + 1))
            prefix.pop()

    rec([], 0, l)
    return out


def multinomial(total, parts):
    parts = [int(p) for p in parts]
    if min(parts, default=0) < 0:
        raise ValueError("parts must be nonnegative")
    if sum(parts) != total:
        raise ValueError(f"parts sum to {sum(parts)}, not {total}")
    out = math.factorial(total)
    for p in parts:
        out //= math.factorial(p)
    return out


# ---------------------------------------------------------------------------
# the operators C_l


class _Sequence:
    """Lazily extended list ``C_0, C_1, ...`` for one (decomposition, datum)."""

    def __init__(self, dec, f):
        self.dec = dec
        self.f = f
        self.items: list = []
        self.lock = threading.Lock()

    def get(self, l):
        with self.lock:
            while len(self.items) <= l:
                self.items.append(self._next(len(self.items)))
            return self.items[l]

    def _next(self, l):
        m = self.dec.m
        if l < m - 1:
            return zero_like(self.f)
        if l == m - 1:
            return self.f
        parts = []
        for k in range(m):
            q = self.dec.q_list[k]
            prev = self.items[k + l - m] if k + l - m >= 0 else None
            if q.is_zero or prev is None or _is_zero(prev):
                continue
            parts.append(prev.apply_operator(q))
        return _add_all(parts, self.f).scale(-1)


class _OperatorSequence:
    """Operator polynomials ``R_l`` with ``C_l = R_l(D)``."""

    def __init__(self, dec):
        self.dec = dec
        self.items: list = []
        self.lock = threading.Lock()

    def get(self, l):
        with self.lock:
            while len(self.items) <= l:
                self.items.append(self._next(len(self.items)))
            return self.items[l]

    def _next(self, l):
        m, dim, exact = self.dec.m, self.dec.dim - 1, self.dec.exact
        if l < m - 1:
            return MultiPoly.zero(dim, exact)
        if l == m - 1:
            return MultiPoly.constant(dim, 1, exact)
        acc = MultiPoly.zero(dim, exact)
        for k in range(m):
            q = self.dec.q_list[k]
            if k + l - m >= 0 and not q.is_zero:
                acc = acc + q * self.items[k + l - m]
        return -acc


_CACHE_LIMIT = 512
_cache: "OrderedDict[tuple, object]" = OrderedDict()
_cache_lock = threading.Lock()


def _cached(key, make):
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            _cache.move_to_end(key)
            return hit
        obj = make()
        _cache[key] = obj
        if len(_cache) > _CACHE_LIMIT:
            _cache.popitem(last=False)
        return obj


def clear_cache():
    with _cache_lock:
        _cache.clear()


def operator_polys(dec, l):
    """``R_l`` with ``C_l(f) = R_l(D) f`` for every datum ``f``."""
    _require_normalized(dec)
    return _cached(("ops", dec), lambda: _OperatorSequence(dec)).get(l)


def c_op_recursive(dec, l, f):
    """``C_l(f)`` from the defining recursion, memoized per (dec, f)."""
    _require_normalized(dec)
    dec = _match_mode(dec, f)
    if l < 0:
        raise ValueError("l must be nonnegative")
    if isinstance(f, NumericData):
        if l < dec.m - 1 or f.is_zero:
            return zero_like(f)
        return _cached(("num", dec, id(f)), lambda: _NumericSequence(dec, f)).get(l)
    return _cached(("data", dec, f), lambda: _Sequence(dec, f)).get(l)


class _NumericSequence:
    def __init__(self, dec, f):
        self.dec, self.f = dec, f
        self.items = {}
        self.lock = threading.Lock()

    def get(self, l):
        with self.lock:
            if l not in self.items:
                r = operator_polys(self.dec, l)
                self.items[l] = zero_like(self.f) if r.is_zero else self.f.apply_operator(r)
            return self.items[l]


def _explicit_operator(dec, l, max_degree=None):
    """``sum_{sigma(s)=l-m+1} (-1)^|s| multinom Prod_k Q_{m-k}^{s_k}`` as one polynomial."""
    m, dim, exact = dec.m, dec.dim - 1, dec.exact
    acc = MultiPoly.zero(dim, exact)
    powers = {}

    def qpow(k, e):
        key = (k, e)
        if key not in powers:
            powers[key] = dec.q_list[m - k].pow(e, max_degree)
        return powers[key]

    for comp in compositions(l - m + 1, m):
        s = comp.s
        if any(e and dec.q_list[m - (k + 1)].is_zero for k, e in enumerate(s)):
            continue
        term = MultiPoly.constant(dim, (-1) ** comp.size * multinomial(comp.size, s), exact)
        for k, e in enumerate(s):
            if e:
                term = term.mul(qpow(k + 1, e), max_degree)
            if term.is_zero:
                break
        acc = acc + term
    return acc


def c_op_explicit(dec, l, f):
    """``C_l(f)`` from the closed multinomial formula, one operator application."""
    _require_normalized(dec)
    dec = _match_mode(dec, f)
    if l < dec.m - 1:
        raise ValueError("explicit formula needs l >= m-1")
    max_degree = f.poly.degree if isinstance(f, PolyData) and not f.is_zero else None
    if isinstance(f, PolyData) and f.is_zero:
        return f
    op = _explicit_operator(dec, l, max_degree)
    if op.is_zero:
        return zero_like(f)
    return f.apply_operator(op)


def defining_relation_residual(dec, l, f):
    """``C_{m+l}(f) + sum_{k<m} Q_k(D) C_{k+l}(f)``; zero by construction."""
    parts = [c_op_recursive(dec, dec.m + l, f)]
    for k in range(dec.m):
        q = dec.q_list[k]
        if not q.is_zero:
            parts.append(c_op_recursive(dec, k + l, f).apply_operator(q))
    return _add_all(parts, f)


# ---------------------------------------------------------------------------
# series


def _coeff_max_abs(f):
    if isinstance(f, PolyData):
        return max((abs(complex(c)) for c in f.poly.terms.values()), default=0.0)
    if isinstance(f, ExpPolyData):
        return max((abs(complex(c)) for p in f.terms.values() for c in p.terms.values()), default=0.0)
    return float("nan")


def _xd_powers(xd, n):
    """``(i x_d)^l / l!`` for l = 0..n, shape (n+1, len(xd))."""
    xd = np.asarray(xd, dtype=float)
    out = np.empty((n + 1,) + xd.shape, dtype=complex)
    out[0] = 1.0
    for l in range(1, n + 1):
        out[l] = out[l - 1] * (1j * xd) / l
    return out


@dataclass
class SeriesSolution:
    """``sum_l coeffs[l](x') (i x_d)^l / l!``."""

    decomposition: object
    coeffs: List[object]
    truncation: int

    @property
    def dim(self):
        return self.decomposition.dim

    def shift(self, k):
        """``D_d^k`` of the series."""
        return SeriesSolution(self.decomposition, self.coeffs[k:], self.truncation - k)

    def trace(self, k=0):
        """``D_d^k`` of the series restricted to ``x_d = 0``."""
        if k > self.truncation:
            return zero_like(self.coeffs[0])
        return self.coeffs[k]

    def apply_tangential(self, q):
        return SeriesSolution(self.decomposition,
                              [zero_like(c) if _is_zero(c) else c.apply_operator(q) for c in self.coeffs],
                              self.truncation)

    def _eval(self, pts, with_error):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        xs, xd = pts[:, :-1], pts[:, -1]
        pw = _xd_powers(xd, len(self.coeffs) - 1)
        val = np.zeros(len(pts), dtype=complex)
        err = np.zeros(len(pts))
        for l, c in enumerate(self.coeffs):
            if _is_zero(c):
                continue
            if isinstance(c, NumericData):
                ve = [c.evaluate_with_error(x) for x in xs]
                v = np.array([a for a, _ in ve])
                err += np.array([e for _, e in ve]) * np.abs(pw[l])
            else:
                v = c.evaluate_array(xs)
            val += v * pw[l]
        return (val, err) if with_error else val

    def evaluate_array(self, pts):
        return self._eval(pts, False)

    def evaluate_with_error(self, point):
        v, e = self._eval(np.asarray(point, dtype=float)[None, :], True)
        return complex(v[0]), float(e[0])

    def evaluate(self, point):
        return self.evaluate_with_error(point)[0]

    def __call__(self, point):
        return self.evaluate(point)

    def to_poly(self):
        """The series as a polynomial in all d variables (PolyData coefficients only)."""
        d, exact = self.dim, self.decomposition.exact
        out = MultiPoly.zero(d, exact)
        xd = MultiPoly.variable(d, d - 1, exact)
        unit = ExactComplex(0, 1) if exact else 1j
        for l, c in enumerate(self.coeffs):
            if not isinstance(c, PolyData):
                raise TypeError("to_poly needs polynomial coefficients")
            if c.is_zero:
                continue
            fac = unit ** l
            fac = fac * (ExactComplex(Fraction(1, math.factorial(l))) if exact else 1 / math.factorial(l))
            out = out + _embed(c.poly, d) * xd.pow(l).scale(fac)
        return out


def l_series(dec, h, n):
    _require_normalized(dec)
    dec = _match_mode(dec, h)
    if n < dec.m - 1:
        raise ValueError("need n >= m-1")
    return SeriesSolution(dec, [c_op_recursive(dec, l, h) for l in range(n + 1)], n)


def _termination_index(dec, h, limit):
    """Last nonzero index of C_l(h) if m consecutive zeros occur before ``limit``."""
    last, run = -1, 0
    for l in range(limit + 1):
        if _is_zero(c_op_recursive(dec, l, h)):
            run += 1
            if l >= dec.m - 1 and run >= dec.m:
                return last
        else:
            last, run = l, 0
    return None


# ---------------------------------------------------------------------------
# assembly


@dataclass
class CauchySolution:
    decomposition: object
    data: Tuple[object, ...]
    series_parts: Tuple[SeriesSolution, ...]
    assembled: SeriesSolution
    truncation: int
    terminated: bool = False

    @property
    def exact(self):
        """True when the series terminated within the truncation on exact polynomial data."""
        return self.terminated and self.decomposition.exact

    def evaluate(self, point):
        return self.assembled.evaluate(point)

    def evaluate_with_error(self, point):
        return self.assembled.evaluate_with_error(point)

    def evaluate_array(self, pts):
        return self.assembled.evaluate_array(pts)

    __call__ = evaluate

    def trace(self, s):
        """``D_d^s u(., 0)``."""
        return self.assembled.trace(s)

    def trace_residuals(self):
        return [_add_all([self.trace(s), h.scale(-1)], h) for s, h in enumerate(self.data)]

    def as_poly(self):
        return self.assembled.to_poly()

    def pde_residual(self):
        """``P(D) u`` as a d-variable polynomial (polynomial data only)."""
        return self.decomposition.base.act_on(self.as_poly())

    def sample_grid(self, axes):
        """Values on the tensor grid spanned by ``axes`` (one 1-D array per variable)."""
        mesh = np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        return self.evaluate_array(pts).reshape(mesh[0].shape)

    def write_csv(self, axes, path):
        mesh = np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        vals = self.evaluate_array(pts)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j + 1}" for j in range(pts.shape[1])] + ["re", "im"])
            for p, v in zip(pts, vals):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v.real)), repr(float(v.imag))])


def _check_data(dec, data):
    data = tuple(data)
    if len(data) != dec.m:
        raise ValueError(f"need {dec.m} Cauchy data, got {len(data)}")
    kinds = {type(h) for h in data}
    if len(kinds) > 1:
        raise TypeError("all Cauchy data must share one representation")
    for h in data:
        if h.dim != dec.dim - 1:
            raise ValueError("Cauchy data live on R^{d-1}")
    return data


def assemble_coeffs(dec, series):
    """Coefficient list of ``sum_j sum_k Q_{j+k+1}(D) D_d^k L(h_j)``."""
    m, n = dec.m, series[0].truncation
    out = []
    for l in range(n + 1):
        parts = []
        for j in range(m):
            for k in range(m - j):
                if l + k > n:
                    continue
                q = dec.q_list[j + k + 1]
                c = series[j].coeffs[l + k]
                if q.is_zero or _is_zero(c):
                    continue
                parts.append(c.apply_operator(q))
        out.append(_add_all(parts, series[0].coeffs[0]))
    return out


def cauchy_solve(dec, data, n="auto", n_max=400):
    """Assemble u with ``D_d^s u(., 0) = h_s``.

    ``n="auto"`` is only valid for symbolic polynomial data whose series
    terminates (checked up to ``n_max``).
    """
    _require_normalized(dec)
    data = _check_data(dec, data)
    dec = _match_mode(dec, *data)
    term = None
    if all(isinstance(h, PolyData) for h in data):
        # with a fixed n only a termination inside the truncation matters
        limit = n_max if n == "auto" else min(n_max, n + 1)
        idx = [_termination_index(dec, h, limit) for h in data]
        if all(i is not None for i in idx):
            term = max(max(idx), dec.m - 1)
    if n == "auto":
        if term is None:
            raise ValueError("series does not terminate; pass an explicit n")
        n = term + dec.m - 1
    if n < dec.m - 1:
        raise ValueError("need n >= m-1")
    series = tuple(l_series(dec, h, n) for h in data)
    assembled = SeriesSolution(dec, assemble_coeffs(dec, series), n)
    terminated = term is not None and n >= term + dec.m - 1
    return CauchySolution(dec, data, series, assembled, n, terminated)


def verify_prep_identity(dec, data, s):
    """``sum_{j<=s} sum_{k=m-1-s}^{m-1-j} Q_{j+k+1}(D) C_{k+s}(h_j) - h_s``."""
    _require_normalized(dec)
    data = _check_data(dec, data)
    dec = _match_mode(dec, *data)
    m = dec.m
    if not 0 <= s <= m - 1:
        raise ValueError("need 0 <= s <= m-1")
    parts = []
    for j in range(s + 1):
        for k in range(m - 1 - s, m - j):
            q = dec.q_list[j + k + 1]
            c = c_op_recursive(dec, k + s, data[j])
            if not q.is_zero and not _is_zero(c):
                parts.append(c.apply_operator(q))
    parts.append(data[s].scale(-1))
    return _add_all(parts, data[s])


def remark_formula_eval(dec, data, n, point):
    """Evaluate u at ``point`` from the closed composition formula.

    ``D_d^k L_n(h)`` has coefficients ``C_{l+k}``, each taken from the
    multinomial formula; no recursion is used.
    """
    _require_normalized(dec)
    data = _check_data(dec, data)
    dec = _match_mode(dec, *data)
    m = dec.m
    point = np.asarray(point, dtype=float)
    xs, xd = point[:-1], point[-1]
    pw = _xd_powers(np.array([xd]), n)[:, 0]
    total = 0j
    for l in range(n + 1):
        for j in range(m):
            for k in range(m - j):
                if l + k > n or l + k < m - 1:
                    continue
                q = dec.q_list[j + k + 1]
                if q.is_zero:
                    continue
                op = q * _explicit_operator(dec, l + k)
                if op.is_zero:
                    continue
                total += complex(data[j].apply_operator(op).evaluate(xs)) * pw[l]
    return total


# ---------------------------------------------------------------------------
# convergence


def gamma_of(dec):
    ok, g = _degx1_gamma(dec.q_list, dec.m)
    return g if ok else None


def operator_bound_q(dec):
    """Smallest ``q`` with ``sum |q_{k,alpha}| <= q`` for every k."""
    return max(q.coefficient_sum() for q in dec.q_list)


def convergence_tail_bound(dec, C, R, q, B, rho, n, rigorous=False):
    """Tail ``sum_{l>n} (mqRB / l^(1-rho*gamma))^l`` of the series estimate.

    Returns ``inf`` when ``rho*gamma >= 1`` (the estimate diverges).  With
    ``rigorous=True`` the Stirling factor ``e`` and the constant ``C`` are
    kept, and ``R``, ``mq`` are raised to at least 1, which makes the value an
    upper bound for ``sup |L(h) - L_n(h)|`` on ``|x_d| <= B``.
    """
    g = gamma_of(dec)
    if g is None:
        return math.inf
    rg = float(rho) * float(g)
    if rg >= 1:
        return math.inf
    if B == 0:
        return 0.0
    m = dec.m
    if rigorous:
        a = math.e * max(1.0, m * q) * max(1.0, R) * B
        scale = C
    else:
        a = m * q * R * B
        scale = 1.0
    if a <= 0:
        return 0.0
    la = math.log(a)
    c = 1 - rg
    # log-terms l (log a - c log l) peak at l* = exp(log a / c - 1) with value c l*
    lstar_log = la / c - 1
    if lstar_log > math.log(n + 1) and lstar_log > math.log(709 / c):
        return math.inf
    logs = []
    l = n + 1
    prev = -math.inf
    while True:
        t = l * (la - (1 - rg) * math.log(l))
        logs.append(t)
        top = max(logs)
        if (t < prev and t < top - 40) or t < -745 - 40:
            break
        prev = t
        l += 1
        if l > n + 10 ** 7:
            return math.inf
    top = max(logs)
    s = top + math.log(sum(math.exp(v - top) for v in logs))
    if s > 709:
        return math.inf
    return scale * math.exp(s)


def auto_truncation(dec, C, R, q, B, rho, tol, n_max=5000):
    """Smallest ``n >= m-1`` whose rigorous tail bound is below ``tol``."""
    for n in range(dec.m - 1, n_max + 1):
        if convergence_tail_bound(dec, C, R, q, B, rho, n, rigorous=True) <= tol:
            return n
    raise ValueError(f"no truncation up to {n_max} meets tol={tol}")


def identity_report(dec, f, l_max):
    """Recursion against explicit formula and the defining relation for l <= l_max."""
    worst, exact = 0.0, True
    for l in range(dec.m - 1, l_max + 1):
        a = c_op_recursive(dec, l, f)
        b = c_op_explicit(dec, l, f)
        r = _add_all([a, b.scale(-1)], f)
        worst = max(worst, _coeff_max_abs(r))
        exact = exact and _is_zero(r)
        if l - dec.m >= 0:
            rel = defining_relation_residual(dec, l - dec.m, f)
            worst = max(worst, _coeff_max_abs(rel))
            exact = exact and _is_zero(rel)
    return {"l_range": [dec.m - 1, l_max], "max_abs_residual": worst,
            "exact": bool(exact and dec.exact)}
