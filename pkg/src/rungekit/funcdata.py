"""Cauchy data on R^{d-1} and the Gevrey cutoff.

Three representations are closed under constant-coefficient operators:

``PolyData``     a polynomial, differentiated exactly
``ExpPolyData``  ``sum_lam p_lam(x) exp(i <lam, x>)``, differentiated exactly
``NumericData``  a derivative oracle ``(point, alpha) -> (value, error)``

Operators follow the convention of :mod:`rungekit.polyalg`: ``Q(D)`` with
``D_j = -i d/dx_j``.
"""

from __future__ import annotations

import csv
import json
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import roots_legendre

from .jets import Jet
from .polyalg import (ExactComplex, ModeError, MultiPoly, minus_i_power,
                      poly_from_json, poly_to_json)


class OrderError(ValueError):
    """A numeric datum was asked for a derivative beyond its depth."""


def _alpha(alpha, dim):
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != dim or min(alpha) < 0:
        raise ValueError(f"multi-index {alpha} does not fit dim {dim}")
    return alpha


class CauchyData:
    dim: int

    def evaluate(self, point):
        return self.evaluate_with_error(point)[0]

    def evaluate_array(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return np.array([self.evaluate(p) for p in pts])

    def __rmul__(self, c):
        return self.scale(c)

    def __mul__(self, c):
        return self.scale(c)

    def __sub__(self, other):
        return self + other.scale(-1)


@dataclass(frozen=True)
class PolyData(CauchyData):
    poly: MultiPoly

    @property
    def dim(self):
        return self.poly.dim

    @property
    def exact(self):
        return self.poly.exact

    @property
    def is_zero(self):
        return self.poly.is_zero

    def differentiate(self, alpha):
        return PolyData(self.poly.derivative(_alpha(alpha, self.dim)))

    def apply_operator(self, q):
        return PolyData(q.act_on(self.poly))

    def evaluate_with_error(self, point):
        return complex(self.poly(tuple(point))), 0.0

    def evaluate_array(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return self.poly.evaluate_array(pts)

    def scale(self, c):
        return PolyData(self.poly.scale(c))

    def __add__(self, other):
        if not isinstance(other, PolyData):
            return NotImplemented
        return PolyData(self.poly + other.poly)

    def to_json(self):
        return {"kind": "poly", "poly": poly_to_json(self.poly)}


def _freq_key(lam, exact):
    if exact:
        return tuple(ExactComplex.coerce(v) for v in lam)
    return tuple(complex(v) for v in lam)


class ExpPolyData(CauchyData):
    """Exponential polynomial ``sum p_lam(x) exp(i <lam, x>)``."""

    __slots__ = ("dim", "exact", "terms", "_hash")

    def __init__(self, terms, dim=None, exact=None):
        merged: Dict[tuple, MultiPoly] = {}
        for lam, p in (terms.items() if isinstance(terms, dict) else terms):
            if dim is None:
                dim = p.dim
            if exact is None:
                exact = p.exact
            if p.dim != dim or p.exact != exact:
                raise ModeError("inconsistent coefficient polynomials")
            key = _freq_key(lam, exact)
            if len(key) != dim:
                raise ValueError("frequency has wrong dimension")
            merged[key] = merged[key] + p if key in merged else p
        if dim is None:
            raise ValueError("dim required for an empty exponential polynomial")
        self.dim = dim
        self.exact = bool(exact) if exact is not None else True
        self.terms = {k: p for k, p in merged.items() if not p.is_zero}
        self._hash = None

    @classmethod
    def plane_wave(cls, lam, coeff=1, exact=None):
        lam = tuple(lam)
        if exact is None:
            exact = all(isinstance(v, (int, Fraction, ExactComplex)) for v in lam)
        p = MultiPoly.constant(len(lam), coeff, exact)
        return cls({lam: p}, len(lam), exact)

    @property
    def is_zero(self):
        return not self.terms

    def differentiate(self, alpha):
        alpha = _alpha(alpha, self.dim)
        out = {}
        for lam, p in self.terms.items():
            q = p
            for j, aj in enumerate(alpha):
                for _ in range(aj):
                    ilam = lam[j] * (ExactComplex(0, 1) if self.exact else 1j)
                    e = [0] * self.dim
                    e[j] = 1
                    q = q.derivative(e) + q.scale(ilam)
            out[lam] = q
        return ExpPolyData(out, self.dim, self.exact)

    def apply_operator(self, q):
        if q.exact != self.exact:
            raise ModeError("operator and datum modes differ")
        out = {}
        for lam, p in self.terms.items():
            out[lam] = q.shift_symbol(lam).act_on(p)
        return ExpPolyData(out, self.dim, self.exact)

    def evaluate_with_error(self, point):
        point = tuple(float(v) for v in point)
        acc = 0j
        for lam, p in self.terms.items():
            phase = sum(complex(l) * x for l, x in zip(lam, point))
            acc += complex(p(point)) * np.exp(1j * phase)
        return acc, 0.0

    def evaluate_array(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        out = np.zeros(len(pts), dtype=complex)
        for lam, p in self.terms.items():
            lv = np.array([complex(v) for v in lam])
            out += p.evaluate_array(pts) * np.exp(1j * (pts @ lv))
        return out

    def scale(self, c):
        return ExpPolyData({lam: p.scale(c) for lam, p in self.terms.items()}, self.dim, self.exact)

    def __add__(self, other):
        if not isinstance(other, ExpPolyData):
            return NotImplemented
        if other.dim != self.dim or other.exact != self.exact:
            raise ModeError("incompatible exponential polynomials")
        return ExpPolyData(list(self.terms.items()) + list(other.terms.items()), self.dim, self.exact)

    def __eq__(self, other):
        if not isinstance(other, ExpPolyData):
            return NotImplemented
        if self.dim != other.dim or self.exact != other.exact:
            return False
        if self.exact:
            return self.terms == other.terms
        keys = set(self.terms) | set(other.terms)
        zero = MultiPoly.zero(self.dim, False)
        return all(self.terms.get(k, zero) == other.terms.get(k, zero) for k in keys)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, self.exact, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        parts = [f"({p})*exp(i<{[complex(v) for v in lam]}, x>)" for lam, p in self.terms.items()]
        return "ExpPolyData(" + " + ".join(parts or ["0"]) + ")"

    def to_json(self):
        def enc(v):
            if self.exact:
                return [str(v.re), str(v.im)]
            return [repr(complex(v).real), repr(complex(v).imag)]
        return {"kind": "exppoly", "dim": self.dim, "mode": "exact" if self.exact else "float",
                "terms": [{"freq": [enc(v) for v in lam], "poly": poly_to_json(p)}
                          for lam, p in self.terms.items()]}


class NumericData(CauchyData):
    """Datum known through a derivative oracle.

    ``oracle(point, alpha)`` returns ``(d^alpha f(point), abs_error)`` with
    partial (not ``D``) derivatives.  Requests with ``|alpha| > max_order``
    raise :class:`OrderError`.
    """

    def __init__(self, oracle, dim, max_order, label="numeric", is_zero=False):
        self.oracle = oracle
        self.dim = dim
        self.max_order = max_order
        self.label = label
        self.is_zero = is_zero

    def derivative(self, point, alpha):
        alpha = _alpha(alpha, self.dim)
        if self.max_order is not None and sum(alpha) > self.max_order:
            raise OrderError(f"order {sum(alpha)} exceeds max_order {self.max_order} of {self.label}")
        if self.is_zero:
            return 0j, 0.0
        v, e = self.oracle(tuple(point), alpha)
        return complex(v), float(e)

    def evaluate_with_error(self, point):
        return self.derivative(point, (0,) * self.dim)

    def _reduced(self, k):
        if self.max_order is None:
            return None
        if k > self.max_order:
            raise OrderError(f"order {k} exceeds max_order {self.max_order} of {self.label}")
        return self.max_order - k

    def differentiate(self, alpha):
        alpha = _alpha(alpha, self.dim)
        new_max = self._reduced(sum(alpha))
        base = self

        def oracle(point, beta):
            return base.derivative(point, tuple(a + b for a, b in zip(alpha, beta)))

        return NumericData(oracle, self.dim, new_max, f"d{alpha} {self.label}", self.is_zero)

    def apply_operator(self, q):
        if q.dim != self.dim:
            raise ValueError("operator dimension mismatch")
        if q.is_zero or self.is_zero:
            return NumericData(None, self.dim, self.max_order, "0", is_zero=True)
        new_max = self._reduced(q.degree)
        terms = [(a, complex(c) * complex(minus_i_power(sum(a), False))) for a, c in q.terms.items()]
        base = self

        def oracle(point, beta):
            val, err = 0j, 0.0
            for a, c in terms:
                v, e = base.derivative(point, tuple(x + y for x, y in zip(a, beta)))
                val += c * v
                err += abs(c) * e
            return val, err

        return NumericData(oracle, self.dim, new_max, f"Q(D) {self.label}")

    def scale(self, c):
        c = complex(c)
        if c == 0 or self.is_zero:
            return NumericData(None, self.dim, self.max_order, "0", is_zero=True)
        base = self

        def oracle(point, beta):
            v, e = base.derivative(point, beta)
            return c * v, abs(c) * e

        return NumericData(oracle, self.dim, self.max_order, self.label)

    def __add__(self, other):
        if not isinstance(other, NumericData):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        orders = [o for o in (self.max_order, other.max_order) if o is not None]
        a, b = self, other

        def oracle(point, beta):
            va, ea = a.derivative(point, beta)
            vb, eb = b.derivative(point, beta)
            return va + vb, ea + eb

        return NumericData(oracle, self.dim, min(orders) if orders else None,
                           f"({self.label} + {other.label})")

    def __repr__(self):
        return f"NumericData({self.label}, dim={self.dim}, max_order={self.max_order})"


def zero_like(f):
    if isinstance(f, PolyData):
        return PolyData(MultiPoly.zero(f.dim, f.exact))
    if isinstance(f, ExpPolyData):
        return ExpPolyData({}, f.dim, f.exact)
    return NumericData(None, f.dim, f.max_order, "0", is_zero=True)


def differentiate(f, alpha):
    return f.differentiate(alpha)


def evaluate(f, point, with_error=False):
    value, err = f.evaluate_with_error(np.atleast_1d(point))
    return (value, err) if with_error else value


def data_from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    if obj["kind"] == "poly":
        return PolyData(poly_from_json(obj["poly"]))
    if obj["kind"] == "exppoly":
        exact = obj.get("mode", "exact") == "exact"

        def dec(pair):
            if exact:
                return ExactComplex(Fraction(pair[0]), Fraction(pair[1]))
            return complex(float(pair[0]), float(pair[1]))

        terms = [(tuple(dec(v) for v in t["freq"]), poly_from_json(t["poly"])) for t in obj["terms"]]
        return ExpPolyData(terms, int(obj["dim"]), exact)
    raise ValueError(f"unknown Cauchy data kind {obj['kind']!r}")


def write_samples_csv(f, xs, path):
    """Write ``x, Re f, Im f`` rows for a datum on R^1 (or x1..xk columns)."""
    xs = np.asarray(xs, dtype=float)
    pts = xs.reshape(-1, f.dim)
    vals = f.evaluate_array(pts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(f.dim)] + ["re", "im"])
        for p, v in zip(pts, vals):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v.real)), repr(float(v.imag))])


# ---------------------------------------------------------------------------
# Gevrey cutoff


@dataclass
class GevreyCutoff:
    """Plateau indicator smoothed by a Gevrey bump.

    ``g = 1`` on ``plateau``, ``g = 0`` outside ``[plateau[0] - delta,
    plateau[1] + delta]`` which must lie inside ``support``.  The bump is
    ``c * exp(-(1 - (y/w)^2)^(-1/(rho-1)))`` on ``|y| < w = delta/2``.
    """

    rho: Fraction
    support: Tuple[float, float]
    plateau: Tuple[float, float]
    mollifier_width: float
    quadrature_order: int = 200
    prec: Optional[int] = None
    _norm: float = field(init=False, repr=False)

    def __post_init__(self):
        self.rho = Fraction(self.rho).limit_denominator(10 ** 6) if not isinstance(self.rho, Fraction) else self.rho
        if self.rho <= 1:
            raise ValueError("rho must exceed 1")
        A, B = map(float, self.support)
        a, b = map(float, self.plateau)
        d = float(self.mollifier_width)
        if d <= 0 or not A < a < b < B:
            raise ValueError("need support[0] < plateau[0] < plateau[1] < support[1] and delta > 0")
        if a - d < A - 1e-15 or b + d > B + 1e-15:
            raise ValueError(f"infeasible cutoff: plateau widened by delta={d} leaves the support")
        self.support, self.plateau, self.mollifier_width = (A, B), (a, b), d
        self._z, self._wz = roots_legendre(int(self.quadrature_order))
        self._norm = 1.0 / self._raw_integral(-self.half_width, self.half_width)

    @property
    def half_width(self):
        return self.mollifier_width / 2

    @property
    def kappa(self):
        return 1.0 / float(self.rho - 1)

    @property
    def edges(self):
        """Ends of the widened indicator that gets mollified."""
        w = self.half_width
        return self.plateau[0] - w, self.plateau[1] + w

    def _raw(self, y):
        y = np.asarray(y, dtype=float)
        w = self.half_width
        out = np.zeros_like(y)
        inside = np.abs(y) < w
        u = 1.0 - (y[inside] / w) ** 2
        with np.errstate(over="ignore", divide="ignore"):
            out[inside] = np.exp(-u ** (-self.kappa))
        return out

    def _raw_integral(self, lo, hi):
        if hi <= lo:
            return 0.0
        mid, half = (hi + lo) / 2, (hi - lo) / 2
        return half * float(np.sum(self._wz * self._raw(mid + half * self._z)))

    def bump(self, y):
        return self._norm * self._raw(y)

    def bump_cdf(self, y):
        w = self.half_width
        if y <= -w:
            return 0.0
        if y >= w:
            return 1.0
        if y <= 0:
            return self._norm * self._raw_integral(-w, y)
        return 1.0 - self._norm * self._raw_integral(y, w)

    def bump_derivatives(self, y, kmax):
        """``phi^{(k)}(y)`` for k = 0..kmax via jet arithmetic."""
        w = self.half_width
        if abs(y) >= w:
            return np.zeros(kmax + 1, dtype=complex)
        x = Jet.variable(y, kmax, self.prec)
        u = 1 - (x * (1.0 / w)) * (x * (1.0 / w))
        phi = (-(u.power(-self.kappa))).exp() * self._norm
        return phi.derivatives()

    def value(self, x):
        lo, hi = self.edges
        return self.bump_cdf(x - lo) - self.bump_cdf(x - hi)

    def __call__(self, x):
        return np.array([self.value(v) for v in np.atleast_1d(x)])

    def derivatives(self, x, kmax):
        """Real array ``g^{(k)}(x)``, k = 0..kmax."""
        lo, hi = self.edges
        out = np.zeros(kmax + 1)
        out[0] = self.value(x)
        if kmax >= 1:
            d = self.bump_derivatives(x - lo, kmax - 1) - self.bump_derivatives(x - hi, kmax - 1)
            out[1:] = d.real
        return out

    def as_data(self, max_order=60):
        """The cutoff as 1-D NumericData with a thread-safe per-point cache."""
        cache: Dict[float, np.ndarray] = {}
        lock = threading.Lock()
        cutoff = self

        def oracle(point, alpha):
            x = float(point[0])
            k = alpha[0]
            with lock:
                arr = cache.get(x)
            if arr is None or len(arr) <= k:
                arr = cutoff.derivatives(x, max(k, min(max_order, 8)))
                with lock:
                    cache[x] = arr
            v = arr[k]
            return v, 1e-13 * (abs(v) + 1e-300) * (k + 1)

        return NumericData(oracle, 1, max_order, "gevrey cutoff")


def make_gevrey_cutoff(rho, support, plateau, delta=None, quadrature_order=200, max_order=60, prec=None):
    """Build the cutoff and its NumericData view.

    ``delta`` defaults to the largest transition width that fits.
    """
    A, B = map(float, support)
    a, b = map(float, plateau)
    if delta is None:
        delta = min(a - A, B - b)
    cut = GevreyCutoff(rho, (A, B), (a, b), float(delta), quadrature_order, prec)
    return cut, cut.as_data(max_order)


def fit_gevrey_constants(max_abs_derivs, rho):
    """Smallest ``(C, R)`` (R >= 1) with ``M_k <= C R^k k^(rho k)`` for the given maxima.

    Returns ``(C, R, residual)``; residual is the mean log gap to the envelope.
    """
    m = np.asarray(max_abs_derivs, dtype=float)
    rho = float(rho)
    C = max(m[0], 1e-300)
    logs = []
    R = 1.0
    for k in range(1, len(m)):
        if m[k] <= 0:
            continue
        r = math.exp((math.log(m[k]) - math.log(C) - rho * k * math.log(k)) / k)
        R = max(R, r)
    for k in range(len(m)):
        if m[k] > 0:
            env = math.log(C) + k * math.log(R) + (rho * k * math.log(k) if k else 0.0)
            logs.append(env - math.log(m[k]))
    return C, R, float(np.mean(logs)) if logs else 0.0
