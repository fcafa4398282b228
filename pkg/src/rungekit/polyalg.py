"""Multivariate polynomials with complex coefficients and operator conventions.

Polynomials live in the fixed frame ``x1 .. xd``.  A polynomial ``Q`` acts on
functions through ``Q(D)`` with ``D_j = -i d/dx_j``, so that
``Q(D) exp(i<lam, x>) = Q(lam) exp(i<lam, x>)``.

Two coefficient modes exist and are never mixed:

* exact: :class:`ExactComplex`, a pair of :class:`fractions.Fraction`
* float: builtin ``complex`` (binary64), compared with ``FLOAT_TOL``

Text grammar accepted by :func:`parse_poly`::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*        # "/" only by a nonzero constant
    unary  := ("+" | "-") unary | power
    power  := atom ("^" INTEGER)?
    atom   := NUMBER | "i" | "x" INTEGER | "(" expr ")"
    NUMBER := DIGITS ("." DIGITS)? (("e" | "E") ("+" | "-")? DIGITS)?
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

FLOAT_TOL = 1e-12

Alpha = Tuple[int, ...]


class ModeError(TypeError):
    """Exact and float quantities were combined."""


class PolySyntaxError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class CharacteristicError(ValueError):
    """e_d is characteristic for P, so no slab decomposition exists."""

    def __init__(self, value):
        super().__init__(f"e_d is characteristic: P_m(e_d) = {value}")
        self.value = value


# ---------------------------------------------------------------------------
# scalars


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    raise ModeError(f"cannot use {type(x).__name__} in exact mode")


class ExactComplex:
    """Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)

    @staticmethod
    def coerce(x):
        if isinstance(x, ExactComplex):
            return x
        if isinstance(x, (int, Fraction, np.integer)):
            return ExactComplex(x, 0)
        raise ModeError(f"cannot combine ExactComplex with {type(x).__name__}")

    def __add__(self, other):
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return ExactComplex.coerce(other) - self

    def __mul__(self, other):
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re * o.re - self.im * o.im,
                            self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = ExactComplex.coerce(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        return ExactComplex((self.re * o.re + self.im * o.im) / den,
                            (self.im * o.re - self.re * o.im) / den)

    def __rtruediv__(self, other):
        return ExactComplex.coerce(other) / self

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = ExactComplex(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return ExactComplex(self.re, -self.im)

    def __abs__(self):
        return math.hypot(self.re, self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, ExactComplex):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactComplex({self.re}, {self.im})"


ZERO = ExactComplex(0)
ONE = ExactComplex(1)
I_UNIT = ExactComplex(0, 1)


def is_exact_scalar(c):
    return isinstance(c, (ExactComplex, int, Fraction))


def to_complex(c):
    return complex(c)


def minus_i_power(k, exact):
    """(-i)**k in the requested mode."""
    k %= 4
    if exact:
        return (ONE, ExactComplex(0, -1), ExactComplex(-1), I_UNIT)[k]
    return (1 + 0j, -1j, -1 + 0j, 1j)[k]


def scalar_is_zero(c, exact):
    if exact:
        return not c
    return abs(c) <= FLOAT_TOL


# ---------------------------------------------------------------------------
# polynomials


def _falling(b, a):
    out = 1
    for t in range(a):
        out *= b - t
    return out


class MultiPoly:
    """Sparse polynomial in ``dim`` variables.

    ``terms`` maps exponent tuples to nonzero coefficients.  Instances are
    treated as immutable; every operation returns a new polynomial.
    """

    __slots__ = ("dim", "terms", "exact", "_hash")

    def __init__(self, dim, terms=None, exact=True):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.exact = bool(exact)
        self._hash = None
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim or min(alpha) < 0:
                raise ValueError(f"bad exponent {alpha} for dim {self.dim}")
            c = self._coerce(c)
            if alpha in clean:
                c = clean[alpha] + c
            clean[alpha] = c
        # float mode keeps tiny coefficients; only exact zeros are dropped
        self.terms = {a: c for a, c in clean.items() if c != 0}

    def _coerce(self, c):
        if self.exact:
            return ExactComplex.coerce(c)
        if isinstance(c, ExactComplex):
            raise ModeError("exact coefficient in float polynomial")
        return complex(c)

    # construction helpers

    @classmethod
    def zero(cls, dim, exact=True):
        return cls(dim, {}, exact)

    @classmethod
    def constant(cls, dim, c, exact=True):
        return cls(dim, {(0,) * dim: c}, exact)

    @classmethod
    def variable(cls, dim, j, exact=True):
        """The coordinate ``x_{j+1}`` (0-based ``j``)."""
        alpha = [0] * dim
        alpha[j] = 1
        return cls(dim, {tuple(alpha): 1}, exact)

    def to_float(self):
        if not self.exact:
            return self
        return MultiPoly(self.dim, {a: complex(c) for a, c in self.terms.items()}, exact=False)

    # basic queries

    @property
    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        if not self.terms:
            return -1
        return max(sum(a) for a in self.terms)

    def degree_in(self, j):
        """Degree in the variable ``x_{j+1}``; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(a[j] for a in self.terms)

    def coeff(self, alpha):
        alpha = tuple(alpha)
        if alpha in self.terms:
            return self.terms[alpha]
        return ZERO if self.exact else 0j

    def constant_term(self):
        return self.coeff((0,) * self.dim)

    def _check(self, other):
        if not isinstance(other, MultiPoly):
            raise TypeError("expected MultiPoly")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch {self.dim} vs {other.dim}")
        if other.exact != self.exact:
            raise ModeError("cannot mix exact and float polynomials")

    def _as_poly(self, other):
        if isinstance(other, MultiPoly):
            self._check(other)
            return other
        return MultiPoly.constant(self.dim, other, self.exact)

    # arithmetic

    def __add__(self, other):
        other = self._as_poly(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out[a] + c if a in out else c
        return MultiPoly(self.dim, out, self.exact)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.dim, {a: -c for a, c in self.terms.items()}, self.exact)

    def __sub__(self, other):
        return self + (-self._as_poly(other))

    def __rsub__(self, other):
        return self._as_poly(other) - self

    def scale(self, c):
        c = self._coerce(c)
        return MultiPoly(self.dim, {a: c * v for a, v in self.terms.items()}, self.exact)

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        return self.mul(other)

    __rmul__ = __mul__

    def mul(self, other, max_degree=None):
        """Product, optionally dropping monomials of total degree > max_degree."""
        self._check(other)
        out = {}
        for a, ca in self.terms.items():
            da = sum(a)
            for b, cb in other.terms.items():
                if max_degree is not None and da + sum(b) > max_degree:
                    continue
                key = tuple(x + y for x, y in zip(a, b))
                v = ca * cb
                out[key] = out[key] + v if key in out else v
        return MultiPoly(self.dim, out, self.exact)

    def pow(self, k, max_degree=None):
        if k < 0:
            raise ValueError("negative power")
        out = MultiPoly.constant(self.dim, 1, self.exact)
        base = self
        while k:
            if k & 1:
                out = out.mul(base, max_degree)
            k >>= 1
            if k:
                base = base.mul(base, max_degree)
        return out

    def __pow__(self, k):
        return self.pow(k)

    def truncate(self, max_degree):
        return MultiPoly(self.dim, {a: c for a, c in self.terms.items()
                                    if sum(a) <= max_degree}, self.exact)

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        if self.dim != other.dim or self.exact != other.exact:
            return False
        if self.exact:
            return self.terms == other.terms
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coeff(k) - other.coeff(k)) <= FLOAT_TOL for k in keys)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, self.exact, frozenset(self.terms.items())))
        return self._hash

    # calculus

    def derivative(self, alpha):
        """Partial derivative d^alpha (not D^alpha)."""
        alpha = tuple(alpha)
        out = {}
        for b, c in self.terms.items():
            if any(bi < ai for bi, ai in zip(b, alpha)):
                continue
            f = 1
            for bi, ai in zip(b, alpha):
                f *= _falling(bi, ai)
            out[tuple(bi - ai for bi, ai in zip(b, alpha))] = c * f
        return MultiPoly(self.dim, out, self.exact)

    def act_on(self, f):
        """``self(D) f`` for a polynomial ``f`` in the same variables."""
        self._check(f)
        out = {}
        fdeg = f.degree
        for a, ca in self.terms.items():
            order = sum(a)
            if order > fdeg:
                continue
            pref = ca * minus_i_power(order, self.exact)
            for b, cb in f.terms.items():
                if any(bi < ai for bi, ai in zip(b, a)):
                    continue
                fac = 1
                for bi, ai in zip(b, a):
                    fac *= _falling(bi, ai)
                key = tuple(bi - ai for bi, ai in zip(b, a))
                v = pref * cb * fac
                out[key] = out[key] + v if key in out else v
        return MultiPoly(self.dim, out, self.exact)

    def shift_symbol(self, lam):
        """The polynomial ``x -> self(x + lam)``."""
        lam = [self._coerce(v) for v in lam]
        out = MultiPoly.zero(self.dim, self.exact)
        shifted = [MultiPoly.variable(self.dim, j, self.exact) + lam[j]
                   for j in range(self.dim)]
        for a, c in self.terms.items():
            term = MultiPoly.constant(self.dim, c, self.exact)
            for j, aj in enumerate(a):
                if aj:
                    term = term * shifted[j].pow(aj)
            out = out + term
        return out

    # evaluation

    def __call__(self, point):
        """Evaluate at one point; exact arithmetic if point entries are exact."""
        point = tuple(point)
        if len(point) != self.dim:
            raise ValueError("point has wrong dimension")
        if self.exact and all(isinstance(p, (int, Fraction, ExactComplex)) for p in point):
            acc = ExactComplex(0)
            pts = [ExactComplex.coerce(p) for p in point]
            for a, c in self.terms.items():
                v = c
                for p, ai in zip(pts, a):
                    if ai:
                        v = v * p ** ai
                acc = acc + v
            return acc
        acc = 0j
        for a, c in self.terms.items():
            v = complex(c)
            for p, ai in zip(point, a):
                if ai:
                    v *= complex(p) ** ai
            acc += v
        return acc

    def evaluate_array(self, pts):
        """Vectorized evaluation; ``pts`` has shape (..., dim)."""
        pts = np.asarray(pts)
        if pts.shape[-1] != self.dim:
            raise ValueError("points have wrong trailing dimension")
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for a, c in self.terms.items():
            v = np.full(pts.shape[:-1], complex(c))
            for j, aj in enumerate(a):
                if aj:
                    v = v * pts[..., j] ** aj
            out += v
        return out

    def coefficient_sum(self):
        """Sum of coefficient moduli."""
        return float(sum(abs(complex(c)) for c in self.terms.values()))

    # printing

    def sorted_terms(self):
        """Terms in graded-lexicographic order, highest first."""
        return sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])))

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        mode = "exact" if self.exact else "float"
        return f"MultiPoly(dim={self.dim}, {mode}, {format_poly(self)!r})"


# ---------------------------------------------------------------------------
# printing / parsing / json


def _format_rational(q):
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _format_coeff(c, exact):
    """Return (sign, body, is_one) where body needs no parentheses around it."""
    if exact:
        re, im = c.re, c.im
        if im == 0:
            sign = "-" if re < 0 else "+"
            body = _format_rational(abs(re))
            return sign, body, abs(re) == 1
        if re == 0:
            sign = "-" if im < 0 else "+"
            mag = abs(im)
            body = "i" if mag == 1 else f"{_format_rational(mag)}*i"
            return sign, body, False
        im_s = _format_rational(abs(im))
        op = "-" if im < 0 else "+"
        return "+", f"({_format_rational(re)} {op} {im_s}*i)", False
    re, im = c.real, c.imag
    if im == 0:
        sign = "-" if re < 0 else "+"
        return sign, repr(abs(re)), abs(re) == 1
    if re == 0:
        sign = "-" if im < 0 else "+"
        return sign, f"{repr(abs(im))}*i", False
    op = "-" if im < 0 else "+"
    return "+", f"({repr(re)} {op} {repr(abs(im))}*i)", False


def _format_monomial(alpha):
    parts = []
    for j, e in enumerate(alpha):
        if e == 1:
            parts.append(f"x{j + 1}")
        elif e > 1:
            parts.append(f"x{j + 1}^{e}")
    return "*".join(parts)


def format_poly(p):
    """Canonical text, graded-lex order; parses back to ``p``."""
    if p.is_zero:
        return "0"
    chunks = []
    for alpha, c in p.sorted_terms():
        sign, body, is_one = _format_coeff(c, p.exact)
        mono = _format_monomial(alpha)
        if mono and is_one:
            text = mono
        elif mono:
            text = f"{body}*{mono}"
        else:
            text = body
        if not chunks:
            chunks.append(text if sign == "+" else f"-{text}")
        else:
            chunks.append(f"{sign} {text}")
    return " ".join(chunks)


class _Parser:
    def __init__(self, text, dim, exact):
        self.text = text
        self.dim = dim
        self.exact = exact
        self.pos = 0

    def error(self, msg, pos=None):
        raise PolySyntaxError(msg, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch):
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def parse(self):
        if not self.text.strip():
            self.error("empty expression")
        p = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return p

    def expr(self):
        p = self.term()
        while True:
            if self.take("+"):
                p = p + self.term()
            elif self.take("-"):
                p = p - self.term()
            else:
                return p

    def term(self):
        p = self.unary()
        while True:
            if self.take("*"):
                p = p * self.unary()
            elif self.peek() == "/":
                where = self.pos
                self.pos += 1
                q = self.unary()
                if q.degree > 0:
                    self.error("division by a non-constant", where)
                if q.is_zero:
                    self.error("division by zero", where)
                c = q.constant_term()
                p = p.scale((ONE / c) if self.exact else 1 / c)
            else:
                return p

    def unary(self):
        if self.take("-"):
            return -self.unary()
        if self.take("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.take("^"):
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("expected integer exponent")
            base = base.pow(int(self.text[start:self.pos]))
        return base

    def number(self):
        start = self.pos
        t = self.text
        while self.pos < len(t) and t[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(t) and t[self.pos] == ".":
            self.pos += 1
            while self.pos < len(t) and t[self.pos].isdigit():
                self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            save = self.pos
            self.pos += 1
            if self.pos < len(t) and t[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(t) and t[self.pos].isdigit():
                while self.pos < len(t) and t[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        literal = t[start:self.pos]
        if literal in ("", "."):
            self.error("malformed number", start)
        value = Fraction(literal)
        return MultiPoly.constant(self.dim, value if self.exact else float(value), self.exact)

    def atom(self):
        ch = self.peek()
        if not ch:
            self.error("unexpected end of input")
        if ch == "(":
            self.pos += 1
            p = self.expr()
            if not self.take(")"):
                self.error("expected ')'")
            return p
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch == "i" and not self.text[self.pos + 1:self.pos + 2].isalnum():
            self.pos += 1
            return MultiPoly.constant(self.dim, I_UNIT if self.exact else 1j, self.exact)
        if ch == "x":
            start = self.pos
            self.pos += 1
            s = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if s == self.pos:
                self.error("expected variable index", start)
            j = int(self.text[s:self.pos])
            if not 1 <= j <= self.dim:
                raise PolySyntaxError(f"variable x{j} out of range for dim {self.dim}", start)
            return MultiPoly.variable(self.dim, j - 1, self.exact)
        self.error(f"unexpected {ch!r}")


def parse_poly(text, dim, exact=True):
    """Parse polynomial text (grammar in the module docstring)."""
    return _Parser(text, dim, exact).parse()


def poly_to_json(p):
    terms = []
    for alpha, c in p.sorted_terms():
        if p.exact:
            re, im = _format_rational(c.re), _format_rational(c.im)
        else:
            re, im = repr(c.real), repr(c.imag)
        terms.append({"alpha": list(alpha), "re": re, "im": im})
    return {"dim": p.dim, "mode": "exact" if p.exact else "float", "terms": terms}


def poly_from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    exact = obj.get("mode", "exact") == "exact"
    terms = {}
    for t in obj["terms"]:
        if exact:
            c = ExactComplex(Fraction(t["re"]), Fraction(t["im"]))
        else:
            c = complex(float(t["re"]), float(t["im"]))
        terms[tuple(t["alpha"])] = c
    return MultiPoly(int(obj["dim"]), terms, exact)


# ---------------------------------------------------------------------------
# structure of P


def principal_part(p):
    if p.is_zero:
        raise ValueError("the zero polynomial has no principal part")
    m = p.degree
    return MultiPoly(p.dim, {a: c for a, c in p.terms.items() if sum(a) == m}, p.exact)


def _embed(q, dim):
    """Polynomial in dim-1 variables viewed in dim variables (x_d absent)."""
    return MultiPoly(dim, {a + (0,): c for a, c in q.terms.items()}, q.exact)


@dataclass(frozen=True, eq=False)
class SlabDecomposition:
    """``base = sum_k Q_k(x1..x_{d-1}) x_d^k``."""

    base: MultiPoly
    m: int
    q_list: Tuple[MultiPoly, ...]
    leading_coeff: object
    normalized: bool

    @property
    def dim(self):
        return self.base.dim

    @property
    def exact(self):
        return self.base.exact

    def reassemble(self):
        d = self.base.dim
        xd = MultiPoly.variable(d, d - 1, self.exact)
        out = MultiPoly.zero(d, self.exact)
        for k, q in enumerate(self.q_list):
            if not q.is_zero:
                out = out + _embed(q, d) * xd.pow(k)
        return out

    def __hash__(self):
        return hash((self.base, self.normalized))

    def __eq__(self, other):
        if not isinstance(other, SlabDecomposition):
            return NotImplemented
        return self.base == other.base and self.normalized == other.normalized


def slab_decompose(p, normalize=True):
    if p.dim < 2:
        raise ValueError("need at least two variables")
    m = p.degree
    if m < 1:
        raise ValueError("P must be non-constant")
    d = p.dim
    lead = p.coeff((0,) * (d - 1) + (m,))
    if scalar_is_zero(lead, p.exact):
        raise CharacteristicError(lead)
    buckets = [dict() for _ in range(m + 1)]
    for a, c in p.terms.items():
        buckets[a[-1]][a[:-1]] = c
    if normalize:
        inv = (ONE / lead) if p.exact else 1 / lead
        buckets = [{a: c * inv for a, c in b.items()} for b in buckets]
        base = p.scale(inv)
    else:
        base = p
    q_list = tuple(MultiPoly(d - 1, b, p.exact) for b in buckets)
    return SlabDecomposition(base, m, q_list, lead, normalize)


@dataclass(frozen=True)
class HypothesisReport:
    e1_characteristic: bool
    ed_noncharacteristic: bool
    degx1_ok: bool
    gamma: Optional[Fraction]
    single_direction: str
    directions: Tuple[Tuple[float, ...], ...] = ()

    @property
    def structural_pass(self):
        return (self.e1_characteristic and self.ed_noncharacteristic and self.degx1_ok
                and self.single_direction in ("exact-verified", "sampled-plausible"))

    def to_json(self):
        return {
            "e1_characteristic": self.e1_characteristic,
            "ed_noncharacteristic": self.ed_noncharacteristic,
            "degx1_ok": self.degx1_ok,
            "gamma": None if self.gamma is None else _format_rational(self.gamma),
            "single_direction": self.single_direction,
            "directions": [list(v) for v in self.directions],
        }


def _degx1_gamma(q_list, m):
    ok = True
    gamma = Fraction(0)
    for k in range(m):
        q = q_list[k]
        if q.is_zero:
            continue
        dk = q.degree_in(0)
        if dk >= m - k:
            ok = False
        gamma = max(gamma, Fraction(dk, m - k))
    return ok, (gamma if ok else None)


def _sphere_samples(dim, n):
    """Quasi-random unit vectors from a scrambled-free Halton sequence."""
    from scipy.stats import qmc
    pts = qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]
    from scipy.special import ndtri
    g = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def check_hypotheses(dec, samples=20000):
    """Structural assumptions on P (carried by the report, never raised)."""
    p = dec.base
    d, m = p.dim, dec.m
    pm = principal_part(p)
    e1_char = scalar_is_zero(pm.coeff((m,) + (0,) * (d - 1)), p.exact)
    ed_nonchar = not scalar_is_zero(pm.coeff((0,) * (d - 1) + (m,)), p.exact)
    ok, gamma = _degx1_gamma(dec.q_list, m)
    dirs = ()
    if d == 2:
        dirs = tuple(characteristic_directions_2d(p))
        if len(dirs) == 1 and np.allclose(dirs[0], (1.0, 0.0), atol=1e-12):
            single = "exact-verified"
        else:
            single = "failed"
    elif not e1_char:
        single = "failed"
    else:
        single = _sampled_single_direction(pm, samples)
    return HypothesisReport(e1_char, ed_nonchar, ok, gamma, single, dirs)


def _sampled_single_direction(pm, samples):
    """Heuristic for d >= 3: search the sphere for zeros of P_m away from +-e1."""
    from scipy.optimize import minimize
    pf = pm.to_float()
    scale = pf.coefficient_sum()
    u = _sphere_samples(pm.dim, samples)
    vals = np.abs(pf.evaluate_array(u))
    far = np.nonzero(np.abs(u[:, 0]) < 0.99)[0]
    if len(far) == 0:
        return "unknown"

    def objective(y):
        y = y / np.linalg.norm(y)
        return abs(pf(tuple(y))) ** 2 / scale ** 2

    for idx in far[np.argsort(vals[far])[:20]]:
        res = minimize(objective, u[idx], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-24, "maxiter": 4000})
        y = res.x / np.linalg.norm(res.x)
        if res.fun < 1e-16 and abs(y[0]) < 0.99:
            return "failed"
    return "sampled-plausible"


def _real_roots_exact(poly_t):
    """Real roots of a univariate Gaussian-rational polynomial (coeff list)."""
    import sympy
    t = sympy.Symbol("t")
    re = sum(sympy.Rational(c.re.numerator, c.re.denominator) * t ** k for k, c in enumerate(poly_t))
    im = sum(sympy.Rational(c.im.numerator, c.im.denominator) * t ** k for k, c in enumerate(poly_t))
    g = sympy.gcd(sympy.Poly(re, t, domain="QQ"), sympy.Poly(im, t, domain="QQ"))
    if g.degree() <= 0:
        return []
    return sorted({float(r) for r in sympy.real_roots(g)})


def _real_roots_float(poly_t, tol=1e-8):
    c = np.array([complex(v) for v in poly_t])
    nz = np.nonzero(np.abs(c) > FLOAT_TOL)[0]
    if len(nz) == 0:
        raise ValueError("identically zero binary form")
    c = c[: nz[-1] + 1]
    if len(c) == 1:
        return []
    roots = np.roots(c[::-1])
    out = []
    scale = np.sum(np.abs(c))
    for r in roots:
        x = r.real
        if abs(r.imag) > tol * max(1.0, abs(r)):
            continue
        res = abs(np.polyval(c[::-1], x))
        if res > 1e-6 * scale * max(1.0, abs(x)) ** (len(c) - 1):
            raise ArithmeticError(f"root refinement failed, residual {res:.3e}")
        out.append(x)
    out.sort()
    merged = []
    for x in out:
        if not merged or abs(x - merged[-1]) > 1e-7 * max(1.0, abs(x)):
            merged.append(x)
    return merged


def characteristic_directions_2d(p):
    """Real characteristic directions of a bivariate P, normalized."""
    if p.dim != 2:
        raise ValueError("only for d = 2")
    pm = principal_part(p)
    m = pm.degree
    # P_m(1, t) = sum_k a_(m-k, k) t^k
    coeffs = [pm.coeff((m - k, k)) for k in range(m + 1)]
    roots = _real_roots_exact(coeffs) if pm.exact else _real_roots_float(coeffs)
    dirs = []
    for t in roots:
        n = math.hypot(1.0, t)
        dirs.append((1.0 / n, t / n))
    if scalar_is_zero(pm.coeff((0, m)), pm.exact):
        dirs.append((0.0, 1.0))
    return dirs


def apply_operator(q, f):
    """``Q(D) f`` for Cauchy data ``f`` (see :mod:`rungekit.funcdata`)."""
    return f.apply_operator(q)


def multi_indices(dim, max_total):
    """All exponent tuples with |alpha| <= max_total, graded order."""
    for total in range(max_total + 1):
        for combo in itertools.combinations_with_replacement(range(dim), total):
            alpha = [0] * dim
            for j in combo:
                alpha[j] += 1
            yield tuple(alpha)
