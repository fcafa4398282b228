"""Truncated Taylor series ("jets") in one real variable.

A :class:`Jet` of order ``n`` at ``center`` stores ``c_0..c_n`` with
``f(center + h) = sum c_k h^k + O(h^{n+1})``; ``f^{(k)}(center) = k! c_k``.
Coefficients are complex128 by default.  Passing ``prec`` (bits) switches to
mpmath numbers so that long recurrences do not lose everything to rounding.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np


class JetMismatch(ValueError):
    pass


class Jet:
    __slots__ = ("center", "order", "coeffs", "prec")

    def __init__(self, center, coeffs, prec=None):
        self.center = center
        self.prec = prec
        if prec is None:
            self.coeffs = np.asarray(coeffs, dtype=complex)
        else:
            with mpmath.workprec(prec):
                self.coeffs = np.array([mpmath.mpc(c) for c in coeffs], dtype=object)
        self.order = len(self.coeffs) - 1

    # constructors

    @classmethod
    def variable(cls, center, order, prec=None):
        c = [0] * (order + 1)
        c[0] = center
        if order >= 1:
            c[1] = 1
        return cls(center, c, prec)

    @classmethod
    def constant(cls, value, center, order, prec=None):
        c = [0] * (order + 1)
        c[0] = value
        return cls(center, c, prec)

    def _like(self, coeffs):
        out = Jet.__new__(Jet)
        out.center = self.center
        out.prec = self.prec
        out.coeffs = coeffs
        out.order = len(coeffs) - 1
        return out

    def _ctx(self):
        return mpmath.workprec(self.prec) if self.prec else _nullctx

    def _check(self, other):
        if not isinstance(other, Jet):
            return
        if other.order != self.order or other.center != self.center:
            raise JetMismatch("jets must share center and order")
        if other.prec != self.prec:
            raise JetMismatch("jets must share precision")

    # arithmetic

    def __add__(self, other):
        self._check(other)
        with self._ctx():
            if isinstance(other, Jet):
                return self._like(self.coeffs + other.coeffs)
            c = self.coeffs.copy()
            c[0] = c[0] + other
            return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        with self._ctx():
            return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        self._check(other)
        with self._ctx():
            if not isinstance(other, Jet):
                return self._like(self.coeffs * other)
            n = self.order + 1
            if self.prec is None:
                return self._like(np.convolve(self.coeffs, other.coeffs)[:n])
            a, b = self.coeffs, other.coeffs
            out = np.empty(n, dtype=object)
            for k in range(n):
                out[k] = mpmath.fsum(a[i] * b[k - i] for i in range(k + 1))
            return self._like(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        with self._ctx():
            return self._like(self.coeffs / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, alpha):
        return self.power(alpha)

    def _zeros(self):
        if self.prec is None:
            return np.zeros(self.order + 1, dtype=complex)
        return np.array([mpmath.mpc(0)] * (self.order + 1), dtype=object)

    def exp(self):
        a = self.coeffs
        b = self._zeros()
        with self._ctx():
            b[0] = mpmath.exp(a[0]) if self.prec else np.exp(a[0])
            for k in range(1, self.order + 1):
                s = 0
                for j in range(1, k + 1):
                    s = s + j * a[j] * b[k - j]
                b[k] = s / k
        return self._like(b)

    def power(self, alpha):
        """``self ** alpha`` for real ``alpha``; needs a nonzero constant term."""
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("power of a jet with zero constant term")
        b = self._zeros()
        with self._ctx():
            b[0] = mpmath.power(a[0], alpha) if self.prec else a[0] ** alpha
            for k in range(1, self.order + 1):
                s = 0
                for j in range(1, k + 1):
                    s = s + ((alpha + 1) * j - k) * a[j] * b[k - j]
                b[k] = s / (k * a[0])
        return self._like(b)

    def reciprocal(self):
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        b = self._zeros()
        with self._ctx():
            b[0] = 1 / a[0]
            for k in range(1, self.order + 1):
                s = 0
                for j in range(1, k + 1):
                    s = s + a[j] * b[k - j]
                b[k] = -s / a[0]
        return self._like(b)

    def log(self):
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("log of a jet with zero constant term")
        c = self._zeros()
        with self._ctx():
            c[0] = mpmath.log(a[0]) if self.prec else np.log(a[0])
            for k in range(1, self.order + 1):
                s = 0
                for j in range(1, k):
                    s = s + j * c[j] * a[k - j]
                c[k] = (a[k] - s / k) / a[0]
        return self._like(c)

    # readout

    def derivative(self, k):
        return self.coeffs[k] * math.factorial(k)

    def derivatives(self):
        """Array of ``f^{(k)}(center)``, k = 0..order, as complex128."""
        fact = [math.factorial(k) for k in range(self.order + 1)]
        if self.prec is None:
            return self.coeffs * np.array(fact, dtype=float)
        with self._ctx():
            return np.array([complex(c * f) for c, f in zip(self.coeffs, fact)])

    def __repr__(self):
        return f"Jet(center={self.center}, order={self.order}, coeffs={list(self.coeffs)!r})"


class _NullCtx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


_nullctx = _NullCtx()


def jet_of_product(a, b):
    if a.center != b.center or a.order != b.order:
        raise JetMismatch("jets must share center and order")
    return a * b
