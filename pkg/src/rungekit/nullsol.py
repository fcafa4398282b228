"""Half-space and slab supported null solutions in two variables.

Along the horizontal line ``s = sigma + i tau`` the root ``t(s)`` of
``P(s e1 + t e2) = 0`` is tracked continuously from the anchor ``s = i tau``,
and

    v(x) = int exp(i (x1 s + x2 t(s))) exp(-(s/i)^r) ds

is computed with panelled Gauss-Kronrod quadrature.  ``(s/i)^r`` uses the
principal branch; it is real and positive on the positive imaginary axis.
The integral is supported in ``x1 <= 0``.  Multiplying it by a Gevrey cutoff
in ``x1`` and solving the Cauchy problem with the resulting traces gives a
null solution supported in a slab.
"""

from __future__ import annotations

import csv
import itertools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Optional, Tuple

import numpy as np

from .cauchy import cauchy_solve, convergence_tail_bound, operator_bound_q
from .funcdata import NumericData, fit_gevrey_constants, make_gevrey_cutoff
from .polyalg import (ExactComplex, check_hypotheses, parse_poly,
                      slab_decompose)
from .quadrature import panel_nodes

EPS = np.finfo(float).eps


class RootCollisionError(RuntimeError):
    def __init__(self, s):
        super().__init__(f"roots of P(s e1 + t e2) collide near s = {s}")
        self.s = s


class ResidualError(RuntimeError):
    pass


class DecayError(ValueError):
    pass


class TailError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# presets


def heat_decomposition():
    """``d/dx1 - d^2/dx2^2`` with time ``x1``; symbol ``i x1 + x2^2``."""
    return slab_decompose(parse_poly("i*x1 + x2^2", 2))


def schrodinger_decomposition():
    """``i d/dx1 + d^2/dx2^2``; symbol ``-x1 - x2^2``."""
    return slab_decompose(parse_poly("-x1 - x2^2", 2))


PRESETS = {"heat": heat_decomposition, "schrodinger": schrodinger_decomposition}


# ---------------------------------------------------------------------------
# growth data of the root branches


def _newton_exponents(dec):
    """Exponents ``e`` with ``t ~ s^e`` for large ``s`` (upper Newton hull)."""
    m = dec.m
    pts = [(k, dec.q_list[k].degree) for k in range(m + 1) if not dec.q_list[k].is_zero]
    hull = []
    for p in sorted(pts):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return [Fraction(y0 - y1, x1 - x0) for (x0, y0), (x1, y1) in zip(hull, hull[1:])]


def growth_data(dec):
    """``(mu, p)``: largest growth exponent of ``|t(s)|`` and ramification index."""
    exps = _newton_exponents(dec)
    if not exps:
        return Fraction(0), 1
    mu = max(exps)
    p = reduce(lambda a, b: a * b // math.gcd(a, b), [e.denominator for e in exps], 1)
    return max(mu, Fraction(0)), p


def _sympy_coeff(c):
    import sympy
    if isinstance(c, ExactComplex):
        return sympy.Rational(c.re.numerator, c.re.denominator) + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)
    c = complex(c)
    return sympy.Float(c.real) + sympy.I * sympy.Float(c.imag)


def branch_point_radius(dec):
    """Largest modulus of a zero of the discriminant of ``P(s, .)``."""
    import sympy
    s, t = sympy.symbols("s t")
    expr = 0
    for a, c in dec.base.terms.items():
        expr += _sympy_coeff(c) * s ** a[0] * t ** a[1]
    if dec.m < 2:
        return 0.0
    disc = sympy.Poly(sympy.discriminant(sympy.Poly(expr, t), t), s)
    coeffs = [complex(c) for c in disc.all_coeffs()]
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
    if len(coeffs) <= 1:
        return 0.0
    return float(np.max(np.abs(np.roots(coeffs))))


def estimate_M(dec):
    """``M`` with branches analytic for ``|s^(1/p)| > M`` (from the branch points)."""
    _, p = growth_data(dec)
    return branch_point_radius(dec) ** (1.0 / p)


# ---------------------------------------------------------------------------
# contour and branches


@dataclass(frozen=True)
class ContourSpec:
    """Horizontal contour ``Im s = tau`` truncated to ``|Re s| <= sigma_max``.

    ``sigma_max=None`` picks the truncation from the tail estimate;
    ``panel_width=None`` picks it from the oscillation rate of the integrand.
    """

    tau: float = 1.0
    r: Fraction = Fraction(3, 4)
    sigma_max: Optional[float] = None
    nodes: Tuple[str, int] = ("gauss-kronrod", 15)
    panel_width: Optional[float] = None
    tail_rtol: float = 1e-17

    N = (1, 0)
    xi = (0, 1)

    def validate(self, dec):
        mu, p = growth_data(dec)
        r = Fraction(self.r)
        if not (max(Fraction(1) - Fraction(1, p), mu) < r < 1):
            raise DecayError(f"need max(1 - 1/p, mu) < r < 1 with p={p}, mu={mu}; got r={r}")
        M = estimate_M(dec)
        if not self.tau > (2 * M) ** p:
            raise DecayError(f"tau={self.tau} must exceed (2M)^p = {(2 * M) ** p:.6g}")
        return mu, p, M

    def to_json(self):
        return {"tau": self.tau, "r": str(Fraction(self.r)), "sigma_max": self.sigma_max,
                "nodes": list(self.nodes), "panel_width": self.panel_width, "tail_rtol": self.tail_rtol}


def _companion_roots(coeffs):
    """Roots of monic ``t^m + sum_{k<m} coeffs[:, k] t^k`` for each row."""
    n, m = coeffs.shape
    if m == 1:
        return -coeffs
    comp = np.zeros((n, m, m), dtype=complex)
    comp[:, 0, :] = -coeffs[:, ::-1]
    comp[:, np.arange(1, m), np.arange(0, m - 1)] = 1
    return np.linalg.eigvals(comp)


def _canonical_order(roots, scale):
    """Imaginary part descending, ties (within 1e-12 scale) by real part descending."""
    tol = 1e-12 * scale
    idx = list(range(len(roots)))

    def key(i):
        return (-round(roots[i].imag / tol) if tol > 0 else -roots[i].imag, -roots[i].real)

    return sorted(idx, key=key)


@dataclass
class PuiseuxBranch:
    """One root ``t(s)`` of ``P(s, t) = 0`` followed along ``Im s = tau``."""

    dec: object
    tau: float
    branch_index: int
    p: int
    mu: Fraction
    anchor_value: complex
    series_head: Tuple[complex, ...] = ()
    residual_tol: float = 1e-10

    def _coeffs(self, s):
        cols = [q.to_float().evaluate_array(s[:, None]) for q in self.dec.q_list[:-1]]
        return np.stack(cols, axis=1)

    def polynomial(self, s, t):
        s = np.asarray(s, dtype=complex)
        t = np.asarray(t, dtype=complex)
        acc = np.zeros(np.broadcast(s, t).shape, dtype=complex)
        for k, q in enumerate(self.dec.q_list):
            acc = acc + q.to_float().evaluate_array(np.asarray(s)[..., None]) * t ** k
        return acc

    def _scale(self, s, t):
        acc = np.zeros(np.broadcast(s, t).shape)
        for k, q in enumerate(self.dec.q_list):
            acc = acc + np.abs(q.to_float().evaluate_array(np.asarray(s)[..., None])) * np.abs(t) ** k
        return acc

    def _polish(self, s, t, steps=2):
        m = self.dec.m
        for _ in range(steps):
            f = self.polynomial(s, t)
            df = np.zeros_like(t)
            for k in range(1, m + 1):
                df = df + k * self.dec.q_list[k].to_float().evaluate_array(s[:, None]) * t ** (k - 1)
            ok = np.abs(df) > 0
            t = np.where(ok, t - np.where(ok, f / np.where(ok, df, 1), 0), t)
        return t

    def _roots(self, sig):
        s = sig + 1j * self.tau
        return _companion_roots(self._coeffs(s))

    def _walk(self, sig, start_value):
        """Track from ``start_value`` along ordered ``sig`` (first entry is the start)."""
        m = self.dec.m
        R = self._roots(sig)
        out = np.empty(len(sig), dtype=complex)
        out[0] = start_value
        if m == 1:
            return R[:, 0]
        perms = list(itertools.permutations(range(m)))
        cur = int(np.argmin(np.abs(R[0] - start_value)))
        out[0] = R[0, cur]
        if len(sig) == 1:
            return out
        # best alignment of consecutive root sets, vectorized over steps
        cost = np.stack([np.abs(R[1:][:, list(pm)] - R[:-1]).sum(axis=1) for pm in perms], axis=1)
        best = np.argmin(cost, axis=1)
        diffs = np.where(np.eye(m, dtype=bool)[None], np.inf, np.abs(R[:, :, None] - R[:, None, :]))
        sep = diffs.min(axis=(1, 2))
        for i in range(1, len(sig)):
            nxt = perms[best[i - 1]][cur]
            jump = abs(R[i, nxt] - R[i - 1, cur])
            if not jump < sep[i] / 2:
                val = self._refine(sig[i - 1], sig[i], R[i - 1, cur], 0)
                nxt = int(np.argmin(np.abs(R[i] - val)))
            cur = nxt
            out[i] = R[i, cur]
        return out

    def _refine(self, a, b, value, depth):
        """Track ``value`` from ``a`` to ``b`` on a finer path; returns the value at ``b``."""
        if depth > 18:
            raise RootCollisionError(complex((a + b) / 2, self.tau))
        sub = np.linspace(a, b, 9)
        R = self._roots(sub)
        cur = value
        for i in range(1, len(sub)):
            d = np.abs(R[i] - cur)
            j = int(np.argmin(d))
            others = np.delete(R[i], j)
            sep = float(np.min(np.abs(others - R[i, j]))) if len(others) else np.inf
            if sep < 1e-10 * (1 + abs(R[i, j])):
                raise RootCollisionError(complex(sub[i], self.tau))
            cur = R[i, j] if d[j] < sep / 2 else self._refine(sub[i - 1], sub[i], cur, depth + 1)
        return cur

    def values(self, sigmas):
        """``t(sigma + i tau)`` for an array of real parts, tracked from ``sigma = 0``."""
        sig = np.asarray(sigmas, dtype=float)
        flat = sig.ravel()
        order = np.argsort(flat, kind="stable")
        srt = flat[order]
        pos = srt >= 0
        res = np.empty(len(flat), dtype=complex)
        right = np.concatenate([[0.0], srt[pos]])
        left = np.concatenate([[0.0], srt[~pos][::-1]])
        tr = self._walk(right, self.anchor_value)[1:]
        tl = self._walk(left, self.anchor_value)[1:]
        vals = np.concatenate([tl[::-1], tr])
        s = srt + 1j * self.tau
        vals = self._polish(s, vals)
        resid = np.abs(self.polynomial(s, vals))
        scale = self._scale(s, vals)
        if np.any(resid > self.residual_tol * np.maximum(scale, 1.0)):
            i = int(np.argmax(resid / np.maximum(scale, 1.0)))
            raise ResidualError(f"branch residual {resid[i]:.3g} at s = {s[i]}")
        res[order] = vals
        return res.reshape(sig.shape)

    def __call__(self, sigmas):
        return self.values(sigmas)


def puiseux_branch(dec, branch_index, contour):
    """Root branch anchored at ``s = i tau``, numbered in canonical order."""
    if dec.dim != 2:
        raise NotImplementedError("branches are tracked for d = 2 only")
    mu, p = growth_data(dec)
    tau = float(contour.tau)
    s0 = np.array([1j * tau])
    proto = PuiseuxBranch(dec, tau, branch_index, p, mu, 0j)
    roots = _companion_roots(proto._coeffs(s0))[0]
    scale = max(1.0, float(np.max(np.abs(roots))))
    order = _canonical_order(roots, scale)
    if not 0 <= branch_index < len(order):
        raise ValueError(f"branch_index must be in [0, {len(order)})")
    br = PuiseuxBranch(dec, tau, branch_index, p, mu, complex(roots[order[branch_index]]))
    far = np.array([200.0, -200.0])
    tf = br.values(far)
    sf = far + 1j * tau
    br.series_head = tuple(complex(c) for c in tf / sf ** float(mu)) if mu > 0 else ()
    return br


# ---------------------------------------------------------------------------
# quadrature of the contour integral


def _damping(s, r):
    """``exp(-(s/i)^r)`` with the principal power."""
    return np.exp(-np.power(-1j * s, float(r)))


@dataclass
class VField:
    values: np.ndarray
    errors: np.ndarray
    sigma_max: float
    panel_width: float
    n_nodes: int

    def max_abs(self):
        return float(np.max(np.abs(self.values)))


class _Envelope:
    """Upper envelope of ``|integrand|`` beyond the tracked range."""

    def __init__(self, branch, contour, samples=64):
        self.branch = branch
        self.tau = float(contour.tau)
        self.r = float(contour.r)
        mu = float(branch.mu)
        self.mu = mu
        sig = np.concatenate([-np.geomspace(1, 400, samples)[::-1], np.geomspace(1, 400, samples)])
        t = branch.values(sig)
        s = np.abs(sig + 1j * self.tau)
        self.K = 1.1 * float(np.max(np.abs(t) / s ** mu)) if mu > 0 else 1.1 * float(np.max(np.abs(t)))

    def tmax(self, sig):
        s = np.abs(sig + 1j * self.tau)
        return self.K * s ** self.mu

    def log_env(self, sig, x1, ax2, k=0, j=0):
        s = sig + 1j * self.tau
        T = self.tmax(sig)
        with np.errstate(divide="ignore"):
            return (-x1 * self.tau + ax2 * T + k * np.log(np.abs(s)) + j * np.log(T)
                    - np.real(np.power(-1j * s, self.r)))

    def _log_integral(self, lo, hi, x1, ax2, k, j):
        u = np.linspace(np.log(lo), np.log(hi), 4000)
        sig = np.exp(u)
        le = self.log_env(sig, x1, ax2, k, j) + u
        top = np.max(le)
        return top + np.log(np.trapezoid(np.exp(le - top), u)) + np.log(2.0)

    def log_tail(self, S, x1, ax2, k=0, j=0):
        return self._log_integral(S, S * 1e4, x1, ax2, k, j)

    def log_mass(self, S, x1, ax2, k=0, j=0):
        return self._log_integral(min(1e-3, S / 2), S, x1, ax2, k, j)

    def choose_sigma_max(self, ax2_values, k, j, rtol):
        S = 16.0
        target = math.log(rtol)
        for _ in range(60):
            ok = all(self.log_tail(S, 0.0, a, k, j) - self.log_mass(S, 0.0, a, k, j) <= target
                     for a in ax2_values)
            if ok:
                return S
            S *= 1.25
        raise TailError("could not find a contour truncation meeting the tail tolerance")


class _Discretization:
    def __init__(self, branch, contour, S, width):
        n_panels = max(2, int(math.ceil(2 * S / width)))
        nodes, wk, wg = panel_nodes(-S, S, n_panels, contour.nodes)
        self.n_panels, self.npp = nodes.shape
        self.sigma = nodes.ravel()
        self.wk = wk.ravel()
        self.dw = (wk - wg).ravel()
        self.s = self.sigma + 1j * contour.tau
        self.t = branch.values(self.sigma)
        self.damp = _damping(self.s, contour.r)
        self.S, self.width = S, width


_disc_cache = {}
_disc_lock = threading.Lock()


def _discretize(branch, contour, S, width):
    key = (id(branch), contour, round(S, 9), round(width, 12))
    with _disc_lock:
        hit = _disc_cache.get(key)
    if hit is not None and hit[0] is branch:
        return hit[1]
    disc = _Discretization(branch, contour, S, width)
    with _disc_lock:
        if len(_disc_cache) > 8:
            _disc_cache.clear()
        _disc_cache[key] = (branch, disc)
    return disc


def _plan(branch, contour, x1_abs_max, x2_abs_max, k=0, j=0):
    env = _Envelope(branch, contour)
    S = contour.sigma_max
    if S is None:
        S = env.choose_sigma_max(sorted({0.0, float(x2_abs_max)}), k, j, contour.tail_rtol)
    width = contour.panel_width
    if width is None:
        tprime = float(branch.mu) * env.K * max(contour.tau, 1.0) ** (float(branch.mu) - 1) if branch.mu > 0 else 0.0
        rate = x1_abs_max + x2_abs_max * max(tprime, 1.0)
        width = min(1.0, contour.tau, math.pi / max(rate, 1e-12))
    return env, float(S), float(width)


def _tail_errors(env, S, x1, x2, k, j, contour):
    x1 = np.asarray(x1, dtype=float)
    ax2 = np.abs(np.asarray(x2, dtype=float))
    out = np.empty(np.broadcast(x1, ax2).shape)
    cache = {}
    for idx in np.ndindex(out.shape):
        a = float(np.broadcast_to(ax2, out.shape)[idx])
        if a not in cache:
            cache[a] = env.log_tail(S, 0.0, a, k, j)
        out[idx] = math.exp(min(700.0, cache[a] - float(np.broadcast_to(x1, out.shape)[idx]) * contour.tau))
    return out


def _factor(disc, alpha):
    k, j = alpha
    f = np.ones_like(disc.s)
    if k:
        f = f * disc.s ** k
    if j:
        f = f * disc.t ** j
    return f


def hormander_v(contour, branch, points, alpha=(0, 0), chunk=64):
    """``D^alpha v`` at ``points`` (shape (n, 2)) with error estimates.

    The integrand carries ``s^alpha1 t^alpha2``, which differentiates
    ``exp(i <x, (s, t)>)`` by ``D = -i d``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    alpha = tuple(int(a) for a in alpha)
    contour.validate(branch.dec)
    env, S, width = _plan(branch, contour, float(np.max(np.abs(pts[:, 0]))),
                          float(np.max(np.abs(pts[:, 1]))), *alpha)
    disc = _discretize(branch, contour, S, width)
    base = disc.damp * _factor(disc, alpha)
    vals = np.empty(len(pts), dtype=complex)
    qerr = np.empty(len(pts))
    rerr = np.empty(len(pts))
    for c0 in range(0, len(pts), chunk):
        p = pts[c0:c0 + chunk]
        E = np.exp(1j * (p[:, :1] * disc.s[None, :] + p[:, 1:] * disc.t[None, :])) * base[None, :]
        vals[c0:c0 + chunk] = E @ disc.wk
        per_panel = (E * disc.dw[None, :]).reshape(len(p), disc.n_panels, disc.npp).sum(axis=2)
        qerr[c0:c0 + chunk] = np.abs(per_panel).sum(axis=1)
        rerr[c0:c0 + chunk] = (10 + math.sqrt(disc.sigma.size)) * EPS * (np.abs(E) @ np.abs(disc.wk))
    tail = _tail_errors(env, S, pts[:, 0], pts[:, 1], *alpha, contour)
    return VField(vals, qerr + rerr + tail, S, width, disc.sigma.size)


def v_derivative(contour, branch, alpha, points):
    return hormander_v(contour, branch, points, alpha)


def hormander_v_grid(contour, branch, x1s, x2s, alpha=(0, 0), chunk=4096):
    """``D^alpha v`` on the tensor grid ``x1s x x2s``; arrays indexed ``[i1, i2]``.

    The integrand factorizes in ``x1`` and ``x2``, so the grid is one
    matrix product per chunk of contour nodes.
    """
    x1s = np.asarray(x1s, dtype=float)
    x2s = np.asarray(x2s, dtype=float)
    alpha = tuple(int(a) for a in alpha)
    contour.validate(branch.dec)
    env, S, width = _plan(branch, contour, float(np.max(np.abs(x1s))), float(np.max(np.abs(x2s))), *alpha)
    disc = _discretize(branch, contour, S, width)
    base = disc.damp * _factor(disc, alpha)
    n1, n2 = len(x1s), len(x2s)
    vals = np.zeros((n1, n2), dtype=complex)
    absmass = np.zeros((n1, n2))
    qerr = np.zeros((n1, n2))
    npp = disc.npp
    pchunk = max(1, chunk // npp)
    for p0 in range(0, disc.n_panels, pchunk):
        sl = slice(p0 * npp, min(disc.n_panels, p0 + pchunk) * npp)
        E1 = np.exp(1j * x1s[:, None] * disc.s[None, sl]) * base[None, sl]
        E2 = np.exp(1j * x2s[:, None] * disc.t[None, sl])
        vals += (E1 * disc.wk[None, sl]) @ E2.T
        absmass += (np.abs(E1) * np.abs(disc.wk[None, sl])) @ np.abs(E2).T
        P = (sl.stop - sl.start) // npp
        A = (E1 * disc.dw[None, sl]).reshape(n1, P, npp)
        B = E2.reshape(n2, P, npp)
        qerr += np.abs(np.einsum("ipk,jpk->pij", A, B)).sum(axis=0)
    rerr = (10 + math.sqrt(disc.sigma.size)) * EPS * absmass
    tail = _tail_errors(env, S, x1s[:, None], x2s[None, :], *alpha, contour)
    return VField(vals, qerr + rerr + tail, S, width, disc.sigma.size)


def trace_derivatives(contour, branch, x1, kmax, j=0, S=None):
    """``D^(b, j) v(x1, 0)`` for b = 0..kmax, with error estimates."""
    contour.validate(branch.dec)
    env, S0, width = _plan(branch, contour, abs(float(x1)), 0.0, kmax, j)
    disc = _discretize(branch, contour, S0 if S is None else S, width)
    f = np.exp(1j * float(x1) * disc.s) * disc.damp
    if j:
        f = f * disc.t ** j
    vals = np.empty(kmax + 1, dtype=complex)
    errs = np.empty(kmax + 1)
    root = 10 + math.sqrt(disc.sigma.size)
    for b in range(kmax + 1):
        vals[b] = f @ disc.wk
        pp = (f * disc.dw).reshape(disc.n_panels, disc.npp).sum(axis=1)
        tail = math.exp(min(700.0, env.log_tail(disc.S, 0.0, 0.0, b, j) - float(x1) * contour.tau))
        errs[b] = np.abs(pp).sum() + root * EPS * float(np.abs(f) @ np.abs(disc.wk)) + tail
        f = f * disc.s
    return vals, errs


# ---------------------------------------------------------------------------
# support classification


@dataclass
class SupportReport:
    x1: np.ndarray
    column_max: np.ndarray
    column_err: np.ndarray
    classes: Tuple[str, ...]
    threshold: float
    slab: Optional[Tuple[float, float]]

    def to_json(self):
        return {"threshold": self.threshold,
                "slab": None if self.slab is None else list(self.slab),
                "columns": [{"x1": float(x), "max_abs": float(m), "err": float(e), "class": c}
                            for x, m, e, c in zip(self.x1, self.column_max, self.column_err, self.classes)]}


def support_report(field, grid, tol_rel, errors=None):
    """Classify x1-columns of a sampled field against ``tol_rel * max|field|``.

    ``field`` has shape (len(x1s), len(x2s)); ``grid`` is ``(x1s, x2s)``.
    A column is negligible if its max plus error is below the threshold,
    significant if its max minus error exceeds it, indeterminate otherwise.
    """
    x1s = np.asarray(grid[0], dtype=float)
    F = np.abs(np.asarray(field))
    E = np.zeros_like(F) if errors is None else np.asarray(errors, dtype=float)
    cmax = F.max(axis=1)
    cerr = np.array([E[i][np.argmax(F[i])] if F.shape[1] else 0.0 for i in range(len(x1s))])
    cerr = np.maximum(cerr, E.max(axis=1) if E.size else 0.0)
    thr = tol_rel * float(F.max()) if F.size else 0.0
    classes = []
    for m, e in zip(cmax, cerr):
        if m + e <= thr:
            classes.append("negligible")
        elif m - e > thr:
            classes.append("significant")
        else:
            classes.append("indeterminate")
    live = [x for x, c in zip(x1s, classes) if c != "negligible"]
    slab = (float(min(live)), float(max(live))) if live else None
    return SupportReport(x1s, cmax, cerr, tuple(classes), thr, slab)


# ---------------------------------------------------------------------------
# slab supported solution


def cutoff_geometry(a, epsilon):
    """Support, plateau and transition width of the cutoff in ``x1``.

    The cutoff vanishes off ``[-(a+eps), -eps/2]`` and equals one on a
    plateau containing ``[-(a+eps/2), -3eps/4]``; the transition width
    ``3 eps/16`` fits both gaps.
    """
    delta = 3 * epsilon / 16
    support = (-(a + epsilon), -epsilon / 2)
    plateau = (support[0] + delta, support[1] - delta)
    return support, plateau, delta


class _TraceCache:
    """Per-column ``D^(b, j) v(x1, 0)``, computed once for all b."""

    def __init__(self, contour, branch, kmax):
        self.contour, self.branch, self.kmax = contour, branch, kmax
        self.store = {}
        self.lock = threading.Lock()

    def get(self, x1, j):
        key = (float(x1), j)
        with self.lock:
            hit = self.store.get(key)
        if hit is None:
            hit = trace_derivatives(self.contour, self.branch, x1, self.kmax, j)
            with self.lock:
                self.store[key] = hit
        return hit


def _trace_data(cutoff, traces, j, max_order):
    """``h_j = g(x1) D_2^j v(x1, 0)`` as NumericData (Leibniz in x1)."""
    lo, hi = cutoff.edges
    w = cutoff.half_width
    binom = [[math.comb(k, a) for a in range(k + 1)] for k in range(max_order + 1)]

    def oracle(point, alpha):
        x = float(point[0])
        k = alpha[0]
        if x <= lo - w or x >= hi + w:
            return 0j, 0.0
        dv, ev = traces.get(x, j)
        # d^b = i^b D^b in x1
        ib = [1j ** b for b in range(k + 1)]
        if lo + w <= x <= hi - w:
            return ib[k] * dv[k], float(ev[k])
        g = cutoff.derivatives(x, k)
        val = sum(binom[k][a] * g[a] * ib[k - a] * dv[k - a] for a in range(k + 1))
        err = sum(binom[k][a] * abs(g[a]) * (ev[k - a] + 1e-13 * abs(dv[k - a])) for a in range(k + 1))
        return complex(val), float(err)

    return NumericData(oracle, 1, max_order, f"g * D2^{j} v")


@dataclass
class SlabSolutionRun:
    a: float
    epsilon: float
    rho: Fraction
    cutoff: object
    truncation: int
    grid: Tuple[np.ndarray, np.ndarray]
    field: np.ndarray
    errors: np.ndarray
    v_field: np.ndarray
    v_errors: np.ndarray
    support: SupportReport
    tail_bound: float
    degraded: bool
    gevrey_fit: Tuple[float, float, float]
    contour: ContourSpec
    solution: object = None

    def strip_mismatch(self):
        """``max|u - v| / max|v|`` over grid columns with ``-a < x1 < -eps``."""
        x1s = self.grid[0]
        cols = (x1s > -self.a) & (x1s < -self.epsilon)
        if not np.any(cols):
            return float("nan")
        diff = np.abs(self.field[cols] - self.v_field[cols]).max()
        return float(diff / np.abs(self.v_field[cols]).max())

    def to_json(self):
        return {"a": self.a, "epsilon": self.epsilon, "rho": str(self.rho), "n": self.truncation,
                "cutoff": {"support": list(self.cutoff.support), "plateau": list(self.cutoff.plateau),
                           "delta": self.cutoff.mollifier_width},
                "contour": self.contour.to_json(),
                "tail_bound": self.tail_bound, "degraded_confidence": self.degraded,
                "gevrey_fit": {"C": self.gevrey_fit[0], "R": self.gevrey_fit[1], "residual": self.gevrey_fit[2]},
                "strip_mismatch": self.strip_mismatch(),
                "support": self.support.to_json()}

    def write_csv(self, path):
        x1s, x2s = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "re", "im", "err"])
            for i, a in enumerate(x1s):
                for j, b in enumerate(x2s):
                    u = self.field[i, j]
                    w.writerow([repr(float(a)), repr(float(b)), repr(float(u.real)), repr(float(u.imag)),
                                repr(float(self.errors[i, j]))])


def slab_solution(dec, a, epsilon, rho, n, grid, contour=None, branch_index=0,
                  tol=1e-3, tail_tol=1e-6):
    """Null solution supported in ``-(a+eps) <= x1 <= 0``, sampled on ``grid``.

    ``grid = (x1s, x2s)``.  The run is flagged ``degraded`` when the
    convergence tail bound at ``n`` exceeds ``tail_tol``.
    """
    if not 0 < epsilon < a:
        raise ValueError("need 0 < epsilon < a")
    rho = Fraction(rho).limit_denominator(10 ** 6)
    hyp = check_hypotheses(dec)
    if not hyp.structural_pass:
        raise ValueError(f"operator fails the structural hypotheses: {hyp.to_json()}")
    gamma = hyp.gamma
    if not (1 < rho and rho * gamma < 1):
        raise ValueError(f"need 1 < rho < 1/gamma = {1 / gamma if gamma else 'inf'}")
    if dec.dim != 2:
        raise NotImplementedError("slab solutions are built for d = 2")
    contour = contour or ContourSpec()
    branch = puiseux_branch(dec, branch_index, contour)
    support, plateau, delta = cutoff_geometry(a, epsilon)
    cutoff, _ = make_gevrey_cutoff(rho, support, plateau, delta, max_order=n + 1)
    x1s = np.asarray(grid[0], dtype=float)
    x2s = np.asarray(grid[1], dtype=float)
    kmax = n + 1
    traces = _TraceCache(contour, branch, kmax // 2 + 2 if dec.m == 2 and _is_heat_like(dec) else kmax)
    data = [_trace_data(cutoff, traces, j, traces.kmax) for j in range(dec.m)]
    sol = cauchy_solve(dec, data, n)
    coeffs = sol.assembled.coeffs
    field = np.zeros((len(x1s), len(x2s)), dtype=complex)
    errs = np.zeros((len(x1s), len(x2s)))
    from .cauchy import _xd_powers
    pw = _xd_powers(x2s, n)
    for i, x in enumerate(x1s):
        cv = np.zeros(n + 1, dtype=complex)
        ce = np.zeros(n + 1)
        for l, c in enumerate(coeffs):
            if getattr(c, "is_zero", False):
                continue
            cv[l], ce[l] = c.evaluate_with_error((x,))
        field[i] = cv @ pw
        trunc = np.abs(cv[-dec.m:, None] * pw[-dec.m:]).sum(axis=0)
        errs[i] = ce @ np.abs(pw) + trunc
    vf = hormander_v_grid(contour, branch, x1s, x2s)
    rep = support_report(field, (x1s, x2s), tol, errs)
    # Gevrey constants of the data from the sampled derivative growth
    maxd = np.zeros(traces.kmax + 1)
    for x in x1s:
        for h in data:
            for k in range(traces.kmax + 1):
                maxd[k] = max(maxd[k], abs(h.derivative((x,), (k,))[0]))
    C, R, resid = fit_gevrey_constants(maxd, rho)
    B = float(np.max(np.abs(x2s))) if len(x2s) else 0.0
    tail = convergence_tail_bound(dec, C, R, operator_bound_q(dec), B, rho, n, rigorous=True)
    return SlabSolutionRun(a, epsilon, rho, cutoff, n, (x1s, x2s), field, errs, vf.values, vf.errors,
                           rep, tail, not tail <= tail_tol, (C, R, resid), contour, sol)


def _is_heat_like(dec):
    """Every ``Q_k`` with ``k < m`` of degree at most one in x1 and ``Q_1 = 0``."""
    return dec.m == 2 and dec.q_list[1].is_zero and dec.q_list[0].degree <= 1
