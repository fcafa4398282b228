"""Rasterized open sets and the slice geometry of characteristic hyperplanes.

Cells are node-centered: along each axis the centers are ``lo + k h`` for
``k = 0..n-1`` with ``lo + (n-1) h = hi``.  The open set is the union of the
cells whose centers lie in it.  Characteristic hyperplanes are the slices
``x1 = c``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage


class DomainSpecError(ValueError):
    pass


class ContainmentError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constructive geometry


def _as_vec(v, dim, name):
    arr = np.asarray(v, dtype=float)
    if arr.shape != (dim,):
        raise DomainSpecError(f"{name} must have {dim} entries")
    return arr


def _membership(node, pts, dim):
    """``(open, closed)`` membership of points in the set described by ``node``."""
    if not isinstance(node, dict) or len(node) != 1:
        raise DomainSpecError(f"shape node must be a one-key object, got {node!r}")
    (op, arg), = node.items()
    n = len(pts)
    if op in ("plane", "space", "all"):
        return np.ones(n, bool), np.ones(n, bool)
    if op == "empty":
        return np.zeros(n, bool), np.zeros(n, bool)
    if op == "rect":
        lo = np.array([-np.inf if v is None else v for v in arg.get("lo", [None] * dim)], dtype=float)
        hi = np.array([np.inf if v is None else v for v in arg.get("hi", [None] * dim)], dtype=float)
        if lo.shape != (dim,) or hi.shape != (dim,):
            raise DomainSpecError("rect bounds must match the dimension")
        return (np.all((pts > lo) & (pts < hi), axis=1), np.all((pts >= lo) & (pts <= hi), axis=1))
    if op == "ball":
        c = _as_vec(arg.get("center", [0] * dim), dim, "ball center")
        r = float(arg["radius"])
        if r < 0:
            raise DomainSpecError("ball radius must be nonnegative")
        dist = np.linalg.norm(pts - c, axis=1)
        return dist < r, dist <= r
    if op == "halfspace":
        nrm = _as_vec(arg["normal"], dim, "halfspace normal")
        off = float(arg.get("offset", 0.0))
        v = pts @ nrm
        return v > off, v >= off
    if op in ("union", "intersection"):
        if not isinstance(arg, list):
            raise DomainSpecError(f"{op} takes a list")
        parts = [_membership(a, pts, dim) for a in arg]
        if not parts:
            empty = op == "union"
            return np.full(n, not empty), np.full(n, not empty)
        red = np.logical_or if op == "union" else np.logical_and
        o = parts[0][0].copy()
        c = parts[0][1].copy()
        for po, pc in parts[1:]:
            o, c = red(o, po), red(c, pc)
        return o, c
    if op == "complement":
        o, c = _membership(arg, pts, dim)
        return ~c, ~o
    if op == "difference":
        if not isinstance(arg, list) or len(arg) != 2:
            raise DomainSpecError("difference takes [A, B]")
        ao, ac = _membership(arg[0], pts, dim)
        bo, bc = _membership(arg[1], pts, dim)
        # A minus the closure of B keeps the result open
        return ao & ~bc, ac & ~bo
    raise DomainSpecError(f"unknown shape operation {op!r}")


@dataclass
class GridDomain:
    dim: int
    lo: np.ndarray
    hi: np.ndarray
    spacing: float
    occupancy: np.ndarray
    provenance: Optional[dict] = None

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        shape = _grid_shape(self.lo, self.hi, self.spacing)
        if self.occupancy.shape != shape:
            raise DomainSpecError(f"occupancy shape {self.occupancy.shape} does not match window {shape}")
        self.occupancy = np.asarray(self.occupancy, dtype=bool)

    @property
    def shape(self):
        return self.occupancy.shape

    def axis(self, j):
        return self.lo[j] + self.spacing * np.arange(self.shape[j])

    def centers(self):
        mesh = np.meshgrid(*[self.axis(j) for j in range(self.dim)], indexing="ij")
        return np.stack(mesh, axis=-1)

    def index_of(self, point):
        idx = np.rint((np.asarray(point, dtype=float) - self.lo) / self.spacing).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.shape)):
            raise ValueError(f"point {point} outside the window")
        return tuple(int(i) for i in idx)

    def slice_index(self, c):
        i = int(round((c - self.lo[0]) / self.spacing))
        if not 0 <= i < self.shape[0]:
            raise ValueError(f"slice x1 = {c} outside the window")
        return i

    def same_grid(self, other):
        return (self.dim == other.dim and self.shape == other.shape and np.allclose(self.lo, other.lo)
                and math.isclose(self.spacing, other.spacing))

    def window_json(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "spacing": self.spacing}


def _grid_shape(lo, hi, h):
    if h <= 0:
        raise DomainSpecError("spacing must be positive")
    if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi <= lo):
        raise DomainSpecError("window needs lo < hi in every coordinate")
    n = (hi - lo) / h
    k = np.rint(n)
    if np.any(np.abs(n - k) > 1e-9 * np.maximum(1, k)):
        raise DomainSpecError("window extents must be multiples of the spacing")
    return tuple(int(v) + 1 for v in k)


def rasterize(spec, window=None, spacing=None):
    """Occupancy grid of a constructive-geometry spec or a 2-D mask file.

    ``spec`` is a dict (or JSON text) with key ``shape`` (or a bare shape
    node), optionally ``window: {lo, hi}`` and ``spacing``; or
    ``{"mask": path, "threshold": t}`` for a PGM/PNG image covering the
    window, row 0 at the top (largest x2).
    """
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise DomainSpecError(f"malformed domain JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise DomainSpecError("domain spec must be a JSON object")
    win = window or spec.get("window")
    h = spacing if spacing is not None else spec.get("spacing")
    if win is None or h is None:
        raise DomainSpecError("window and spacing are required")
    lo = np.asarray(win["lo"] if isinstance(win, dict) else win[0], dtype=float)
    hi = np.asarray(win["hi"] if isinstance(win, dict) else win[1], dtype=float)
    shape = _grid_shape(lo, hi, float(h))
    dim = len(shape)
    if dim not in (1, 2, 3):
        raise DomainSpecError("only dimensions 1 to 3 are supported")
    if "mask" in spec:
        occ = _read_mask(spec["mask"], float(spec.get("threshold", 128)), shape)
        prov = None
    else:
        shape_node = spec.get("shape", {k: v for k, v in spec.items() if k not in ("window", "spacing")})
        if not shape_node:
            shape_node = {"empty": {}}
        mesh = np.meshgrid(*[lo[j] + float(h) * np.arange(shape[j]) for j in range(dim)], indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        occ = _membership(shape_node, pts, dim)[0].reshape(shape)
        prov = {"shape": shape_node}
    return GridDomain(dim, lo, hi, float(h), occ, prov)


def _read_mask(path, threshold, shape):
    if len(shape) != 2:
        raise DomainSpecError("mask files describe 2-D domains")
    img = _read_pgm(path) if str(path).lower().endswith((".pgm", ".pnm")) else _read_png(path)
    if img.shape != (shape[1], shape[0]):
        raise DomainSpecError(f"mask is {img.shape[1]}x{img.shape[0]}, window needs {shape[0]}x{shape[1]}")
    return (img[::-1, :] >= threshold).T


def _read_png(path):
    from PIL import Image
    return np.asarray(Image.open(path).convert("L"), dtype=float)


def _read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode())
    magic, w, hgt, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == "P5":
        raw = np.frombuffer(data[pos + 1:pos + 1 + w * hgt], dtype=np.uint8)
    elif magic == "P2":
        raw = np.array(data[pos:].split()[: w * hgt], dtype=float)
    else:
        raise DomainSpecError(f"unsupported PGM type {magic}")
    return raw.reshape(hgt, w).astype(float) * (255.0 / maxval)


def write_pgm(path, image):
    """Binary PGM of a 2-D array indexed ``[i1, i2]`` (x2 grows upward)."""
    img = np.asarray(image, dtype=np.uint8).T[::-1, :]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def doubled(X):
    """Re-rasterize ``X`` on a window of twice the extent (same center and spacing)."""
    if X.provenance is None:
        return None
    mid = (X.lo + X.hi) / 2
    half = (X.hi - X.lo)
    h = X.spacing
    steps = np.rint(half / h)
    lo = mid - steps * h
    hi = mid + steps * h
    # keep the original cell centers on the new lattice
    shift = np.rint((X.lo - lo) / h) * h - (X.lo - lo)
    lo, hi = lo - shift, hi - shift
    return rasterize({"shape": X.provenance["shape"], "window": {"lo": lo.tolist(), "hi": hi.tolist()},
                      "spacing": h})


# ---------------------------------------------------------------------------
# distance fields


def distance_field(X, exterior_counts=False):
    """Euclidean distance from each cell center to the nearest non-X cell center.

    With ``exterior_counts`` the cells just outside the window count as
    complement.  Without any complement cell all distances are ``inf``.
    """
    occ = X.occupancy
    if exterior_counts:
        padded = np.pad(occ, 1, constant_values=False)
        d = ndimage.distance_transform_edt(padded, sampling=X.spacing)
        return d[tuple(slice(1, -1) for _ in range(X.dim))]
    if occ.all():
        return np.full(occ.shape, np.inf)
    return ndimage.distance_transform_edt(occ, sampling=X.spacing)


# ---------------------------------------------------------------------------
# slice components and the Runge-pair test


@dataclass
class SliceComponent:
    cells: np.ndarray          # indices within the slice, shape (k, dim-1)
    bounded: bool
    contained_in_X2: bool


@dataclass
class SliceComponentReport:
    c: float
    index: int
    components: List[SliceComponent]


def _touches_edge(mask):
    for ax in range(mask.ndim):
        if np.take(mask, 0, axis=ax).any() or np.take(mask, -1, axis=ax).any():
            return True
    return False


def _components(comp_mask, x2_slice):
    if comp_mask.ndim == 0:
        comp_mask = comp_mask[None]
    labels, n = ndimage.label(comp_mask)
    out = []
    for lab in range(1, n + 1):
        m = labels == lab
        out.append(SliceComponent(np.argwhere(m), not _touches_edge(m), bool(x2_slice[m].all())))
    return out


def _check_pair(X1, X2):
    if not X1.same_grid(X2):
        raise ContainmentError("X1 and X2 must share window and spacing")
    if np.any(X1.occupancy & ~X2.occupancy):
        bad = np.argwhere(X1.occupancy & ~X2.occupancy)[0]
        raise ContainmentError(f"X1 is not contained in X2 (cell {tuple(int(b) for b in bad)})")


def slice_components(X1, X2, axis=1, c=0.0):
    """Face-connected components of the X1-complement on the slice ``x1 = c``."""
    if axis != 1:
        raise ValueError("characteristic slices are taken along x1")
    _check_pair(X1, X2)
    i = X1.slice_index(c)
    comp = ~X1.occupancy[i]
    return SliceComponentReport(float(X1.axis(0)[i]), i, _components(comp, X2.occupancy[i]))


@dataclass
class Verdict:
    kind: str
    outcome: str
    witness: Optional[dict] = None
    notes: Tuple[str, ...] = ()

    def to_json(self):
        return {"kind": self.kind, "outcome": self.outcome, "witness": self.witness, "notes": list(self.notes)}

    @property
    def passed(self):
        return self.outcome == "pass"


def _component_witness(X, report, comp):
    other = [X.axis(j + 1)[comp.cells[:, j]] for j in range(X.dim - 1)]
    return {"slice": report.c, "slice_index": report.index,
            "cells": [[float(v) for v in p] for p in zip(*other)]}


def _slice_reports(X1, X2, workers):
    idx = range(X1.shape[0])

    def one(i):
        return SliceComponentReport(float(X1.axis(0)[i]), i, _components(~X1.occupancy[i], X2.occupancy[i]))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(one, idx))
    return [one(i) for i in idx]


def runge_pair_check(X1, X2, workers=None, window_check=True):
    """Fail iff some slice has a bounded X1-complement component inside X2."""
    _check_pair(X1, X2)
    reports = _slice_reports(X1, X2, workers)
    edge_candidates = []
    for rep in reports:
        for comp in rep.components:
            if comp.contained_in_X2 and comp.bounded:
                return Verdict("runge_pair", "fail", _component_witness(X1, rep, comp))
            if comp.contained_in_X2:
                edge_candidates.append(rep.c)
    notes = []
    if edge_candidates and window_check:
        D1, D2 = doubled(X1), doubled(X2)
        if D1 is None or D2 is None:
            notes.append("window-touching components treated as unbounded (no provenance to re-check)")
        else:
            big = runge_pair_check(D1, D2, workers, window_check=False)
            if big.outcome == "fail":
                return Verdict("runge_pair", "indeterminate", big.witness,
                               ("a window-touching component becomes bounded on the doubled window",))
            notes.append("window-touching components stay unbounded on the doubled window")
    return Verdict("runge_pair", "pass", None, tuple(notes))


def tube_check(I1, X1n, I2, X2n):
    """Runge test for ``I1 x X1n`` inside ``I2 x X2n``; depends on the spatial factor only."""
    a1, b1 = I1
    a2, b2 = I2
    if not (a2 <= a1 < b1 <= b2):
        raise ContainmentError("need I1 inside I2")
    _check_pair(X1n, X2n)
    comps = _components(~X1n.occupancy, X2n.occupancy)
    for comp in comps:
        if comp.bounded and comp.contained_in_X2:
            cells = [[float(X1n.axis(j)[i]) for j, i in enumerate(p)] for p in comp.cells]
            return Verdict("tube", "fail", {"cells": cells})
    return Verdict("tube", "pass")


# ---------------------------------------------------------------------------
# minimum principle


@dataclass(frozen=True)
class QCViolation:
    i: int
    j: int
    k: int


def quasiconcave_1d(values, mask=None, tol=0.0):
    """``None`` if ``v_j >= min(v_i, v_k) - tol`` for all valid ``i < j < k``.

    Otherwise the triple with the deepest dip: ``j`` maximizes
    ``min(max_{i<j} v_i, max_{k>j} v_k) - v_j``, ``i`` and ``k`` are the first
    positions of those maxima.
    """
    v = np.asarray(values, dtype=float)
    idx = np.arange(len(v)) if mask is None else np.flatnonzero(np.asarray(mask, bool))
    w = v[idx]
    n = len(w)
    if n < 3:
        return None
    pre = np.maximum.accumulate(w)
    suf = np.maximum.accumulate(w[::-1])[::-1]
    left = np.concatenate([[-np.inf], pre[:-1]])
    right = np.concatenate([suf[1:], [-np.inf]])
    with np.errstate(invalid="ignore"):
        dip = np.minimum(left, right) - w
    dip = np.where(np.isnan(dip), -np.inf, dip)
    j = int(np.argmax(dip))
    if not dip[j] > tol:
        return None
    i = int(np.argmax(w[:j]))
    k = j + 1 + int(np.argmax(w[j + 1:]))
    return QCViolation(int(idx[i]), int(idx[j]), int(idx[k]))


def _runs(mask):
    """Maximal runs of True as (start, stop) pairs."""
    m = np.concatenate([[False], mask, [False]]).astype(int)
    d = np.diff(m)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def _basin_2d(dvals, region, tol):
    """Union-find sweep over a 2-D slice region in increasing distance.

    Returns the cells of a sublevel component that merges into the rest only
    at a level above its own minimum plus ``tol`` without ever touching the
    region's edge, or ``None``.
    """
    shape = region.shape
    cells = np.argwhere(region)
    order = np.lexsort((cells[:, 1], cells[:, 0], dvals[region]))
    parent = {}
    info = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def edge(p):
        i, j = p
        if i in (0, shape[0] - 1) or j in (0, shape[1] - 1):
            return True
        return not (region[i - 1, j] and region[i + 1, j] and region[i, j - 1] and region[i, j + 1])

    members = {}
    for o in order:
        p = (int(cells[o, 0]), int(cells[o, 1]))
        lev = float(dvals[p])
        roots = set()
        for q in ((p[0] - 1, p[1]), (p[0] + 1, p[1]), (p[0], p[1] - 1), (p[0], p[1] + 1)):
            if q in parent:
                roots.add(find(q))
        # a trapped component touched at a clearly higher level is a basin
        for r in sorted(roots):
            mn, esc = info[r]
            if not esc and lev > mn + tol:
                return members[r]
        parent[p] = p
        info[p] = [lev, edge(p)]
        members[p] = [p]
        for r in roots:
            a, b = find(p), r
            if len(members[a]) < len(members[b]):
                a, b = b, a
            parent[b] = a
            members[a].extend(members.pop(b))
            info[a] = [min(info[a][0], info[b][0]), info[a][1] or info[b][1]]
        info.pop(None, None)
    return None


def p_convexity_check(X, tol=None, exterior_counts=False, workers=None):
    """Minimum principle for ``d_X`` on every slice ``x1 = c``.

    d = 2: every maximal run of X-cells must give a quasiconcave sequence.
    d = 3: no sublevel component of ``d_X`` on a slice region may be trapped
    away from the region's edge.
    """
    tol = X.spacing / 2 if tol is None else tol
    dX = distance_field(X, exterior_counts)
    occ = X.occupancy

    def one(i):
        if X.dim == 2:
            for a, b in _runs(occ[i]):
                viol = quasiconcave_1d(dX[i, a:b], tol=tol)
                if viol is not None:
                    ys = X.axis(1)
                    tri = [float(ys[a + t]) for t in (viol.i, viol.j, viol.k)]
                    return {"slice": float(X.axis(0)[i]), "slice_index": i, "triple": tri,
                            "values": [float(dX[i, a + t]) for t in (viol.i, viol.j, viol.k)]}
            return None
        labels, n = ndimage.label(occ[i])
        for lab in range(1, n + 1):
            region = labels == lab
            basin = _basin_2d(dX[i], region, tol)
            if basin is not None:
                pts = [[float(X.axis(1)[p[0]]), float(X.axis(2)[p[1]])] for p in basin]
                return {"slice": float(X.axis(0)[i]), "slice_index": i, "region": pts}
        return None

    idx = range(X.shape[0])
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(one, idx))
    else:
        results = [one(i) for i in idx]
    for w in results:
        if w is not None:
            return Verdict("p_convex", "fail", w)
    return Verdict("p_convex", "pass")


# ---------------------------------------------------------------------------
# escape paths


class GateError(ValueError):
    pass


@dataclass
class EscapeResult:
    escaped: bool
    path: List[Tuple[int, ...]]


def escape_path_check(X, K, x):
    """Breadth-first search in the slice of ``x`` through X-cells avoiding ``K``.

    ``K`` is a boolean array or a list of cell indices; ``x`` a cell index.
    Escape means reaching a cell within ``2h`` of the complement or the
    slice's window edge.
    """
    occ = X.occupancy
    Kmask = np.zeros(occ.shape, bool)
    if isinstance(K, np.ndarray) and K.dtype == bool:
        Kmask = K.copy()
    else:
        for c in K:
            Kmask[tuple(c)] = True
    x = tuple(int(v) for v in x)
    if not occ[x] or Kmask[x]:
        raise GateError("x must be an X-cell outside K")
    if np.any(Kmask & ~occ):
        raise GateError("K must lie in X")
    dX = distance_field(X)
    if Kmask.any():
        gate = float(dX[Kmask].min())
        if not dX[x] < gate:
            raise GateError(f"need d_X(x) = {dX[x]:.4g} < dist(K, complement) = {gate:.4g}")
    i0 = x[0]
    sl_occ = occ[i0] & ~Kmask[i0]
    sl_d = dX[i0]
    start = x[1:]
    shape = sl_occ.shape
    parent = {start: None}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        at_edge = any(c in (0, n - 1) for c, n in zip(p, shape))
        if at_edge or sl_d[p] < 2 * X.spacing:
            path = []
            while p is not None:
                path.append((i0,) + p)
                p = parent[p]
            return EscapeResult(True, path[::-1])
        for ax in range(len(shape)):
            for step in (-1, 1):
                q = list(p)
                q[ax] += step
                q = tuple(q)
                if 0 <= q[ax] < shape[ax] and q not in parent and sl_occ[q]:
                    parent[q] = p
                    queue.append(q)
    return EscapeResult(False, [])


def overlay(X, witness=None, X2=None):
    """Gray image: X2-only cells 96, X cells 255, witness cells 160, rest 0 (2-D)."""
    img = np.zeros(X.shape, dtype=np.uint8)
    if X2 is not None:
        img[X2.occupancy] = 96
    img[X.occupancy] = 255
    if witness and X.dim == 2 and "slice_index" in witness:
        i = witness["slice_index"]
        ys = X.axis(1)
        for key in ("cells", "triple"):
            for v in witness.get(key, []):
                y = v[0] if isinstance(v, list) else v
                img[i, int(np.argmin(np.abs(ys - y)))] = 160
    return img
