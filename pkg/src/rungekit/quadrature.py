"""Panelled Gauss-Kronrod rules on a real interval."""

from __future__ import annotations

import numpy as np

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])


def gk15_rule():
    """Nodes, Kronrod weights and Gauss weights (zero off the Gauss nodes)."""
    x = np.concatenate([-_XGK[:-1], _XGK[::-1]])
    wk = np.concatenate([_WGK[:-1], _WGK[::-1]])
    wg_half = np.zeros(8)
    wg_half[1::2] = _WG
    wg = np.concatenate([wg_half[:-1], wg_half[::-1]])
    return x, wk, wg


RULES = {("gauss-kronrod", 15): gk15_rule}


def panel_nodes(lo, hi, n_panels, rule=("gauss-kronrod", 15)):
    """Nodes and weights on ``n_panels`` equal panels of ``[lo, hi]``.

    Returns arrays of shape (n_panels, npts): nodes, Kronrod weights and
    embedded Gauss weights.
    """
    if tuple(rule) not in RULES:
        raise ValueError(f"unsupported quadrature rule {rule}")
    x, wk, wg = RULES[tuple(rule)]()
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = (edges[1:] + edges[:-1]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return nodes, half[:, None] * wk[None, :], half[:, None] * wg[None, :]
