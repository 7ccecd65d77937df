"""Two-chart atlas of the Riemann sphere on Chebyshev tensor grids.

Chart A uses the coordinate ``z``; chart B uses ``w = 1/z``.  Each chart
stores samples on a Chebyshev-Lobatto tensor grid over the square
``[-HALF_WIDTH, HALF_WIDTH]^2``, which contains the disk ``|z| <= 2``.
A fixed radial partition of unity, symmetric under ``z -> 1/z``, blends
the two charts on the annulus ``1/BLEND_RADIUS < |z| < BLEND_RADIUS``.

Points of the sphere are carried in homogeneous coordinates ``[u : v]``
so that infinity needs no special casing.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

HALF_WIDTH = 2.0
BLEND_RADIUS = 1.8


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        s = 1.0 - t
        b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


def smooth_step_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tt = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / tt)
    b = np.exp(-1.0 / (1.0 - tt))
    da = a / tt**2
    db = -b / (1.0 - tt) ** 2
    d = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return np.where(inside, d, 0.0)


@lru_cache(maxsize=None)
def cheb_nodes(n: int) -> np.ndarray:
    """Chebyshev-Lobatto nodes on [-HALF_WIDTH, HALF_WIDTH], descending."""
    x = HALF_WIDTH * np.cos(np.pi * np.arange(n) / (n - 1))
    x.setflags(write=False)
    return x


@lru_cache(maxsize=None)
def cheb_diff_matrix(n: int) -> np.ndarray:
    """Differentiation matrix on :func:`cheb_nodes` (Trefethen's ``cheb``)."""
    m = n - 1
    t = np.cos(np.pi * np.arange(n) / m)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = t[:, None] - t[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    d -= np.diag(d.sum(axis=1))
    d /= HALF_WIDTH
    d.setflags(write=False)
    return d


@lru_cache(maxsize=None)
def clenshaw_curtis_weights(n: int) -> np.ndarray:
    """Quadrature weights on :func:`cheb_nodes` (Clenshaw-Curtis)."""
    m = n - 1
    theta = np.pi * np.arange(n) / m
    w = np.zeros(n)
    v = np.ones(m - 1)
    inner = slice(1, m)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m**2 - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(m * theta[inner]) / (m**2 - 1)
    else:
        w[0] = w[m] = 1.0 / m**2
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / m
    w *= HALF_WIDTH
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def _bary_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def bary_matrix(n: int, x: np.ndarray) -> np.ndarray:
    """Rows of barycentric interpolation weights for points ``x``.

    ``bary_matrix(n, x) @ samples`` evaluates the degree ``n-1`` polynomial
    interpolant; exact node hits reproduce the sample.
    """
    nodes = cheb_nodes(n)
    x = np.asarray(x, dtype=float).ravel()
    diff = x[:, None] - nodes[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    r = _bary_weights(n)[None, :] / diff
    r /= r.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if rows.any():
        r[rows] = hit[rows].astype(float)
    return r


def blend_weight(r):
    """Chart-A share of the partition of unity at modulus ``r = |z|``.

    Equals 1 for ``r <= 1/BLEND_RADIUS`` and 0 for ``r >= BLEND_RADIUS``;
    ``blend_weight(r) + blend_weight(1/r) == 1``.
    """
    r = np.asarray(r, dtype=float)
    lo = -np.log(BLEND_RADIUS)
    with np.errstate(divide="ignore"):
        lr = np.log(r)
    t = (lr - lo) / (2.0 * np.log(BLEND_RADIUS))
    return 1.0 - smooth_step(t)


@lru_cache(maxsize=None)
def chart_coordinates(n: int) -> np.ndarray:
    """Complex chart coordinate at every node, shape ``(n, n)``; axis 0 is Re."""
    x = cheb_nodes(n)
    c = x[:, None] + 1j * x[None, :]
    c.setflags(write=False)
    return c


@lru_cache(maxsize=None)
def chart_blend(n: int) -> np.ndarray:
    """Blend weight of each chart at its own nodes (same for A and B)."""
    b = blend_weight(np.abs(chart_coordinates(n)))
    b.setflags(write=False)
    return b


def node_points(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Homogeneous coordinates ``(u, v)`` of all nodes, shape ``(2, n, n)``.

    Chart A nodes are ``[z : 1]``; chart B nodes are ``[1 : w]``.
    """
    c = chart_coordinates(n)
    one = np.ones_like(c)
    return np.stack([c, one]), np.stack([one, c])


def to_embedding(u, v):
    """Unit-sphere point (X, Y, Z) of ``[u : v]``; ``z = 0`` maps to Z = -1."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    nu = np.abs(u) ** 2
    nv = np.abs(v) ** 2
    s = nu + nv
    xy = 2.0 * u * np.conj(v) / s
    return xy.real, xy.imag, (nu - nv) / s


def normalize_homogeneous(u, v):
    s = np.sqrt(np.abs(u) ** 2 + np.abs(v) ** 2)
    return u / s, v / s
