"""Fields on the Riemann sphere stored on the two-chart atlas.

A sphere field is a :class:`~sobolev_action.fields.DiscreteField` whose
values have shape ``(2, n, n, N_t)``: slot 0 holds chart A samples
(coordinate ``z``), slot 1 chart B samples (coordinate ``w = 1/z``).
Off-node values are the blend ``rho(|z|) f_A(z) + rho(|w|) f_B(w)`` of the
two chart interpolants, so the result does not depend on which chart a
point is nominally assigned to.
"""
from __future__ import annotations

import numpy as np

from . import charts
from .errors import ConfigurationError, DomainError
from .fields import DiscreteField, GridSpec, make_grid

_CHUNK = 2048


def as_homogeneous(point) -> tuple[complex, complex]:
    """``[u : v]`` for a complex number, ``inf``/``None`` or a pair ``(u, v)``."""
    if point is None:
        return 1.0 + 0j, 0j
    if isinstance(point, tuple):
        u, v = complex(point[0]), complex(point[1])
        if u == 0 and v == 0:
            raise DomainError("[0 : 0] is not a point of the sphere")
        return u, v
    z = complex(point)
    if np.isinf(z.real) or np.isinf(z.imag):
        return 1.0 + 0j, 0j
    if np.isnan(z.real) or np.isnan(z.imag):
        raise DomainError("NaN is not a point of the sphere")
    return z, 1.0 + 0j


def to_complex(u, v):
    """Affine coordinate ``u/v``; ``inf`` where ``v = 0``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = u / v
    return np.where(v == 0, complex(np.inf, 0), z)


def sample_function(grid: GridSpec, fn) -> DiscreteField:
    """Sample ``fn(X, Y, Z)`` (embedded coordinates) at both charts' nodes.

    ``fn`` returns an array of shape ``X.shape + (N_t,)`` or ``X.shape``.
    """
    if grid.is_torus:
        raise ConfigurationError("sample_function needs a sphere grid")
    u, v = charts.node_points(grid.n)
    vals = np.asarray(fn(*charts.to_embedding(u, v)), dtype=float)
    if vals.ndim == 3:
        vals = vals[..., None]
    return DiscreteField(grid, vals)


def random_sphere_field(grid: GridSpec, seed: int, target_dim: int = 4, degree: int = 3,
                        scale: float = 1.0) -> DiscreteField:
    """Seeded polynomial map of the embedded coordinates, smooth on the whole sphere.

    Coefficients of the degree-``j`` monomials are normal with standard
    deviation ``scale / (1 + j)^2``.
    """
    rng = np.random.default_rng([seed, 31337])
    monos = [(i, j, d - i - j) for d in range(degree + 1)
             for i in range(d + 1) for j in range(d + 1 - i)]
    coef = np.array([rng.normal(size=target_dim) * scale / (1.0 + sum(m)) ** 2 for m in monos])

    def fn(x, y, z):
        basis = np.stack([x**a * y**b * z**c for a, b, c in monos], axis=-1)
        return basis @ coef

    return sample_function(grid, fn)


def _chart_eval(samples: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Interpolate one chart's ``(n, n, N_t)`` samples at points ``x + iy``."""
    n = samples.shape[0]
    out = np.empty(x.shape + samples.shape[2:])
    flat = samples.reshape(n, -1)
    for lo in range(0, x.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        bx = charts.bary_matrix(n, x[sl])
        by = charts.bary_matrix(n, y[sl])
        rows = (bx @ flat).reshape(-1, n, samples.shape[2])
        out[sl] = np.einsum("pjt,pj->pt", rows, by)
    return out


def _chart_partials(samples: np.ndarray, a1: int, a2: int) -> np.ndarray:
    d = charts.cheb_diff_matrix(samples.shape[0])
    for _ in range(a1):
        samples = np.einsum("ij,jkt->ikt", d, samples)
    for _ in range(a2):
        samples = np.einsum("kl,jlt->jkt", d, samples)
    return samples


def evaluate_points(f: DiscreteField, u, v) -> np.ndarray:
    """Blended values at homogeneous points; shape ``u.shape + (N_t,)``."""
    if f.grid.is_torus:
        raise ConfigurationError("evaluate_points needs a sphere field")
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    shape = np.broadcast(u, v).shape
    u = np.broadcast_to(u, shape).ravel()
    v = np.broadcast_to(v, shape).ravel()
    au, av = np.abs(u), np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(av > 0, au / np.where(av > 0, av, 1.0), np.inf)
    wa = np.where(np.isfinite(r), charts.blend_weight(np.where(np.isfinite(r), r, 1.0)), 0.0)
    wb = 1.0 - wa
    out = np.zeros((u.size, f.target_dim))
    sel = wa > 0
    if sel.any():
        z = u[sel] / v[sel]
        out[sel] += wa[sel, None] * _chart_eval(f.values[0], z.real, z.imag)
    sel = wb > 0
    if sel.any():
        w = v[sel] / u[sel]
        out[sel] += wb[sel, None] * _chart_eval(f.values[1], w.real, w.imag)
    return out.reshape(shape + (f.target_dim,))


def evaluate_sphere(f: DiscreteField, point) -> np.ndarray:
    u, v = as_homogeneous(point)
    return evaluate_points(f, np.array([u]), np.array([v]))[0]


def chart_jet(f: DiscreteField, chart: int, coord: complex):
    """Value and first partials of one chart's interpolant at a chart coordinate.

    Returns ``(value, d_re, d_im)``, each of shape ``(N_t,)``.
    """
    samples = f.values[chart]
    x = np.array([coord.real])
    y = np.array([coord.imag])
    return tuple(_chart_eval(_chart_partials(samples, a1, a2), x, y)[0]
                 for a1, a2 in ((0, 0), (1, 0), (0, 1)))


def pullback(f: DiscreteField, u_img, v_img) -> DiscreteField:
    """Field whose node values are ``f`` at the given images of the nodes."""
    return f.with_values(evaluate_points(f, u_img, v_img))


def resample(f: DiscreteField, n: int) -> DiscreteField:
    """Chart-wise polynomial resampling onto the grid of resolution ``n``."""
    grid = make_grid("sphere", n)
    b = charts.bary_matrix(f.grid.n, charts.cheb_nodes(n))
    vals = np.einsum("ij,cjkt,lk->cilt", b, f.values, b)
    return DiscreteField(grid, vals)


def chart_consistency(f: DiscreteField) -> float:
    """Largest relative mismatch of the two charts on the blend annulus."""
    n = f.grid.n
    z = charts.chart_coordinates(n)
    blend = charts.chart_blend(n)
    mask = (blend > 0) & (blend < 1)
    za = z[mask]
    fa = f.values[0][mask]
    w = 1.0 / za
    fb = _chart_eval(f.values[1], w.real, w.imag)
    scale = max(np.max(np.abs(f.values)), np.finfo(float).tiny)
    return float(np.max(np.abs(fa - fb)) / scale)


def cheb_coefficients(samples: np.ndarray) -> np.ndarray:
    """2D Chebyshev coefficients of one chart's ``(n, n, N_t)`` samples."""
    n = samples.shape[0]
    t = charts.cheb_nodes(n) / charts.HALF_WIDTH
    vander = np.polynomial.chebyshev.chebvander(t, n - 1)
    c = np.linalg.solve(vander, samples.reshape(n, -1)).reshape(samples.shape)
    return np.linalg.solve(vander, c.transpose(1, 0, 2).reshape(n, -1)).reshape(
        samples.shape).transpose(1, 0, 2)


def spectral_tail(f: DiscreteField, band: float = 0.75) -> float:
    """Largest Chebyshev coefficient of degree ``>= band * n`` relative to the largest overall."""
    n = f.grid.n
    cut = int(band * n)
    worst, top = 0.0, 0.0
    for chart in range(2):
        c = np.abs(cheb_coefficients(f.values[chart]))
        top = max(top, c.max())
        tail = np.zeros_like(c, dtype=bool)
        tail[cut:] = True
        tail[:, cut:] = True
        worst = max(worst, c[tail].max())
    return worst / top if top else 0.0
