"""Moebius reparametrizations, the marked-point slice and equivariant extension.

The slice through a center map ``f`` is the set of maps ``k`` with
``L_i(k(x_i)) = 0`` at the marked points ``x = (0, 1, inf)``, where each
``L_i`` is an affine map to ``R^2``.  A map near the slice is moved onto it by
the unique near-identity Moebius element ``gamma`` with ``k o gamma`` in the
slice: Newton's method finds ``y_i`` near ``x_i`` with ``L_i(k(y_i)) = 0`` and
``gamma`` is the Moebius map sending ``(0, 1, inf)`` to ``(y_1, y_2, y_3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import charts
from .diffeo import ShearBumpFamily
from .errors import (
    ConfigurationError,
    DegenerateTripleError,
    DomainError,
    InvariantViolation,
    NeighborhoodError,
    ProjectionError,
    WitnessError,
)
from .fields import DiscreteField, SobolevIndex, sobolev_norm, torus_interpolate
from .sphere import (
    as_homogeneous,
    chart_jet,
    evaluate_points,
    evaluate_sphere,
    pullback,
    resample,
    spectral_tail,
)

NEAR_IDENTITY = 0.1
NEWTON_TOL = 1e-10
NEWTON_MAXITER = 50
TRANSVERSALITY_COND = 1e3

# marked points 0, 1, inf as (chart, chart coordinate)
MARKED = ((0, 0j), (0, 1 + 0j), (1, 0j))


class MobiusElement:
    """``z -> (a z + b) / (c z + d)`` normalized to ``ad - bc = 1``.

    The sign of the representative is fixed by ``Re(a + d) > 0`` (ties broken
    by ``Im(a + d)``, then by ``a``), so equal elements of PSL(2, C) have
    equal coefficients.
    """

    __slots__ = ("_m",)

    def __init__(self, a, b, c, d):
        m = np.array([[a, b], [c, d]], dtype=complex)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det == 0 or not np.all(np.isfinite(m)):
            raise DegenerateTripleError("singular coefficient matrix")
        m /= np.sqrt(det)
        tr = m[0, 0] + m[1, 1]
        key = (tr.real, tr.imag, m[0, 0].real, m[0, 0].imag, m[0, 1].real, m[0, 1].imag)
        lead = next((x for x in key if abs(x) > 1e-14), 1.0)
        if lead < 0:
            m = -m
        m.setflags(write=False)
        self._m = m
        if abs(self.det - 1.0) > 1e-12:
            raise InvariantViolation(f"|ad - bc - 1| = {abs(self.det - 1):.2e} after normalization")

    @classmethod
    def identity(cls) -> "MobiusElement":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_matrix(cls, m) -> "MobiusElement":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def coefficients(self) -> tuple[complex, complex, complex, complex]:
        return tuple(complex(x) for x in self._m.ravel())

    @property
    def det(self) -> complex:
        m = self._m
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def inverse(self) -> "MobiusElement":
        a, b, c, d = self.coefficients
        return MobiusElement(d, -b, -c, a)

    def __matmul__(self, other: "MobiusElement") -> "MobiusElement":
        """Composition ``(self o other)(z) = self(other(z))``."""
        return MobiusElement.from_matrix(self._m @ other._m)

    def apply_homogeneous(self, u, v):
        a, b, c, d = self._m.ravel()
        return a * u + b * v, c * u + d * v

    def __call__(self, z):
        """Image of a point given as complex, ``inf`` or ``(u, v)``; complex or ``inf`` out."""
        u, v = self.apply_homogeneous(*as_homogeneous(z))
        return complex(np.inf, 0) if v == 0 else u / v

    def distance(self, other: "MobiusElement" = None) -> float:
        """Max coefficient distance (to the identity by default)."""
        ref = np.eye(2) if other is None else other._m
        return float(np.max(np.abs(self._m - ref)))

    def is_near_identity(self, eps: float = NEAR_IDENTITY) -> bool:
        return self.distance() < eps

    def __repr__(self):
        a, b, c, d = (f"{x:.4g}" for x in self.coefficients)
        return f"MobiusElement(a={a}, b={b}, c={c}, d={d})"


def random_near_identity(rng: np.random.Generator, radius: float) -> MobiusElement:
    """Element at coefficient distance at most ``radius`` from the identity."""
    while True:
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        g = MobiusElement.from_matrix(np.eye(2) + x * (0.5 * radius * rng.uniform() / np.abs(x).max()))
        if g.distance() <= radius:
            return g


def mobius_from_triple(y1, y2, y3, eps: float | None = None) -> MobiusElement:
    """The element sending ``0, 1, inf`` to ``y1, y2, y3``.

    With ``y_i = [u_i : v_i]`` the matrix has columns ``lam * y3`` and
    ``mu * y1``, and ``lam y3 + mu y1 = y2`` fixes the scales; at
    ``(0, 1, inf)`` this is exactly the identity matrix.  ``eps`` enables the
    near-identity check.
    """
    (u1, v1), (u2, v2), (u3, v3) = (as_homogeneous(y) for y in (y1, y2, y3))
    norms = [math.hypot(abs(u), abs(v)) for u, v in ((u1, v1), (u2, v2), (u3, v3))]
    det = u3 * v1 - u1 * v3
    lam = u2 * v1 - u1 * v2
    mu = u3 * v2 - u2 * v3
    tol = 1e-12
    if (abs(det) <= tol * norms[0] * norms[2] or abs(lam) <= tol * norms[0] * norms[1]
            or abs(mu) <= tol * norms[1] * norms[2]):
        raise DegenerateTripleError("the three points must be pairwise distinct")
    lam, mu = lam / det, mu / det
    g = MobiusElement(lam * u3, mu * u1, lam * v3, mu * v1)
    if eps is not None and not g.is_near_identity(eps):
        raise NeighborhoodError(f"result lies {g.distance():.3g} from the identity (limit {eps})")
    return g


def compose_with_mobius(field: DiscreteField, g: MobiusElement) -> DiscreteField:
    """``field o g`` resampled on the nodes of both charts.

    Kept to near-identity elements so that chart images stay inside the
    interpolation squares; the identity returns the field itself.
    """
    if field.grid.is_torus:
        raise ConfigurationError("Moebius composition acts on sphere fields")
    if g.distance() == 0.0:
        return field
    u, v = charts.node_points(field.grid.n)
    return pullback(field, *g.apply_homogeneous(u, v))


def mobius_act(g: MobiusElement, arg):
    """Act on a point (image), a sphere field (``arg o g``) or an element (``g o arg``)."""
    if isinstance(arg, MobiusElement):
        return g @ arg
    if isinstance(arg, DiscreteField):
        return compose_with_mobius(arg, g)
    return g(arg)


# -- slice ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SliceSpec:
    """Affine constraints ``L_i(v) = A_i v + b_i`` at the marked points through ``f``."""

    f: DiscreteField
    A: np.ndarray
    b: np.ndarray
    conditions: tuple = ()

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float)
        nt = self.f.target_dim
        if A.shape != (3, 2, nt) or b.shape != (3, 2):
            raise ConfigurationError(f"expected A of shape (3, 2, {nt}) and b of shape (3, 2)")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        for i in range(3):
            r = self.constraint(i, self.marked_value(self.f, i))
            if np.max(np.abs(r)) > 1e-12:
                raise InvariantViolation(f"center violates constraint {i}: residual {np.abs(r).max():.2e}")
        conds = tuple(self.transversality(self.f, i) for i in range(3))
        if max(conds) > TRANSVERSALITY_COND:
            raise InvariantViolation(f"constraints not transversal: condition numbers {conds}")
        object.__setattr__(self, "conditions", conds)

    @classmethod
    def through(cls, f: DiscreteField, A=None, seed: int | None = None) -> "SliceSpec":
        """Slice through ``f``; ``A`` defaults to the pseudo-inverse of ``f``'s chart Jacobians.

        With ``seed`` given, ``A_i`` is that pseudo-inverse plus a seeded
        perturbation.
        """
        if A is None:
            rng = None if seed is None else np.random.default_rng([seed, 1234])
            mats = []
            for chart, c in MARKED:
                _, dx, dy = chart_jet(f, chart, c)
                a = np.linalg.pinv(np.stack([dx, dy], axis=1))
                if rng is not None:
                    a = a + 0.2 * np.abs(a).max() * rng.normal(size=a.shape)
                mats.append(a)
            A = np.stack(mats)
        A = np.asarray(A, dtype=float)
        vals = [evaluate_sphere(f, _marked_point(i)) for i in range(3)]
        b = -np.einsum("ijt,it->ij", A, np.stack(vals))
        return cls(f, A, b)

    @staticmethod
    def marked_value(k: DiscreteField, i: int) -> np.ndarray:
        return evaluate_sphere(k, _marked_point(i))

    def constraint(self, i: int, value) -> np.ndarray:
        return self.A[i] @ np.asarray(value) + self.b[i]

    def residuals(self, k: DiscreteField) -> np.ndarray:
        """``|L_i(k(x_i))|`` for the three marked points."""
        return np.array([np.linalg.norm(self.constraint(i, self.marked_value(k, i))) for i in range(3)])

    def newton_offsets(self, k: DiscreteField) -> np.ndarray:
        """Length of the first Newton step at each marked point (a basin diagnostic)."""
        out = []
        for i, (chart, c) in enumerate(MARKED):
            val, dx, dy = chart_jet(k, chart, c)
            jac = self.A[i] @ np.stack([dx, dy], axis=1)
            out.append(np.linalg.norm(np.linalg.solve(jac, self.constraint(i, val))))
        return np.array(out)

    def transversality(self, k: DiscreteField, i: int) -> float:
        chart, c = MARKED[i]
        _, dx, dy = chart_jet(k, chart, c)
        return float(np.linalg.cond(self.A[i] @ np.stack([dx, dy], axis=1)))


def _marked_point(i):
    return (0j, 1 + 0j, None)[i]


def _chart_to_homogeneous(chart, c):
    return (c, 1 + 0j) if chart == 0 else (1 + 0j, c)


def _newton(k: DiscreteField, spec: SliceSpec, i: int, tol: float, maxiter: int):
    """Damped Newton for ``L_i(k(y)) = 0`` in the chart coordinate of marked point ``i``."""
    chart, y = MARKED[i]

    def residual(y):
        u, v = _chart_to_homogeneous(chart, y)
        return spec.constraint(i, evaluate_points(k, np.array([u]), np.array([v]))[0])

    r = residual(y)
    its = 0
    while np.linalg.norm(r) > tol:
        if its >= maxiter:
            raise ProjectionError(f"Newton at marked point {i} did not converge in {maxiter} iterations")
        _, dx, dy = chart_jet(k, chart, y)
        jac = spec.A[i] @ np.stack([dx, dy], axis=1)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise ProjectionError(f"singular Newton matrix at marked point {i}") from None
        lam, norm0 = 1.0, np.linalg.norm(r)
        while True:
            trial = y + lam * complex(step[0], step[1])
            if abs(trial) < charts.BLEND_RADIUS:
                r_new = residual(trial)
                if np.linalg.norm(r_new) < norm0:
                    break
            lam *= 0.5
            if lam < 1e-6:
                raise ProjectionError(f"no descent step at marked point {i}; k is outside the basin")
        y, r = trial, r_new
        its += 1
    return _chart_to_homogeneous(chart, y), its, float(np.linalg.norm(r))


@dataclass
class SliceProjection:
    """Result of :func:`slice_projection`; unpacks as ``(element, field)``."""

    element: MobiusElement
    field: DiscreteField
    iterations: tuple
    residuals: tuple

    def __iter__(self):
        yield self.element
        yield self.field


def slice_projection(k: DiscreteField, spec: SliceSpec, tol: float = NEWTON_TOL,
                     maxiter: int = NEWTON_MAXITER, eps: float = NEAR_IDENTITY) -> SliceProjection:
    """Find ``gamma = T^{-1}(k)`` with ``k o gamma`` on the slice.

    Each marked point is solved independently; if ``k`` already satisfies a
    constraint to ``tol`` no iteration is taken, so slice members return the
    identity exactly.
    """
    if k.grid != spec.f.grid or k.target_dim != spec.f.target_dim:
        raise ConfigurationError("k must live on the slice center's grid and target")
    pts, its, res = zip(*(_newton(k, spec, i, tol, maxiter) for i in range(3)))
    try:
        g = mobius_from_triple(*pts, eps=eps)
    except NeighborhoodError as exc:
        raise ProjectionError(str(exc)) from None
    return SliceProjection(g, compose_with_mobius(k, g), tuple(its), tuple(res))


# -- sections ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SectionOnSlice:
    """A section ``h -> [eta](h)`` over slice members.

    ``m`` and ``witness`` record the extension data: the order of the
    extension and the regularity measurements that certify it.
    """

    evaluator: Callable[[DiscreteField], DiscreteField]
    m: int | None = None
    witness: dict = field(default_factory=dict)

    def __call__(self, h: DiscreteField) -> DiscreteField:
        return self.evaluator(h)

    @property
    def has_extension(self) -> bool:
        return self.m is not None


def constant_section(xi0: DiscreteField, m: int, idx: SobolevIndex = SobolevIndex(3, 4),
                     tail_tol: float = 1e-10, drift_tol: float = 0.05) -> SectionOnSlice:
    """The section whose value is ``xi0`` for every slice member.

    The regularity witness requires Chebyshev coefficients of degree at
    least ``7n/8`` below ``tail_tol`` (relative) on both charts, and the
    ``L_{k+m}^p`` norm to change by at most ``drift_tol`` when the grid is
    doubled.
    """
    if xi0.grid.is_torus:
        raise ConfigurationError("constant sections live on sphere fields")
    idx.check_drop(m)
    tail = spectral_tail(xi0, 0.875)
    if tail > tail_tol:
        raise WitnessError(f"xi0 is not resolved: Chebyshev tail {tail:.2e} > {tail_tol:.0e}")
    lifted = SobolevIndex(idx.k + m, idx.p)
    coarse = sobolev_norm(xi0, lifted)
    fine = sobolev_norm(resample(xi0, 2 * xi0.grid.n), lifted)
    drift = abs(fine - coarse) / max(fine, np.finfo(float).tiny) if fine or coarse else 0.0
    if drift > drift_tol:
        raise WitnessError(f"||xi0||_(k+m,p) drifts {drift:.2%} under grid doubling")
    witness = {"tail": tail, "norm": coarse, "norm_doubled": fine, "drift": drift,
               "index": (lifted.k, lifted.p)}
    return SectionOnSlice(lambda h: xi0, m, witness)


def equivariant_extension(section: SectionOnSlice, spec: SliceSpec, k: DiscreteField,
                          projection: SliceProjection | None = None) -> DiscreteField:
    """``[eta](k o T^{-1}(k)) o T(k)`` computed through the four-map chain.

    (1) ``k -> (T^{-1}(k), k)``; (2) ``-> (T(k), k o T^{-1}(k))``;
    (3) ``-> (T(k), [eta](k o T^{-1}(k)))``; (4) ``-> [eta](...) o T(k)``.
    """
    proj = slice_projection(k, spec) if projection is None else projection
    t_inv = proj.element                               # (1)
    t, on_slice = t_inv.inverse(), proj.field          # (2)
    value = section(on_slice)                          # (3)
    if value.grid != k.grid:
        raise ConfigurationError("section values must share the grid of k")
    if t_inv.distance() == 0.0:
        return value                                   # T = id on slice members
    return compose_with_mobius(value, t)               # (4)


# -- evaluation ------------------------------------------------------------------------


def evaluate(g: DiscreteField, x) -> np.ndarray:
    """Value of the interpolant of ``g`` at one point.

    Torus points are pairs ``(x1, x2)``; sphere points are complex numbers,
    ``inf`` or homogeneous pairs.
    """
    if g.grid.is_torus:
        x1, x2 = (float(c) for c in x)
        return torus_interpolate(g, np.array([x1]), np.array([x2]))[0][0]
    return evaluate_sphere(g, x)


def translation_family_at(x0, r: float, eps: float | None = None) -> ShearBumpFamily:
    """Family with ``T_a(x0) = x0 + a`` that is the identity outside the ``2r``-disk.

    The parameter is ``a = x - x0``; valid for ``|a|`` below the family radius.
    """
    if not 0 < r < math.pi / 2:
        raise ConfigurationError(f"r must lie in (0, pi/2) so the 2r-disk embeds, got {r!r}")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != 2:
        raise DomainError("x0 must be a torus point")
    return ShearBumpFamily(center=x0 % (2 * math.pi), radius=r, eps=eps)
