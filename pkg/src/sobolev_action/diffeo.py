"""Parametrized diffeomorphism families of the torus and the composition action.

A family supplies ``T(a, x)``, every parameter partial ``d^beta_a T(a, x)``
and the spatial Jacobian in closed form.  The action ``(a, eta) -> eta o T_a``
is evaluated by trigonometric interpolation of ``eta`` at ``T_a(x)``, and its
parameter derivatives are the exact derivatives of that discrete map.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .charts import smooth_step, smooth_step_derivative
from .errors import ConfigurationError, DomainError, InvariantViolation, SobolevIndexError
from .fields import (
    DiscreteField,
    GridSpec,
    SobolevIndex,
    check_same_grid,
    torus_interpolate,
    torus_shift,
)

# max of smooth_step' on [0, 1], attained at 1/2
_STEP_SLOPE = 2.0


@dataclass(frozen=True)
class GroupParam:
    """Coordinates ``a`` of a group element in the ball of radius ``radius``."""

    a: tuple
    radius: float

    def __post_init__(self):
        a = tuple(float(x) for x in np.ravel(self.a))
        object.__setattr__(self, "a", a)
        if not np.linalg.norm(a) < self.radius:
            raise DomainError(f"|a| = {np.linalg.norm(a):.3g} is not below radius {self.radius}")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.a)


def _wrap(d):
    return (d + np.pi) % (2.0 * np.pi) - np.pi


class DiffeoFamily:
    """Base class: a smooth family ``T: B^n_eps x T^2 -> T^2`` with ``T_0 = id``.

    Subclasses implement :meth:`displacement`, :meth:`param_partial` and
    :meth:`jacobian`.  Points are pairs of arrays ``(x1, x2)``.
    """

    kind = "abstract"
    n: int
    eps: float

    def check(self, a) -> np.ndarray:
        if isinstance(a, GroupParam):
            a = a.array
        a = np.asarray(a, dtype=float).ravel()
        if a.size != self.n:
            raise DomainError(f"{self.kind} family has {self.n} parameters, got {a.size}")
        if not np.linalg.norm(a) < self.eps:
            raise DomainError(f"|a| = {np.linalg.norm(a):.4g} is not below eps = {self.eps:.4g}")
        return a

    def __call__(self, a, x1, x2):
        """``T_a(x)``, not reduced modulo the period."""
        d1, d2 = self.displacement(np.asarray(a, dtype=float), x1, x2)
        return x1 + d1, x2 + d2

    def displacement(self, a, x1, x2):
        raise NotImplementedError

    def param_partial(self, a, beta, x1, x2):
        """``d^beta_a T(a, x)`` for a multi-index of counts, ``|beta| >= 1``."""
        raise NotImplementedError

    def jacobian(self, a, x1, x2) -> np.ndarray:
        """Spatial Jacobian of ``T_a``, shape ``x1.shape + (2, 2)``."""
        raise NotImplementedError

    def jacobian_inverse(self, a, x1, x2) -> np.ndarray:
        return np.linalg.inv(self.jacobian(a, x1, x2))

    def inverse(self, a, y1, y2, tol: float = 1e-13, maxiter: int = 50):
        """Solve ``T_a(x) = y`` pointwise by Newton's method from ``x = y``."""
        a = np.asarray(a, dtype=float)
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        x1, x2 = y1.copy(), y2.copy()
        for _ in range(maxiter):
            t1, t2 = self(a, x1, x2)
            r = np.stack([t1 - y1, t2 - y2], axis=-1)
            if np.max(np.abs(r)) <= tol:
                break
            step = np.linalg.solve(self.jacobian(a, x1, x2), r[..., None])[..., 0]
            x1 = x1 - step[..., 0]
            x2 = x2 - step[..., 1]
        else:
            raise InvariantViolation("inverse of T_a did not converge")
        return x1, x2

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "eps": self.eps}


class TranslationFamily(DiffeoFamily):
    """``T_a(x) = x + a`` on the torus."""

    kind = "translation"
    n = 2

    def __init__(self, eps: float = np.pi):
        self.eps = float(eps)

    def displacement(self, a, x1, x2):
        return np.full_like(x1, a[0], dtype=float), np.full_like(x2, a[1], dtype=float)

    def param_partial(self, a, beta, x1, x2):
        out = np.zeros((2,) + np.shape(x1))
        if sum(beta) == 1:
            out[int(np.argmax(beta))] = 1.0
        return out

    def jacobian(self, a, x1, x2):
        return np.broadcast_to(np.eye(2), np.shape(x1) + (2, 2)).copy()


class _BumpSupported(DiffeoFamily):
    """Shared radial bump: 1 on ``|x - x0| <= r``, 0 beyond ``2r`` (periodic distance)."""

    def _setup_bump(self, center, radius):
        self.center = np.asarray(center, dtype=float).ravel()
        self.radius = float(radius)
        if self.center.size != 2:
            raise ConfigurationError("center must be a point of the torus")
        if not 0 < self.radius < np.pi / 2:
            raise ConfigurationError(f"bump radius must lie in (0, pi/2), got {radius!r}")

    def _offsets(self, x1, x2):
        return _wrap(x1 - self.center[0]), _wrap(x2 - self.center[1])

    def bump(self, x1, x2):
        d1, d2 = self._offsets(x1, x2)
        rho = np.hypot(d1, d2)
        return 1.0 - smooth_step(rho / self.radius - 1.0)

    def bump_gradient(self, x1, x2):
        d1, d2 = self._offsets(x1, x2)
        rho = np.hypot(d1, d2)
        slope = -smooth_step_derivative(rho / self.radius - 1.0) / self.radius
        safe = np.where(rho > 0, rho, 1.0)
        return slope * d1 / safe, slope * d2 / safe


class ShearBumpFamily(_BumpSupported):
    """``T_a(x) = x + chi(x) a`` with ``chi`` a bump centred at ``x0``.

    Translation by ``a`` on the disk ``|x - x0| <= r`` and the identity
    outside ``|x - x0| >= 2r``.  ``det DT_a = 1 + a . grad chi``, so the
    default radius ``eps = r/4`` keeps the determinant at least 1/2.
    """

    kind = "shear-bump"
    n = 2

    def __init__(self, center=(np.pi, np.pi), radius: float = 1.0, eps: float | None = None):
        self._setup_bump(center, radius)
        limit = 0.5 * self.radius / _STEP_SLOPE
        self.eps = limit if eps is None else float(eps)
        if not 0 < self.eps <= limit:
            raise ConfigurationError(f"eps must lie in (0, {limit:.4g}] to keep det Jac >= 1/2")

    def displacement(self, a, x1, x2):
        chi = self.bump(x1, x2)
        return chi * a[0], chi * a[1]

    def param_partial(self, a, beta, x1, x2):
        out = np.zeros((2,) + np.shape(x1))
        if sum(beta) == 1:
            out[int(np.argmax(beta))] = self.bump(x1, x2)
        return out

    def jacobian(self, a, x1, x2):
        g1, g2 = self.bump_gradient(x1, x2)
        jac = np.zeros(np.shape(x1) + (2, 2))
        jac[..., 0, 0] = 1.0 + a[0] * g1
        jac[..., 0, 1] = a[0] * g2
        jac[..., 1, 0] = a[1] * g1
        jac[..., 1, 1] = 1.0 + a[1] * g2
        return jac

    def describe(self):
        return {**super().describe(), "center": self.center.tolist(), "radius": self.radius}


class MobiusBumpFamily(_BumpSupported):
    """Near-identity Moebius maps pushed onto a disk of the torus.

    With ``z = ((x1 - c1) + i (x2 - c2)) / scale`` and
    ``g_a(z) = (A z + B) / (C z + 1)``, ``A = 1 + a1 + i a2``,
    ``B = a3 + i a4``, ``C = a5 + i a6``, the map is
    ``T_a(x) = x + chi(x) * scale * (g_a(z) - z)``.
    """

    kind = "mobius-pushforward"
    n = 6

    def __init__(self, center=(np.pi, np.pi), radius: float = 1.0, scale: float = 1.0,
                 eps: float = 0.05, check_grid: int = 64):
        self._setup_bump(center, radius)
        self.scale = float(scale)
        self.eps = float(eps)
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        worst = self._sampled_min_det(check_grid)
        if worst < 0.5:
            raise ConfigurationError(
                f"min det Jac = {worst:.3f} < 1/2 on the eps-ball; reduce eps")

    def _coeffs(self, a):
        return 1.0 + a[0] + 1j * a[1], a[2] + 1j * a[3], a[4] + 1j * a[5]

    def _z(self, x1, x2):
        d1, d2 = self._offsets(x1, x2)
        return (d1 + 1j * d2) / self.scale

    def displacement(self, a, x1, x2):
        A, B, C = self._coeffs(a)
        z = self._z(x1, x2)
        w = self.scale * self.bump(x1, x2) * ((A * z + B) / (C * z + 1.0) - z)
        return w.real, w.imag

    def param_partial(self, a, beta, x1, x2):
        beta = tuple(int(b) for b in beta)
        n_a, n_b, n_c = beta[0] + beta[1], beta[2] + beta[3], beta[4] + beta[5]
        out = np.zeros((2,) + np.shape(x1))
        if n_a + n_b >= 2:
            return out
        A, B, C = self._coeffs(a)
        z = self._z(x1, x2)
        q = C * z + 1.0
        num = z if n_a else (np.ones_like(z) if n_b else A * z + B)
        g = (1j ** (beta[1] + beta[3] + beta[5])) * num * (-z) ** n_c * math.factorial(n_c) * q ** (-n_c - 1)
        w = self.scale * self.bump(x1, x2) * g
        out[0], out[1] = w.real, w.imag
        return out

    def jacobian(self, a, x1, x2):
        A, B, C = self._coeffs(a)
        z = self._z(x1, x2)
        q = C * z + 1.0
        w = self.scale * ((A * z + B) / q - z)
        dg = (A - B * C) / q**2 - 1.0
        chi = self.bump(x1, x2)
        g1, g2 = self.bump_gradient(x1, x2)
        jac = np.zeros(np.shape(x1) + (2, 2))
        jac[..., 0, 0] = 1.0 + w.real * g1 + chi * dg.real
        jac[..., 0, 1] = w.real * g2 - chi * dg.imag
        jac[..., 1, 0] = w.imag * g1 + chi * dg.imag
        jac[..., 1, 1] = 1.0 + w.imag * g2 + chi * dg.real
        return jac

    def _sampled_min_det(self, n):
        x = 2.0 * np.pi * np.arange(n) / n
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        rng = np.random.default_rng(0)
        dirs = np.concatenate([np.eye(self.n), -np.eye(self.n), rng.normal(size=(4 * self.n, self.n))])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        worst = np.inf
        for d in dirs:
            worst = min(worst, float(np.linalg.det(self.jacobian(self.eps * d, x1, x2)).min()))
        return worst

    def describe(self):
        return {**super().describe(), "center": self.center.tolist(), "radius": self.radius,
                "scale": self.scale}


_FAMILIES = {
    "translation": TranslationFamily,
    "shear-bump": ShearBumpFamily,
    "mobius-pushforward": MobiusBumpFamily,
}


def builtin_family(kind: str, **params) -> DiffeoFamily:
    try:
        cls = _FAMILIES[kind]
    except KeyError:
        raise ConfigurationError(f"unknown family {kind!r}; choose from {sorted(_FAMILIES)}") from None
    return cls(**params)


# -- the action -----------------------------------------------------------------


def _require_torus(eta: DiscreteField):
    if not eta.grid.is_torus:
        raise ConfigurationError("torus action needs a torus field; use mobius_act on the sphere")


def _sample_derivatives(eta: DiscreteField, fam: DiffeoFamily, a: np.ndarray, orders):
    """Spatial derivatives of the interpolant of ``eta`` sampled at ``T_a(x)``."""
    x1, x2 = eta.grid.coords()
    if isinstance(fam, TranslationFamily):
        return torus_shift(eta, a, orders)
    y1, y2 = fam(a, x1, x2)
    return torus_interpolate(eta, y1, y2, orders)


def compose(eta: DiscreteField, fam: DiffeoFamily, a) -> DiscreteField:
    """``eta o T_a`` sampled on the grid; returns ``eta`` itself at ``a = 0``."""
    _require_torus(eta)
    a = fam.check(a)
    if not a.any():
        return eta
    return eta.with_values(_sample_derivatives(eta, fam, a, [(0, 0)])[0])


def _unit(n, j):
    beta = [0] * n
    beta[j] = 1
    return tuple(beta)


def action_partial(eta: DiscreteField, fam: DiffeoFamily, a, j: int) -> DiscreteField:
    """``d/da_j (eta o T_a) = (grad eta o T_a) . d_j T_a``.

    The output consumes one derivative of ``eta``; read it in ``L_{k-1}``.
    """
    return action_higher_partial(eta, fam, a, _unit(fam.n, j))


def _directions(alpha) -> list[int]:
    return [j for j, c in enumerate(alpha) for _ in range(int(c))]


def faa_di_bruno_terms(directions) -> dict:
    """Chain-rule expansion of ``d_{j1} ... d_{jm} (eta o T_a)``.

    Each key is ``(gamma, factors)`` where ``gamma = (c1, c2)`` counts the
    spatial derivatives on ``eta`` and ``factors`` is a sorted tuple of
    ``(beta, i)``: the i-th component of ``d^beta_a T``.  Values are integer
    multiplicities.  Differentiating a term in ``a_j`` either adds a spatial
    derivative to ``eta`` together with a new factor ``d_j T^i``, or raises
    the order of one existing factor.
    """
    terms = {((0, 0), ()): 1}
    n = max(directions, default=-1) + 1
    for j in directions:
        nxt = defaultdict(int)
        for (gamma, factors), mult in terms.items():
            for i in (0, 1):
                g = (gamma[0] + (i == 0), gamma[1] + (i == 1))
                f = tuple(sorted(factors + ((_pad(_unit(n, j), n), i),)))
                nxt[(g, f)] += mult
            for pos, (beta, i) in enumerate(factors):
                b = list(beta)
                b[j] += 1
                f = tuple(sorted(factors[:pos] + ((tuple(b), i),) + factors[pos + 1:]))
                nxt[(gamma, f)] += mult
        terms = dict(nxt)
    return terms


def _pad(beta, n):
    return tuple(beta) + (0,) * (n - len(beta))


def action_higher_partial(eta: DiscreteField, fam: DiffeoFamily, a, alpha,
                          idx: SobolevIndex | None = None, order=None) -> DiscreteField:
    """Parameter partial ``d^alpha_a (eta o T_a)`` for a multi-index of counts.

    ``order`` optionally fixes the sequence of differentiation directions
    (a permutation of the directions in ``alpha``); the result does not
    depend on it.
    """
    _require_torus(eta)
    a = fam.check(a)
    alpha = tuple(int(c) for c in alpha)
    if len(alpha) != fam.n or min(alpha) < 0:
        raise SobolevIndexError(f"multi-index {alpha} does not match {fam.n} parameters")
    total = sum(alpha)
    if total == 0:
        return compose(eta, fam, a)
    if idx is not None and total > idx.k - math.ceil(2.0 / idx.p):
        raise SobolevIndexError(f"|alpha| = {total} exceeds k - ceil(2/p) for {idx}")
    directions = list(order) if order is not None else _directions(alpha)
    if sorted(directions) != _directions(alpha):
        raise ValueError("order must be a permutation of the directions in alpha")
    terms = faa_di_bruno_terms(directions)
    terms = {(g, tuple((_pad(b, fam.n), i) for b, i in fs)): m for (g, fs), m in terms.items()}
    gammas = sorted({g for g, _ in terms})
    sampled = dict(zip(gammas, _sample_derivatives(eta, fam, a, gammas)))
    x1, x2 = eta.grid.coords()
    partials = {}
    out = np.zeros_like(eta.values)
    for (gamma, factors), mult in terms.items():
        coeff = np.full(eta.grid.shape, float(mult))
        for beta, i in factors:
            if beta not in partials:
                partials[beta] = fam.param_partial(a, beta, x1, x2)
            coeff = coeff * partials[beta][i]
        if np.any(coeff):
            out += coeff[..., None] * sampled[gamma]
    return eta.with_values(out)


def jacobian_field(fam: DiffeoFamily, a, grid: GridSpec) -> DiscreteField:
    """``det D T_a`` on the grid; raises if it is not strictly positive."""
    a = fam.check(a)
    x1, x2 = grid.coords()
    det = np.linalg.det(fam.jacobian(a, x1, x2))
    if not np.all(det > 0):
        raise InvariantViolation(f"det Jac reaches {det.min():.3g} <= 0")
    return DiscreteField(grid, det)


# -- partition of unity -----------------------------------------------------------


def _exp_bump(t):
    """exp(-1/t) for t > 0, else 0."""
    t = np.asarray(t, dtype=float)
    return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Two partitions of unity with nested supports ``V_i ⊂ V'_i ⊂ U_i``.

    ``alphas`` sum to one and vanish outside ``V_i``; each ``beta_i`` equals
    one on ``V'_i`` and vanishes outside ``U_i``.
    """

    grid: GridSpec
    alphas: tuple
    betas: tuple
    description: str = ""

    def __post_init__(self):
        if len(self.alphas) != len(self.betas) or not self.alphas:
            raise ConfigurationError("alphas and betas must be non-empty and of equal length")
        total = sum(a.values for a in self.alphas)
        if np.max(np.abs(total - 1.0)) > 1e-12:
            raise InvariantViolation("alphas do not sum to one")
        for a, b in zip(self.alphas, self.betas):
            if not np.array_equal(a.values * b.values, a.values):
                raise InvariantViolation("beta_i must equal one wherever alpha_i is nonzero")

    @property
    def size(self) -> int:
        return len(self.alphas)


def _partition_from_distances(grid, dists, r_v, r_vp, r_u, description):
    bumps = [_exp_bump(1.0 - (d / r_v) ** 2) for d in dists]
    total = sum(bumps)
    if not np.all(total > 0):
        raise ConfigurationError("the sets V_i do not cover the torus")
    alphas = tuple(DiscreteField(grid, b / total) for b in bumps)
    betas = tuple(DiscreteField(grid, 1.0 - smooth_step((d - r_vp) / (r_u - r_vp))) for d in dists)
    return PartitionOfUnity(grid, alphas, betas, description)


def disk_partition(grid: GridSpec, centers, r_v: float, r_vp: float, r_u: float) -> PartitionOfUnity:
    """Partition subordinate to geodesic disks ``V_i ⊂ V'_i ⊂ U_i`` (radii < pi)."""
    if not 0 < r_v < r_vp < r_u < np.pi:
        raise ConfigurationError("need 0 < r_v < r_vp < r_u < pi")
    x1, x2 = grid.coords()
    dists = [np.hypot(_wrap(x1 - c[0]), _wrap(x2 - c[1])) for c in centers]
    return _partition_from_distances(grid, dists, r_v, r_vp, r_u, f"disks x{len(centers)}")


def strip_partition(grid: GridSpec, count: int, axis: int = 0) -> PartitionOfUnity:
    """``count`` periodic bands along one axis (two disks cannot cover a torus)."""
    x = grid.coords()[axis]
    gap = np.pi / count
    centers = [(2 * i + 1) * gap for i in range(count)]
    dists = [np.abs(_wrap(x - c)) for c in centers]
    return _partition_from_distances(grid, dists, 1.3 * gap, 1.5 * gap, 1.8 * gap,
                                     f"strips x{count}")


def standard_partition(grid: GridSpec, count: int) -> PartitionOfUnity:
    """Defaults: one trivial piece, two bands, or a ``m x m`` array of disks."""
    if count == 1:
        one = DiscreteField(grid, np.ones(grid.shape))
        return PartitionOfUnity(grid, (one,), (one,), "trivial")
    if count == 2:
        return strip_partition(grid, 2)
    m = math.isqrt(count)
    if m * m != count:
        raise ConfigurationError("disk partitions need a square number of pieces")
    gap = np.pi / m
    centers = [((2 * i + 1) * gap, (2 * j + 1) * gap) for i in range(m) for j in range(m)]
    cover = math.sqrt(2.0) * gap
    r_u = min(0.95 * np.pi, 1.6 * cover)
    return disk_partition(grid, centers, 1.05 * cover, 0.5 * (1.05 * cover + r_u), r_u)


def partition_localize(xi: DiscreteField, pou: PartitionOfUnity) -> list[DiscreteField]:
    """``(alpha_1 xi, ..., alpha_l xi)``."""
    check_same_grid(xi, pou.alphas[0])
    return [xi.with_values(a.values * xi.values) for a in pou.alphas]


def partition_assemble(pieces, pou: PartitionOfUnity) -> DiscreteField:
    """``sum_i beta_i eta_i``; inverts :func:`partition_localize`."""
    pieces = list(pieces)
    if len(pieces) != pou.size:
        raise ValueError(f"expected {pou.size} pieces, got {len(pieces)}")
    check_same_grid(*pieces, pou.betas[0])
    out = np.zeros_like(pieces[0].values)
    for b, piece in zip(pou.betas, pieces):
        out += b.values * piece.values
    return pieces[0].with_values(out)
