"""Finite-difference verification of the composition action.

Every map here is smooth at a fixed grid resolution, since the grid is a
finite-dimensional space.  Loss of smoothness in the continuum therefore
shows up as non-uniformity under refinement: the fitted convergence order of
a finite-difference residual drops as ``N`` grows when the field lacks the
derivatives that the chosen norm consumes.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diffeo import (
    DiffeoFamily,
    TranslationFamily,
    action_higher_partial,
    action_partial,
    compose,
)
from .errors import ConfigurationError, InsufficientDataError
from .fields import (
    DiscreteField,
    SobolevIndex,
    inner,
    lowpass,
    make_grid,
    norm_power,
    norm_power_gradient,
    sobolev_norm,
    synth_field,
)

DEFAULT_LADDER = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
FIT_TOLERANCE = 0.15
# residuals below this fraction of the reference norm count as exact zeros
_EXACT_FLOOR = 1e-13


@dataclass
class ProbeReport:
    """Residuals of one finite-difference experiment and their fitted order.

    ``status`` is ``"pass"``, ``"fail"``, ``"exact"`` (all residuals at
    rounding level) or ``"unresolved"`` (the log-log fit is too poor to
    trust).  ``norm`` is the ``(k, p, drop)`` triple all residuals use.
    """

    label: str
    steps: tuple
    residuals: tuple
    order: float
    fit_residual: float
    norm: tuple
    grid: int
    threshold: float
    status: str
    metrics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "exact")

    def summary(self) -> str:
        return (f"{self.label}: order {self.order:.3f} (fit {self.fit_residual:.3f}) "
                f"threshold {self.threshold} N={self.grid} -> {self.status}")


def fit_order(steps, residuals, count: int = 3) -> tuple[float, float]:
    """Least-squares slope of ``log r`` against ``log t`` over the ``count`` smallest steps.

    Returns ``(order, fit_residual)`` where the fit residual is the largest
    deviation of ``log10 r`` from the fitted line.
    """
    steps = np.asarray(steps, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if steps.size < count or count < 2:
        raise InsufficientDataError(f"need at least {max(count, 2)} steps, got {steps.size}")
    pick = np.argsort(steps)[:count]
    x = np.log10(steps[pick])
    y = np.log10(np.maximum(residuals[pick], np.finfo(float).tiny))
    slope, icept = np.polyfit(x, y, 1)
    return float(slope), float(np.max(np.abs(y - (slope * x + icept))))


def _classify(order, fit_res, threshold, exact, upper=None):
    if exact:
        return "exact"
    if not np.isfinite(order) or fit_res > FIT_TOLERANCE:
        return "unresolved"
    ok = order >= threshold and (upper is None or order <= upper)
    return "pass" if ok else "fail"


def _check_steps(steps, limit=None):
    steps = [float(t) for t in steps]
    if len(steps) < 3:
        raise InsufficientDataError("a convergence fit needs at least 3 steps")
    if any(t <= 0 for t in steps):
        raise ValueError("steps must be positive")
    if limit is not None and max(steps) >= limit:
        raise ValueError(f"largest step {max(steps):.3g} leaves the parameter ball (limit {limit:.3g})")
    return steps


def default_steps(fam: DiffeoFamily) -> list[float]:
    """The default ladder scaled by the family radius."""
    return [t * fam.eps for t in DEFAULT_LADDER]


def _report(label, steps, res, idx, drop, grid, threshold, ref, upper=None, metrics=None):
    exact = max(res) <= _EXACT_FLOOR * max(ref, 1.0)
    if exact:
        order, fit_res = math.nan, 0.0
    else:
        order, fit_res = fit_order(steps, res)
    status = _classify(order, fit_res, threshold, exact, upper)
    return ProbeReport(label, tuple(steps), tuple(res), order, fit_res, (idx.k, idx.p, drop),
                       grid, threshold, status, metrics or {})


def derivative_check(fam: DiffeoFamily, eta: DiscreteField, a, j: int, idx: SobolevIndex,
                     drop: int = 2, steps=None, mode: str = "taylor",
                     threshold: float | None = None) -> ProbeReport:
    """Compare ``compose`` at ``a + t e_j`` with its first-order expansion.

    ``mode="taylor"`` measures ``|| Phi(a+te_j) - Phi(a) - t d_j Phi(a) ||``,
    which is ``O(t^2)`` when ``eta`` has the derivatives the norm needs.
    ``mode="quotient"`` measures the difference-quotient error
    ``|| (Phi(a+te_j) - Phi(a))/t - d_j Phi(a) ||`` (nominal order 1).
    Norms are ``L_{k-drop}^p``.
    """
    if mode not in ("taylor", "quotient"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    a = fam.check(a)
    idx.check_drop(drop)
    steps = _check_steps(steps if steps is not None else default_steps(fam),
                         fam.eps - np.linalg.norm(a))
    base = compose(eta, fam, a)
    slope = action_partial(eta, fam, a, j)
    e = np.zeros(fam.n)
    e[j] = 1.0
    res = []
    for t in steps:
        diff = compose(eta, fam, a + t * e) - base
        r = diff - t * slope if mode == "taylor" else diff / t - slope
        res.append(sobolev_norm(r, idx, drop))
    if threshold is None:
        threshold = 1.8 if mode == "taylor" else 0.9
    ref = sobolev_norm(eta, idx, drop)
    return _report(f"{fam.kind}:d{j}:{mode}", steps, res, idx, drop, eta.grid.n,
                   threshold, ref)


def taylor_remainder(fam: DiffeoFamily, eta: DiscreteField, a, j: int, m: int,
                     idx: SobolevIndex, drop: int, steps) -> list[float]:
    """``|| Phi(a+te_j) - sum_{i<=m} t^i/i! d_j^i Phi(a) ||_{k-drop,p}`` for each step."""
    a = fam.check(a)
    terms = []
    for i in range(m + 1):
        alpha = [0] * fam.n
        alpha[j] = i
        terms.append(action_higher_partial(eta, fam, a, alpha).values / math.factorial(i))
    e = np.zeros(fam.n)
    e[j] = 1.0
    out = []
    for t in steps:
        r = compose(eta, fam, a + t * e).values - sum(t**i * v for i, v in enumerate(terms))
        out.append(sobolev_norm(eta.with_values(r), idx, drop))
    return out


# -- continuity modulus ---------------------------------------------------------


def _unit_field(grid, idx, target_dim, seed, s):
    g = synth_field(s, seed, grid, target_dim)
    return g / sobolev_norm(g, idx)


def continuity_modulus(fam: DiffeoFamily, eta: DiscreteField, a, deltas, idx: SobolevIndex,
                       samples: int = 32, seed: int = 0, cutoff: int | None = None,
                       perturb_regularity: float | None = None) -> ProbeReport:
    """Sampled modulus ``omega(delta)`` of ``(a, eta) -> eta o T_a`` in ``L_k^p``.

    For each delta the supremum is taken over ``samples`` seeded pairs with
    ``|t| <= delta`` and ``||gamma||_{k,p} <= delta``.  The difference splits as
    ``A + B1 + B2 + B3`` with ``A = gamma o T_{a+t}``,
    ``B1 = (eta - xi) o T_{a+t}``, ``B2 = xi o T_{a+t} - xi o T_a`` and
    ``B3 = (xi - eta) o T_a`` for the spectral truncation ``xi`` of ``eta``;
    the supremum of each part is recorded in ``metrics``.
    """
    a = fam.check(a)
    deltas = _check_steps(deltas, fam.eps - np.linalg.norm(a))
    if any(d1 <= d2 for d1, d2 in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be decreasing")
    grid = eta.grid
    cutoff = grid.n // 8 if cutoff is None else int(cutoff)
    xi = lowpass(eta, cutoff)
    s_pert = idx.k + 2.0 if perturb_regularity is None else perturb_regularity
    rng = np.random.default_rng([seed, 7919])
    dirs = rng.normal(size=(samples, fam.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 1.0, size=(samples, 2))
    radii[0] = 1.0  # the extreme sample is always included
    units = [_unit_field(grid, idx, eta.target_dim, seed * 1000 + i, s_pert) for i in range(samples)]
    base = compose(eta, fam, a)
    xi_base = compose(xi, fam, a)
    b3 = sobolev_norm(xi_base - base, idx)
    omega, parts = [], {"A": [], "B1": [], "B2": [], "B3": []}
    for delta in deltas:
        sup = dict.fromkeys(parts, 0.0)
        worst = 0.0
        for i in range(samples):
            at = a + delta * radii[i, 0] * dirs[i]
            gamma = units[i] * (delta * radii[i, 1])
            moved = compose(eta + gamma, fam, at)
            worst = max(worst, sobolev_norm(moved - base, idx))
            sup["A"] = max(sup["A"], sobolev_norm(compose(gamma, fam, at), idx))
            sup["B1"] = max(sup["B1"], sobolev_norm(compose(eta - xi, fam, at), idx))
            sup["B2"] = max(sup["B2"], sobolev_norm(compose(xi, fam, at) - xi_base, idx))
        sup["B3"] = b3
        omega.append(worst)
        for key in parts:
            parts[key].append(sup[key])
    ref = sobolev_norm(eta, idx)
    rep = _report(f"{fam.kind}:modulus", deltas, omega, idx, 0, grid.n, 0.0, ref,
                  metrics={"parts": parts, "cutoff": cutoff, "samples": samples})
    rep.metrics["monotone"] = modulus_is_monotone(deltas, omega)
    return rep


def modulus_is_monotone(deltas, omega, noise: float = 0.05) -> bool:
    """True when omega does not grow as delta shrinks, up to relative ``noise``."""
    order = np.argsort(deltas)[::-1]
    vals = np.asarray(omega)[order]
    return bool(np.all(vals[1:] <= vals[:-1] * (1.0 + noise) + 1e-300))


# -- sweeps ----------------------------------------------------------------------


@dataclass
class SweepTable:
    """Fitted orders indexed by ``(grid, s, m, drop)``.

    ``order`` is the fitted order of the order-``m`` Taylor remainder; its
    nominal value is ``m + 1``.  ``consistency = order - m`` is the order of
    the ``m``-th difference quotient and is nominally 1.  Cells that could
    not be computed hold ``None`` so that every requested key is present.
    """

    family: str
    norm: tuple
    grids: tuple
    s_list: tuple
    m_list: tuple
    drops: tuple
    cells: dict

    def keys(self):
        return list(itertools.product(self.grids, self.s_list, self.m_list, self.drops))

    def cell(self, grid, s, m, drop):
        return self.cells[(grid, s, m, drop)]

    def drift(self, s, m, drop) -> float:
        """Spread of the fitted order across grids for one ``(s, m, drop)``."""
        vals = [self.cells[(g, s, m, drop)]["order"] for g in self.grids
                if self.cells[(g, s, m, drop)] is not None]
        return float(max(vals) - min(vals)) if vals else math.nan

    def __len__(self):
        return len(self.cells)


def _sweep_cell(fam, key, idx, seed, steps, j, target_dim):
    n, s, m, drop = key
    grid = make_grid("torus", n)
    eta = synth_field(s, seed, grid, target_dim)
    a0 = np.zeros(fam.n)
    if m == 0:
        e = np.zeros(fam.n)
        e[j] = 1.0
        base = compose(eta, fam, a0)
        res = [sobolev_norm(compose(eta, fam, t * e) - base, idx, drop) for t in steps]
    else:
        res = taylor_remainder(fam, eta, a0, j, m, idx, drop, steps)
    order, fit_res = fit_order(steps, res)
    return {"order": order, "consistency": order - m, "fit_residual": fit_res,
            "resolved": fit_res <= FIT_TOLERANCE, "residuals": tuple(res)}


def regularity_sweep(fam: DiffeoFamily, s_list, m_list, grids, seed: int,
                     idx: SobolevIndex, drops=None, steps=None, j: int = 0,
                     target_dim: int = 1, threads: int = 1) -> SweepTable:
    """Fit Taylor-remainder orders for every ``(grid, s, m, drop)`` cell.

    ``drops`` defaults to ``(m,)`` semantics: each ``m`` is measured at drop
    ``m`` when ``drops`` is None.  Cells run on a bounded thread pool and are
    merged by key, so the table does not depend on completion order.
    """
    grids = tuple(int(g) for g in grids)
    for g in grids:
        if g & (g - 1) or g < 16:
            raise ConfigurationError(f"sweep grids must be powers of two >= 16, got {g}")
    s_list = tuple(float(s) for s in s_list)
    m_list = tuple(int(m) for m in m_list)
    steps = _check_steps(steps if steps is not None else default_steps(fam), fam.eps)
    if drops is None:
        keys = [(g, s, m, m) for g in grids for s in s_list for m in m_list]
        drops_t = tuple(sorted(set(m_list)))
    else:
        drops_t = tuple(int(d) for d in drops)
        keys = list(itertools.product(grids, s_list, m_list, drops_t))
    for m in m_list:
        if m < 0:
            raise ConfigurationError("derivative orders must be nonnegative")
    for _, _, _, d in keys:
        idx.check_drop(d)

    def run(key):
        try:
            return key, _sweep_cell(fam, key, idx, seed, steps, j, target_dim)
        except (ValueError, ArithmeticError):
            return key, None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(run, keys))
    else:
        results = dict(map(run, keys))
    cells = {key: results[key] for key in keys}
    return SweepTable(fam.kind, (idx.k, idx.p), grids, s_list, m_list, drops_t, cells)


# -- norm smoothness ------------------------------------------------------------------


def _rel(x, y, bound):
    """Relative error of two directional derivatives.

    ``bound`` is the Cauchy-Schwarz scale ``||grad|| * ||direction||``; when
    both values are tiny against it (a derivative that vanishes), the error
    is measured against ``bound`` instead of the values themselves.
    """
    scale = max(abs(x), abs(y))
    if scale < 1e-6 * bound:
        scale = bound
    return 0.0 if scale == 0 else abs(x - y) / scale


def _l2(f):
    return math.sqrt(max(inner(f, f), 0.0))


def _directions_for(f, idx, count, seed):
    return [synth_field(idx.k + 4.0, seed * 100 + i, f.grid, f.target_dim) for i in range(count)]


def norm_smoothness_check(f: DiscreteField, idx: SobolevIndex, fam: DiffeoFamily | None = None,
                          directions: int = 20, seed: int = 0, step: float = 1e-4,
                          a=None, tolerance: float = 1e-5) -> ProbeReport:
    """Finite-difference check of ``N_k`` or of ``F_k(a, f) = N_k(f o T_a)``.

    Without a family the analytic derivative ``<grad N_k(f), h>`` is compared
    with a central difference along seeded directions ``h``.  With a family,
    both parameter slots are checked: the ``a``-derivative uses the chain rule
    ``<grad N_k(f o T_a), d_j (f o T_a)>`` and the ``f``-derivative uses
    ``<grad N_k(f o T_a), h o T_a>``.  For ``k = 0`` the change of variables
    ``N_0(f o T_a) = int |f|^p / det(DT_a) o T_a^{-1}`` is also evaluated, and
    for translations the drift of ``F_k`` over sampled ``a`` is recorded.

    The report's ``residuals`` are the relative errors of every directional
    check; ``status`` passes when all are within ``tolerance``.
    """
    idx.require_even()
    if directions < 3:
        raise InsufficientDataError("use at least 3 directions")
    rng = np.random.default_rng([seed, 104729])
    hs = _directions_for(f, idx, directions, seed)
    errors, metrics = [], {}
    if fam is None:
        g = norm_power_gradient(f, idx)
        for h in hs:
            fd = (norm_power(f + h * step, idx) - norm_power(f - h * step, idx)) / (2 * step)
            errors.append(_rel(inner(g, h), fd, _l2(g) * _l2(h)))
        label = "norm-power"
    else:
        a = np.zeros(fam.n) if a is None else fam.check(a)
        if np.linalg.norm(a) + step >= fam.eps:
            raise ValueError("base point too close to the edge of the parameter ball")
        moved = compose(f, fam, a)
        g = norm_power_gradient(moved, idx)
        for j in range(fam.n):
            e = np.zeros(fam.n)
            e[j] = step
            fd = (norm_power(compose(f, fam, a + e), idx)
                  - norm_power(compose(f, fam, a - e), idx)) / (2 * step)
            d = action_partial(f, fam, a, j)
            an = inner(g, d)
            errors.append(_rel(an, fd, _l2(g) * _l2(d)))
            metrics.setdefault("a_slot", []).append((an, fd))
        for h in hs[: max(3, directions // 2)]:
            fd = (norm_power(compose(f + h * step, fam, a), idx)
                  - norm_power(compose(f - h * step, fam, a), idx)) / (2 * step)
            d = compose(h, fam, a)
            an = inner(g, d)
            errors.append(_rel(an, fd, _l2(g) * _l2(d)))
        if idx.k == 0:
            metrics["change_of_variables_gap"] = _change_of_variables_gap(f, fam, a, idx)
        if isinstance(fam, TranslationFamily):
            ref = norm_power(f, idx)
            samples = rng.uniform(-1, 1, size=(8, fam.n)) * (0.9 * fam.eps / math.sqrt(fam.n))
            drift = max(abs(norm_power(compose(f, fam, s), idx) - ref) for s in samples)
            metrics["translation_drift"] = drift / ref if ref else drift
            metrics["a_gradient"] = [an for an, _ in metrics["a_slot"]]
        label = f"composed-norm:{fam.kind}"
    worst = max(errors)
    status = "pass" if worst <= tolerance else "fail"
    return ProbeReport(label, (step,), tuple(errors), math.nan, 0.0, (idx.k, idx.p, 0),
                       f.grid.n, tolerance, status, metrics)


def _change_of_variables_gap(f, fam, a, idx):
    """Relative gap between ``int |f o T_a|^p`` and ``int |f|^p / Jac o T_a^{-1}``."""
    x1, x2 = f.grid.coords()
    p = int(idx.p)
    lhs = norm_power(compose(f, fam, a), idx)
    z1, z2 = fam.inverse(a, x1, x2)
    det = np.linalg.det(fam.jacobian(a, z1, z2))
    dens = np.sum(f.values**2, axis=-1) ** (p // 2) / det
    rhs = float(np.sum(dens) * f.grid.cell_measure)
    return abs(lhs - rhs) / abs(lhs) if lhs else abs(rhs)
