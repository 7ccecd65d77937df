"""Experiment configuration, verification suites and report emission.

A configuration file holds one ``key = value`` pair per line; values are
JSON (numbers, lists, objects, quoted strings); lines starting with ``#``
are comments.
Unknown keys are rejected.  Every suite returns a list of :class:`Row`;
:func:`emit_report` writes them as CSV plus a JSON summary.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cutoff import BumpProfile, global_perturbation, slice_cutoff
from .diffeo import (
    action_higher_partial,
    builtin_family,
    compose,
    partition_assemble,
    partition_localize,
    standard_partition,
)
from .errors import ConfigurationError, SobolevIndexError
from .fields import (
    DiscreteField,
    SobolevIndex,
    constant_field,
    make_grid,
    multilinear_product,
    norm_power,
    sobolev_norm,
    synth_field,
)
from .mobius import (
    MobiusElement,
    SliceSpec,
    constant_section,
    equivariant_extension,
    evaluate,
    mobius_act,
    random_near_identity,
    slice_projection,
    translation_family_at,
)
from .probe import derivative_check, norm_smoothness_check, regularity_sweep
from .sphere import random_sphere_field, sample_function

SCHEMA_VERSION = 1
GENERATOR = "numpy PCG64"
CSV_COLUMNS = ("suite", "cell", "grid", "k", "p", "m", "s", "metric", "value", "threshold", "pass")
ENV_OUT = "SOBOLEV_ACTION_OUT"
ENV_THREADS = "SOBOLEV_ACTION_THREADS"
INEQUALITY_SAMPLES = 1000


@dataclass
class ExperimentConfig:
    """All knobs of a run.  Defaults reproduce the acceptance settings."""

    suite: str = ""
    seed: int = 0
    out: str = "results"
    threads: int = 1
    grids: list = field(default_factory=lambda: [64, 128])
    sphere_grid: int = 64
    norm_indices: list = field(default_factory=lambda: [[0, 2], [1, 2], [2, 2], [0, 4], [1, 4], [2, 4]])
    directions: int = 20
    fd_step: float = 1e-4
    action_index: list = field(default_factory=lambda: [3, 4])
    families: list = field(default_factory=lambda: ["translation", "shear-bump"])
    family_params: dict = field(default_factory=lambda: {
        "shear-bump": {"center": [3.0, 3.0], "radius": 1.0},
        "mobius-pushforward": {"center": [3.0, 3.0], "radius": 1.0, "eps": 0.05},
    })
    action_steps: list = field(default_factory=lambda: [1e-2, 3e-3, 1e-3])
    smooth_offset: float = 6.0
    partitions: list = field(default_factory=lambda: [2, 4])
    sweep_index: list = field(default_factory=lambda: [3, 2])
    sweep_grids: list = field(default_factory=lambda: [64, 128, 256])
    s_list: list = field(default_factory=lambda: [7.0, 4.25])
    m_list: list = field(default_factory=lambda: [1])
    drops: list = field(default_factory=lambda: [1, 0])
    sweep_steps: list = field(default_factory=lambda: [0.3, 0.1, 0.03])
    cases: int = 20
    slice_cases: int = 50
    gamma_radius: float = 0.05
    target_dim: int = 4
    cutoff_index: list = field(default_factory=lambda: [2, 4])
    tolerances: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.suite and self.suite not in SUITES:
            raise ConfigurationError(f"unknown suite {self.suite!r}; see list-suites")
        for g in list(self.grids) + list(self.sweep_grids) + [self.sphere_grid]:
            if not isinstance(g, int) or g < 16 or g & (g - 1):
                raise ConfigurationError(f"grid sizes must be powers of two >= 16, got {g!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigurationError("threads must be a positive integer")
        for kp in list(self.norm_indices) + [self.action_index, self.sweep_index, self.cutoff_index]:
            if not (isinstance(kp, (list, tuple)) and len(kp) == 2):
                raise ConfigurationError(f"indices are [k, p] pairs, got {kp!r}")
            try:
                idx = SobolevIndex(kp[0], float(kp[1]))
            except (SobolevIndexError, TypeError, ValueError) as exc:
                raise ConfigurationError(f"bad index {kp!r}: {exc}") from None
            if not idx.even_p:
                raise ConfigurationError(f"suites need an even exponent p, got {kp!r}")
        for kind in self.families:
            if kind not in ("translation", "shear-bump", "mobius-pushforward"):
                raise ConfigurationError(f"unknown family {kind!r}")
        unknown = set(self.tolerances) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise ConfigurationError(f"unknown tolerance keys: {sorted(unknown)}")
        if self.cases < 1 or self.slice_cases < 1 or self.directions < 3:
            raise ConfigurationError("cases and slice_cases must be >= 1 and directions >= 3")
        if self.gamma_radius < 0 or self.gamma_radius > 0.1:
            raise ConfigurationError("gamma_radius must lie in [0, 0.1]")
        return self

    def threshold(self, metric: str) -> float:
        return float(self.tolerances.get(metric, DEFAULT_THRESHOLDS[metric]))

    def family(self, kind: str):
        return builtin_family(kind, **self.family_params.get(kind, {}))


DEFAULT_THRESHOLDS = {
    "closed_form_rel_error": 1e-10,
    "gradient_rel_error": 1e-5,
    "composed_rel_error": 1e-5,
    "translation_drift": 1e-10,
    "holder_slack": 0.0,
    "convexity_slack": 0.0,
    "taylor_order": 1.8,
    "mixed_symmetry": 1e-8,
    "partition_roundtrip": 1e-12,
    "fd_order": 0.9,
    "order_gap": 0.4,
    "coef_error": 1e-8,
    "newton_iterations": 12,
    "slice_residual": 1e-9,
    "idempotence": 1e-10,
    "equivariance_error": 1e-6,
    "slice_restriction": 0.0,
    "orbit_constancy": 1e-8,
    "cutoff_exact": 0.0,
    "perturbation_equivariance": 1e-6,
    "eval_identity": 1e-8,
    "eval_closed_form": 1e-10,
}


def _parse_value(key, text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise ConfigurationError(f"value of {key!r} is not valid JSON: {text!r}") from None


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines over ``base`` (defaults when omitted)."""
    cfg = ExperimentConfig() if base is None else ExperimentConfig(**asdict(base))
    known = {f.name for f in fields(ExperimentConfig)}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        parsed = _parse_value(key, value)
        default = getattr(ExperimentConfig(), key)
        if type(parsed) is not type(default):
            if isinstance(default, float) and isinstance(parsed, int):
                parsed = float(parsed)
            else:
                raise ConfigurationError(
                    f"line {lineno}: {key!r} expects {type(default).__name__}, got {type(parsed).__name__}")
        setattr(cfg, key, parsed)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def default_config_text() -> str:
    """The defaults in config-file syntax."""
    cfg = ExperimentConfig()
    lines = ["# sobolev-action experiment configuration (values are JSON)"]
    for f in fields(cfg):
        if f.name == "suite":
            continue
        lines.append(f"{f.name} = {json.dumps(getattr(cfg, f.name), sort_keys=True)}")
    return "\n".join(lines) + "\n"


# -- rows ----------------------------------------------------------------------


@dataclass
class Row:
    suite: str
    cell: str
    metric: str
    value: float
    threshold: float | None = None
    passed: bool | None = None
    grid: int | None = None
    k: int | None = None
    p: float | None = None
    m: int | None = None
    s: float | None = None

    def csv_fields(self):
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, bool):
                return "true" if x else "false"
            if isinstance(x, (int, np.integer)):
                return str(int(x))
            x = float(x)
            if math.isnan(x):
                return "nan"
            return format(x, ".12g")
        return [self.suite, self.cell, fmt(self.grid), fmt(self.k), fmt(self.p), fmt(self.m),
                fmt(self.s), self.metric, fmt(self.value), fmt(self.threshold), fmt(self.passed)]


def _at_most(suite, cell, metric, value, limit, **kw):
    return Row(suite, cell, metric, float(value), limit, bool(value <= limit), **kw)


def _at_least(suite, cell, metric, value, limit, **kw):
    return Row(suite, cell, metric, float(value), limit, bool(value >= limit), **kw)


def _idx(pair):
    return SobolevIndex(int(pair[0]), float(pair[1]))


# -- suites --------------------------------------------------------------------


def suite_norm(cfg: ExperimentConfig) -> list[Row]:
    rows = []
    name = "norm"
    n = cfg.grids[0]
    grid = make_grid("torus", n)
    x1, _ = grid.coords()
    sin1 = DiscreteField(grid, np.sin(x1))
    tol = cfg.threshold("closed_form_rel_error")
    closed = [
        ("const_k2p2", sobolev_norm(constant_field(grid, [1.5]), SobolevIndex(2, 2)),
         math.sqrt(1.5**2 * 4 * math.pi**2), 2, 2),
        ("sin_k1p2", sobolev_norm(sin1, SobolevIndex(1, 2)), 2 * math.pi, 1, 2),
        ("sin_k0p2", sobolev_norm(sin1, SobolevIndex(0, 2)), math.sqrt(2) * math.pi, 0, 2),
        ("power_one_k0p4", norm_power(constant_field(grid, [1.0]), SobolevIndex(0, 4)), 4 * math.pi**2, 0, 4),
        ("power_sin_k0p2", norm_power(sin1, SobolevIndex(0, 2)), 2 * math.pi**2, 0, 2),
        ("power_sin_k0p4", norm_power(sin1, SobolevIndex(0, 4)), 1.5 * math.pi**2, 0, 4),
    ]
    for cell, got, want, k, p in closed:
        rows.append(_at_most(name, cell, "closed_form_rel_error", abs(got - want) / want, tol,
                             grid=n, k=k, p=p))
    gtol = cfg.threshold("gradient_rel_error")
    for pair in cfg.norm_indices:
        idx = _idx(pair)
        if not idx.even_p:
            continue
        f = synth_field(idx.k + 4.0, cfg.seed, grid, 2)
        rep = norm_smoothness_check(f, idx, None, cfg.directions, cfg.seed, cfg.fd_step, tolerance=gtol)
        for i, err in enumerate(rep.residuals):
            rows.append(_at_most(name, f"gradient:dir{i}", "gradient_rel_error", err, gtol,
                                 grid=n, k=idx.k, p=idx.p, s=idx.k + 4.0))
        for kind in cfg.families:
            fam = cfg.family(kind)
            a = np.full(fam.n, 0.3 * fam.eps / math.sqrt(fam.n))
            rep = norm_smoothness_check(f, idx, fam, max(3, cfg.directions // 4), cfg.seed,
                                        cfg.fd_step, a=a, tolerance=cfg.threshold("composed_rel_error"))
            rows.append(_at_most(name, f"composed:{kind}", "composed_rel_error", max(rep.residuals),
                                 cfg.threshold("composed_rel_error"), grid=n, k=idx.k, p=idx.p))
            if "translation_drift" in rep.metrics:
                rows.append(_at_most(name, f"composed:{kind}", "translation_drift",
                                     rep.metrics["translation_drift"], cfg.threshold("translation_drift"),
                                     grid=n, k=idx.k, p=idx.p))
            if "change_of_variables_gap" in rep.metrics:
                rows.append(Row(name, f"composed:{kind}", "change_of_variables_gap",
                                rep.metrics["change_of_variables_gap"], grid=n, k=idx.k, p=idx.p))
    rows += _inequality_rows(cfg, name, grid)
    return rows


def _inequality_rows(cfg, name, grid):
    rng = np.random.default_rng([cfg.seed, 11])
    rows = []
    worst = -math.inf
    for trial in range(INEQUALITY_SAMPLES):
        p = 2 * int(rng.integers(1, 3))
        fs = [DiscreteField(grid, rng.normal(size=grid.shape + (2,)) * rng.uniform(0.1, 3)) for _ in range(p)]
        lhs = float(np.sum(np.abs(multilinear_product(*fs).values)) * grid.cell_measure)
        rhs = math.prod(sobolev_norm(f, SobolevIndex(0, p)) for f in fs)
        worst = max(worst, (lhs - rhs) / rhs)
    rows.append(_at_most(name, "holder", "holder_slack", worst, cfg.threshold("holder_slack"), grid=grid.n))
    worst = -math.inf
    for trial in range(INEQUALITY_SAMPLES):
        p = (2, 4)[trial % 2]
        nt = int(rng.integers(4, 33))
        dt = 1.0 / nt
        vals = rng.normal(size=(16, nt)) * rng.uniform(0.1, 3)
        lhs = (np.sum(np.abs(vals), axis=1) * dt) ** p
        rhs = np.sum(np.abs(vals) ** p, axis=1) * dt
        worst = max(worst, float(np.max(lhs - rhs)))
    rows.append(_at_most(name, "convexity", "convexity_slack", worst, cfg.threshold("convexity_slack")))
    return rows


def suite_action_derivative(cfg: ExperimentConfig) -> list[Row]:
    name = "action-derivative"
    rows = []
    idx = _idx(cfg.action_index)
    s = idx.k + cfg.smooth_offset
    for kind in cfg.families:
        fam = cfg.family(kind)
        steps = [t * min(1.0, fam.eps) for t in cfg.action_steps]
        for n in cfg.grids:
            grid = make_grid("torus", n)
            eta = synth_field(s, cfg.seed, grid, 2)
            a = np.zeros(fam.n)
            for j in range(fam.n):
                rep = derivative_check(fam, eta, a, j, idx, drop=2, steps=steps,
                                       threshold=cfg.threshold("taylor_order"))
                rows.append(_at_least(name, f"{kind}:d{j}", "taylor_order", rep.order,
                                      cfg.threshold("taylor_order"), grid=n, k=idx.k, p=idx.p, m=1, s=s))
            if fam.n >= 2:
                alpha = [1, 1] + [0] * (fam.n - 2)
                a1 = action_higher_partial(eta, fam, a, alpha, order=[0, 1])
                a2 = action_higher_partial(eta, fam, a, alpha, order=[1, 0])
                err = sobolev_norm(a1 - a2, idx, 2)
                rows.append(_at_most(name, f"{kind}:d01", "mixed_symmetry", err,
                                     cfg.threshold("mixed_symmetry"), grid=n, k=idx.k, p=idx.p, m=2, s=s))
    for n in cfg.grids:
        grid = make_grid("torus", n)
        xi = synth_field(3.0, cfg.seed, grid, 3)
        for count in cfg.partitions:
            pou = standard_partition(grid, int(count))
            back = partition_assemble(partition_localize(xi, pou), pou)
            err = float(np.max(np.abs(back.values - xi.values)))
            rows.append(_at_most(name, f"partition:l{count}", "partition_roundtrip", err,
                                 cfg.threshold("partition_roundtrip"), grid=n))
    return rows


def suite_loss_of_derivatives(cfg: ExperimentConfig) -> list[Row]:
    name = "loss-of-derivatives"
    idx = _idx(cfg.sweep_index)
    fam = builtin_family("translation")
    table = regularity_sweep(fam, cfg.s_list, cfg.m_list, cfg.sweep_grids, cfg.seed, idx,
                             drops=cfg.drops, steps=cfg.sweep_steps, threads=cfg.threads)
    rows = []
    smooth = max(table.s_list)
    rough = min(table.s_list)
    fd = cfg.threshold("fd_order")
    for key in table.keys():
        n, s, m, d = key
        cell = table.cells[key]
        label = f"N{n}:s{s:g}:m{m}:drop{d}"
        if cell is None:
            rows.append(Row(name, label, "fd_order", math.nan, None, False, grid=n, k=idx.k, p=idx.p, m=m, s=s))
            continue
        value = cell["consistency"]
        if s == smooth and d >= m and cell["resolved"]:
            rows.append(_at_least(name, label, "fd_order", value, fd, grid=n, k=idx.k, p=idx.p, m=m, s=s))
        elif s == smooth and d >= m:
            rows.append(Row(name, label, "fd_order", value, fd, False, grid=n, k=idx.k, p=idx.p, m=m, s=s))
        else:
            rows.append(Row(name, label, "fd_order", value, grid=n, k=idx.k, p=idx.p, m=m, s=s))
    if rough != smooth:
        n = max(table.grids)
        for m in table.m_list:
            lowered = [d for d in table.drops if d >= m]
            full = [d for d in table.drops if d < m]
            if not lowered or not full:
                continue
            hi = table.cells[(n, rough, m, min(lowered))]
            lo = table.cells[(n, rough, m, max(full))]
            if hi is None or lo is None:
                continue
            gap = hi["consistency"] - lo["consistency"]
            rows.append(_at_least(name, f"N{n}:s{rough:g}:m{m}:gap", "order_gap", gap,
                                  cfg.threshold("order_gap"), grid=n, k=idx.k, p=idx.p, m=m, s=rough))
    return rows


def _sphere_setup(cfg):
    grid = make_grid("sphere", cfg.sphere_grid)
    f = random_sphere_field(grid, cfg.seed, cfg.target_dim)
    return grid, f, SliceSpec.through(f)


def _gammas(cfg, stream, count):
    rng = np.random.default_rng([cfg.seed, stream])
    if cfg.gamma_radius == 0:
        return [MobiusElement.identity() for _ in range(count)]
    return [random_near_identity(rng, cfg.gamma_radius) for _ in range(count)]


def suite_slice_roundtrip(cfg: ExperimentConfig) -> list[Row]:
    name = "slice-roundtrip"
    grid, f, spec = _sphere_setup(cfg)
    rows = []
    n = grid.n
    for i, g in enumerate(_gammas(cfg, 21, cfg.slice_cases)):
        k = mobius_act(g, f)
        proj = slice_projection(k, spec)
        cell = f"case{i}"
        rows.append(_at_most(name, cell, "coef_error", proj.element.distance(g.inverse()),
                             cfg.threshold("coef_error"), grid=n))
        rows.append(_at_most(name, cell, "newton_iterations", max(proj.iterations),
                             cfg.threshold("newton_iterations"), grid=n))
        rows.append(_at_most(name, cell, "slice_residual", float(spec.residuals(proj.field).max()),
                             cfg.threshold("slice_residual"), grid=n))
        again = slice_projection(proj.field, spec)
        rows.append(_at_most(name, cell, "idempotence", again.element.distance(),
                             cfg.threshold("idempotence"), grid=n))
    return rows


def _perturbed_centers(cfg, spec, stream, count, reach=0.03):
    """Seeded off-slice perturbations of the center, scaled so the marked
    points move by at most ``reach`` in chart coordinates."""
    f = spec.f
    out = []
    for i in range(count):
        h = random_sphere_field(f.grid, cfg.seed * 1000 + stream * 100 + i, cfg.target_dim)
        offset = float(spec.newton_offsets(f + h * 1e-6).max()) * 1e6
        out.append(f + h * (reach / offset))
    return out


def suite_equivariance(cfg: ExperimentConfig) -> list[Row]:
    name = "equivariance"
    grid, f, spec = _sphere_setup(cfg)
    xi0 = random_sphere_field(grid, cfg.seed + 1, 3, degree=2)
    section = constant_section(xi0, 1)
    rows = []
    tol = cfg.threshold("equivariance_error")
    for i, (k, g) in enumerate(zip(_perturbed_centers(cfg, spec, 3, cfg.slice_cases),
                                           _gammas(cfg, 31, cfg.slice_cases))):
        lhs = equivariant_extension(section, spec, mobius_act(g, k))
        rhs = mobius_act(g, equivariant_extension(section, spec, k))
        rows.append(_at_most(name, f"case{i}", "equivariance_error",
                             float(np.max(np.abs(lhs.values - rhs.values))), tol, grid=grid.n))
    on_slice = _on_slice_member(grid, f, 0.3, cfg.seed)
    out = equivariant_extension(section, spec, on_slice)
    rows.append(_at_most(name, "slice-member", "slice_restriction",
                         float(np.max(np.abs(out.values - section(on_slice).values))),
                         cfg.threshold("slice_restriction"), grid=grid.n))
    return rows


def _on_slice_member(grid, f, scale, seed):
    """``f + scale * Y * v``: Y vanishes at 0, 1 and infinity, so this stays on the slice."""
    v = np.random.default_rng([seed, 41]).normal(size=f.target_dim)
    return f + sample_function(grid, lambda x, y, z: scale * y[..., None] * v)


def suite_cutoff(cfg: ExperimentConfig) -> list[Row]:
    name = "cutoff"
    grid, f, spec = _sphere_setup(cfg)
    idx = _idx(cfg.cutoff_index)
    n = grid.n
    rows = []
    centers = _perturbed_centers(cfg, spec, 5, cfg.cases)
    dists = [norm_power(slice_projection(k, spec).field - f, idx) for k in centers]
    chi = BumpProfile(0.5 * float(np.median(dists)), 4.0 * float(max(dists)))
    exact = cfg.threshold("cutoff_exact")
    rows.append(_at_most(name, "center", "cutoff_exact", abs(slice_cutoff(f, spec, chi, idx) - 1.0), exact, grid=n))
    far = _on_slice_member(grid, f, 1.0, cfg.seed)
    while norm_power(far - f, idx) < chi.r1:
        far = far + (far - f)
    rows.append(_at_most(name, "far-slice-member", "cutoff_exact", abs(slice_cutoff(far, spec, chi, idx)), exact, grid=n))
    xi0 = random_sphere_field(grid, cfg.seed + 1, 3, degree=2)
    section = constant_section(xi0, 1)
    at_center = global_perturbation(f, spec, section, chi, idx)
    rows.append(_at_most(name, "center", "cutoff_exact", float(np.max(np.abs(at_center.values - xi0.values))),
                         exact, grid=n))
    gammas = _gammas(cfg, 51, cfg.cases)
    for i, (k, g) in enumerate(zip(centers, gammas)):
        beta = slice_cutoff(k, spec, chi, idx)
        moved = slice_cutoff(mobius_act(g, k), spec, chi, idx)
        rows.append(_at_most(name, f"case{i}", "orbit_constancy", abs(moved - beta),
                             cfg.threshold("orbit_constancy"), grid=n))
        rows.append(Row(name, f"case{i}", "beta", beta, None, bool(0.0 <= beta <= 1.0), grid=n))
        lhs = global_perturbation(mobius_act(g, k), spec, section, chi, idx)
        rhs = mobius_act(g, global_perturbation(k, spec, section, chi, idx))
        rows.append(_at_most(name, f"case{i}", "perturbation_equivariance",
                             float(np.max(np.abs(lhs.values - rhs.values))),
                             cfg.threshold("perturbation_equivariance"), grid=n))
    return rows


def suite_eval_map(cfg: ExperimentConfig) -> list[Row]:
    name = "eval-map"
    n = cfg.grids[0]
    grid = make_grid("torus", n)
    x1, _ = grid.coords()
    rows = []
    sin1 = DiscreteField(grid, np.sin(x1))
    rows.append(_at_most(name, "sin", "eval_closed_form", abs(evaluate(sin1, (math.pi / 2, 0.0))[0] - 1.0),
                         cfg.threshold("eval_closed_form"), grid=n))
    rng = np.random.default_rng([cfg.seed, 61])
    g = synth_field(6.0, cfg.seed, grid, 3)
    r = 1.0
    for i in range(cfg.cases):
        node = rng.integers(0, n, size=2)
        x0 = 2 * math.pi * node / n
        fam = translation_family_at(x0, r)
        a = rng.normal(size=2)
        a *= rng.uniform(0.05, 0.95) * fam.eps / np.linalg.norm(a)
        lhs = compose(g, fam, a).values[node[0], node[1]]
        rhs = evaluate(g, x0 + a)
        rows.append(_at_most(name, f"case{i}", "eval_identity", float(np.max(np.abs(lhs - rhs))),
                             cfg.threshold("eval_identity"), grid=n))
    return rows


SUITES = {
    "norm": (suite_norm, "closed-form norms, norm-power gradients, composed norms, Hoelder and convexity"),
    "action-derivative": (suite_action_derivative, "Taylor order of the action, mixed partials, partitions"),
    "loss-of-derivatives": (suite_loss_of_derivatives, "refinement sweep of difference-quotient orders"),
    "slice-roundtrip": (suite_slice_roundtrip, "Newton slice projection recovers the inverse element"),
    "equivariance": (suite_equivariance, "equivariant extension commutes with reparametrization"),
    "cutoff": (suite_cutoff, "orbit-constant cut-off and global perturbations"),
    "eval-map": (suite_eval_map, "evaluation through the local translation family"),
}


def run_suite(cfg: ExperimentConfig) -> list[Row]:
    cfg.validate()
    if not cfg.suite:
        raise ConfigurationError("no suite selected")
    return SUITES[cfg.suite][0](cfg)


# -- reports --------------------------------------------------------------------


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def summary(rows, cfg: ExperimentConfig) -> dict:
    checks = [r for r in rows if r.passed is not None]
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": cfg.suite,
        "counts": {
            "rows": len(rows),
            "checks": len(checks),
            "passed": sum(r.passed for r in checks),
            "failed": sum(not r.passed for r in checks),
            "informational": len(rows) - len(checks),
        },
        "config": {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "out"},
        "generator": GENERATOR,
        "versions": {
            "sobolev_action": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }


_PLOT_SCRIPT = '''"""Plot {suite} results: python {suite}_plot.py (needs matplotlib)."""
import csv
import matplotlib.pyplot as plt

with open("{suite}.csv") as fh:
    rows = [r for r in csv.DictReader(fh) if r["value"] not in ("", "nan")]
metrics = sorted({{r["metric"] for r in rows}})
fig, axes = plt.subplots(len(metrics), 1, figsize=(8, 2.5 * len(metrics)), squeeze=False)
for ax, metric in zip(axes[:, 0], metrics):
    sel = [r for r in rows if r["metric"] == metric]
    ax.plot(range(len(sel)), [float(r["value"]) for r in sel], "o")
    if sel[0]["threshold"]:
        ax.axhline(float(sel[0]["threshold"]), color="k", lw=0.8)
    ax.set_title(metric)
fig.tight_layout()
fig.savefig("{suite}.png")
'''


def check_writable(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out, prefix=".probe-"):
            pass
    except OSError as exc:
        raise ConfigurationError(f"output directory {out} is not writable: {exc}") from None
    return out


def emit_report(rows, cfg: ExperimentConfig, plot_script: bool = False) -> list[Path]:
    """Write ``<suite>.csv`` and ``<suite>.json`` atomically into ``cfg.out``."""
    out = check_writable(cfg.out)
    payload = {
        f"{cfg.suite}.csv": rows_to_csv(rows),
        f"{cfg.suite}.json": json.dumps(summary(rows, cfg), indent=2, sort_keys=True) + "\n",
    }
    if plot_script:
        payload[f"{cfg.suite}_plot.py"] = _PLOT_SCRIPT.format(suite=cfg.suite)
    staged = []
    try:
        for fname, text in payload.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{fname}.")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out / fname))
        for tmp, final in staged:
            os.replace(tmp, final)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise ConfigurationError(f"could not write reports: {exc}") from None
    return [final for _, final in staged]
