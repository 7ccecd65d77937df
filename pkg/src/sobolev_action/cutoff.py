"""Orbit-constant cut-off functions and the global perturbations they define."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import smooth_step
from .errors import ConfigurationError, ProjectionError
from .fields import DiscreteField, SobolevIndex, norm_power
from .mobius import (
    SectionOnSlice,
    SliceProjection,
    SliceSpec,
    equivariant_extension,
    slice_projection,
)


@dataclass(frozen=True)
class BumpProfile:
    """``chi = 1`` on ``[0, r0]``, ``0`` on ``[r1, inf)``, strictly decreasing between.

    All derivatives vanish at both junctions (``exp(-1/x)`` construction).
    """

    r0: float
    r1: float

    def __post_init__(self):
        if not 0 < self.r0 < self.r1:
            raise ConfigurationError(f"need 0 < r0 < r1, got r0={self.r0}, r1={self.r1}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = 1.0 - smooth_step((r - self.r0) / (self.r1 - self.r0))
        return float(out) if out.ndim == 0 else out


def _project(k, spec):
    try:
        return slice_projection(k, spec)
    except ProjectionError:
        return None


def slice_cutoff(k: DiscreteField, spec: SliceSpec, chi: BumpProfile, idx: SobolevIndex,
                 projection: SliceProjection | None = None) -> float:
    """``beta(k) = chi(N(k o T^{-1}(k) - f))``; zero where the projection fails.

    Since ``k`` and ``k o gamma`` project to the same slice point, ``beta`` is
    constant along near-identity orbits.
    """
    idx.require_even()
    proj = _project(k, spec) if projection is None else projection
    if proj is None:
        return 0.0
    return float(chi(norm_power(proj.field - spec.f, idx)))


def global_perturbation(k: DiscreteField, spec: SliceSpec, section: SectionOnSlice,
                        chi: BumpProfile, idx: SobolevIndex) -> DiscreteField:
    """``beta(k) * eta_O(k)``: the cut-off times the equivariant extension.

    Returns the zero field (with the section's target dimension) when
    ``beta(k) = 0``, without evaluating the extension.
    """
    if not section.has_extension:
        raise ConfigurationError("the section carries no extension data")
    proj = _project(k, spec)
    beta = slice_cutoff(k, spec, chi, idx, proj) if proj is not None else 0.0
    if beta == 0.0:
        probe = section(spec.f)
        return probe.with_values(np.zeros_like(probe.values))
    ext = equivariant_extension(section, spec, k, proj)
    return ext if beta == 1.0 else ext * beta
