"""Numerical laboratory for reparametrization actions on Sobolev mapping spaces.

Fields on the torus and on the two-chart Riemann sphere, parametrized
diffeomorphism families and their composition action, finite-difference
smoothness probes, Moebius slice projections with equivariant extension, and
orbit-constant cut-offs.
"""

__version__ = "0.1.0"

from .cutoff import BumpProfile, global_perturbation, slice_cutoff
from .diffeo import (
    DiffeoFamily,
    GroupParam,
    MobiusBumpFamily,
    PartitionOfUnity,
    ShearBumpFamily,
    TranslationFamily,
    action_higher_partial,
    action_partial,
    builtin_family,
    compose,
    disk_partition,
    jacobian_field,
    partition_assemble,
    partition_localize,
    standard_partition,
    strip_partition,
)
from .errors import (
    ConfigurationError,
    DegenerateTripleError,
    DomainError,
    GridMismatchError,
    InsufficientDataError,
    InvariantViolation,
    NeighborhoodError,
    ProjectionError,
    SobolevIndexError,
    UnsupportedExponentError,
    WitnessError,
)
from .fields import (
    DiscreteField,
    GridSpec,
    SobolevIndex,
    SphereField,
    constant_field,
    integrate,
    lowpass,
    make_grid,
    multilinear_product,
    norm_power,
    norm_power_gradient,
    sobolev_norm,
    spectral_gradient,
    synth_field,
)
from .mobius import (
    MobiusElement,
    SectionOnSlice,
    SliceSpec,
    constant_section,
    equivariant_extension,
    evaluate,
    mobius_act,
    mobius_from_triple,
    random_near_identity,
    slice_projection,
    translation_family_at,
)
from .probe import (
    ProbeReport,
    SweepTable,
    continuity_modulus,
    derivative_check,
    fit_order,
    norm_smoothness_check,
    regularity_sweep,
)
from .sphere import random_sphere_field, resample, sample_function
