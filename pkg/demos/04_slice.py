"""Moebius slice projection and the equivariant extension of a constant section.

Run: python3 demos/04_slice.py
"""
import numpy as np

from sobolev_action import (
    SliceSpec,
    constant_section,
    equivariant_extension,
    make_grid,
    mobius_act,
    mobius_from_triple,
    random_near_identity,
    random_sphere_field,
    slice_projection,
)

print("element sending 0, 1, inf to 1j, 2, -1:", mobius_from_triple(1j, 2, -1))

grid = make_grid("sphere", 64)
f = random_sphere_field(grid, seed=0, target_dim=4)
spec = SliceSpec.through(f)
print("slice through f; transversality condition numbers:", np.round(spec.conditions, 3))

gamma = random_near_identity(np.random.default_rng(1), 0.05)
proj = slice_projection(mobius_act(gamma, f), spec)
print(f"T^-1(f o gamma) vs gamma^-1: {proj.element.distance(gamma.inverse()):.2e}, "
      f"Newton iterations {proj.iterations}, slice residuals {max(proj.residuals):.1e}")

section = constant_section(random_sphere_field(grid, seed=5, target_dim=4, degree=2), m=1)
print(f"section witness: Chebyshev tail {section.witness['tail']:.1e}, norm drift under doubling {section.witness['drift']:.1e}")
g2 = random_near_identity(np.random.default_rng(2), 0.02)
k = mobius_act(gamma, f)
lhs = equivariant_extension(section, spec, mobius_act(g2, k))
rhs = mobius_act(g2, equivariant_extension(section, spec, k))
print("equivariance error:", float(np.max(np.abs(lhs.values - rhs.values))))
