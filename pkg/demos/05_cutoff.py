"""Orbit-constant cut-off and the global perturbation it defines.

Run: python3 demos/05_cutoff.py
"""
import numpy as np

from sobolev_action import (
    BumpProfile,
    SliceSpec,
    SobolevIndex,
    constant_section,
    global_perturbation,
    make_grid,
    mobius_act,
    random_near_identity,
    random_sphere_field,
    slice_cutoff,
)

grid = make_grid("sphere", 64)
f = random_sphere_field(grid, seed=0, target_dim=4)
spec = SliceSpec.through(f)
idx = SobolevIndex(2, 4)
chi = BumpProfile(1e-4, 1e-2)
section = constant_section(random_sphere_field(grid, seed=5, target_dim=4, degree=2), m=1)
rng = np.random.default_rng(3)

print("beta(f) =", slice_cutoff(f, spec, chi, idx))
for scale in (1e-3, 3e-3, 1e-2):
    k = f + random_sphere_field(grid, seed=9, target_dim=4, degree=2, scale=scale)
    gamma = random_near_identity(rng, 0.02)
    b = slice_cutoff(k, spec, chi, idx)
    b_moved = slice_cutoff(mobius_act(gamma, k), spec, chi, idx)
    lhs = global_perturbation(mobius_act(gamma, k), spec, section, chi, idx)
    rhs = mobius_act(gamma, global_perturbation(k, spec, section, chi, idx))
    print(f"scale {scale:.0e}: beta {b:.6f}, |beta(k o gamma) - beta(k)| {abs(b_moved - b):.1e}, "
          f"equivariance {float(np.max(np.abs(lhs.values - rhs.values))):.1e}")
