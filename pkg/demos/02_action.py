"""The composition action eta -> eta o T_a and its parameter derivatives.

Run: python3 demos/02_action.py
"""
import numpy as np

from sobolev_action import (
    ShearBumpFamily,
    SobolevIndex,
    action_higher_partial,
    action_partial,
    compose,
    make_grid,
    partition_assemble,
    partition_localize,
    sobolev_norm,
    standard_partition,
    synth_field,
)

grid = make_grid("torus", 64)
fam = ShearBumpFamily(center=(3.0, 3.0), radius=1.0)
eta = synth_field(9.0, seed=0, grid=grid, target_dim=2)
idx = SobolevIndex(3, 4)
a = np.zeros(2)

print(f"shear-bump family: radius 1.0, parameter ball eps = {fam.eps}")
slope = action_partial(eta, fam, a, 0)
for t in (1e-2, 3e-3, 1e-3):
    r = compose(eta, fam, (t, 0.0)) - compose(eta, fam, a) - slope * t
    print(f"t={t:.0e}  first-order Taylor remainder in L_(1,4): {sobolev_norm(r, idx, drop=2):.3e}")

mixed = [action_higher_partial(eta, fam, (0.05, 0.02), (1, 1), order=o) for o in ([0, 1], [1, 0])]
print("mixed partial d0 d1 vs d1 d0, max difference:", float(np.max(np.abs(mixed[0].values - mixed[1].values))))

pou = standard_partition(grid, 4)
pieces = partition_localize(eta, pou)
back = partition_assemble(pieces, pou)
print(f"partition ({pou.description}): localize/assemble round trip error",
      float(np.max(np.abs(back.values - eta.values))))
