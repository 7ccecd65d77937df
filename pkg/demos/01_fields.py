"""Sobolev norms of torus fields and the gradient of the p-th power.

Run: python3 demos/01_fields.py
"""
import math

import numpy as np

from sobolev_action import DiscreteField, SobolevIndex, make_grid, norm_power, norm_power_gradient, sobolev_norm, synth_field
from sobolev_action.fields import inner

grid = make_grid("torus", 64)
x1, _ = grid.coords()
f = DiscreteField(grid, np.sin(x1))

print("||sin x1||_(1,2)      =", sobolev_norm(f, SobolevIndex(1, 2)), " closed form 2 pi =", 2 * math.pi)
print("N_(0,4)(sin x1)       =", norm_power(f, SobolevIndex(0, 4)), " closed form 3 pi^2 / 2 =", 1.5 * math.pi**2)

# smoothness of N_k: compare the analytic gradient with a central difference
idx = SobolevIndex(2, 4)
g = synth_field(6.0, seed=1, grid=grid, target_dim=2)
h = synth_field(6.0, seed=2, grid=grid, target_dim=2)
t = 1e-4
fd = (norm_power(g + h * t, idx) - norm_power(g - h * t, idx)) / (2 * t)
an = inner(norm_power_gradient(g, idx), h)
print(f"dN_(2,4)(g)[h]: analytic {an:.10g}, central difference {fd:.10g}, rel gap {abs(an - fd) / abs(an):.1e}")

# refinement: a field with s = k + 1 - 1/4 has a growing L_(k+1) norm
for n in (64, 128, 256):
    rough = synth_field(2.75, seed=3, grid=make_grid("torus", n))
    print(f"N={n:4d}  ||rough||_(2,2) = {sobolev_norm(rough, SobolevIndex(2, 2)):.6f}"
          f"  ||rough||_(3,2) = {sobolev_norm(rough, SobolevIndex(3, 2)):.3f}")
