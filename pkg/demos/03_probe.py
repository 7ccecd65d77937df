"""Finite-difference probes: derivative order and the loss-of-derivatives sweep.

Run: python3 demos/03_probe.py
"""
import numpy as np

from sobolev_action import SobolevIndex, TranslationFamily, derivative_check, make_grid, regularity_sweep, synth_field

fam = TranslationFamily()
eta = synth_field(9.0, seed=0, grid=make_grid("torus", 128), target_dim=2)
rep = derivative_check(fam, eta, np.zeros(2), 0, SobolevIndex(3, 4), drop=2, steps=[1e-2, 3e-3, 1e-3])
print(rep.summary())

# smooth (s = 7) against rough (s = 4.25) fields, first difference quotient, p = 2, k = 3
table = regularity_sweep(fam, s_list=[7.0, 4.25], m_list=[1], grids=[64, 128, 256], seed=0,
                         idx=SobolevIndex(3, 2), drops=[1, 0], steps=[0.3, 0.1, 0.03], threads=2)
print(f"{'N':>5} {'s':>5}  order in L_(k-1)  order in L_k")
for n in table.grids:
    for s in table.s_list:
        lo = table.cell(n, s, 1, 1)["consistency"]
        hi = table.cell(n, s, 1, 0)["consistency"]
        print(f"{n:5d} {s:5.2f}  {lo:16.3f}  {hi:12.3f}")
