"""Energy per volume of the screened crystal on growing domains of three shapes."""
import numpy as np

from coulomb_limit.geometry import Ball, Box
from coulomb_limit.limit_engine import run_general_domains, run_simplex_convergence
from coulomb_limit.models import ScreenedCrystalModel

E = ScreenedCrystalModel()
centre = np.array([0.31, 0.17, 0.43])
print(f"cell energy e_cell = {E.e_cell:g}")

r = run_simplex_convergence(E, ell_grid=(4, 8, 16, 32), g_samples=50, seed=0)
print("\nrandomly moved simplices")
for ell, m, s in zip(r.ells, r.mean, r.spread):
    print(f"  ell = {ell:4g}  mean = {m:9.5f}  spread = {s:.4f}")
print(f"  extrapolated {r.e_bar:.4f} +- {r.e_bar_stderr:.4f}, spread exponent {r.rate_exponent:.3f}")

for name, doms in (("cubes", [Box.cube(s, centre) for s in (4, 8, 16, 32)]),
                   ("balls", [Ball(centre, s) for s in (4, 6, 8, 12, 16)])):
    g = run_general_domains(E, doms, E.e_cell, regularity=False)
    print(f"\n{name}")
    for size, v in zip(g.sizes, g.values):
        print(f"  |D|^(1/3) = {size:7.3f}  E/|D| = {v:9.5f}")
    print(f"  extrapolated {g.e_extrapolated:.4f} +- {g.e_stderr:.4f}")
