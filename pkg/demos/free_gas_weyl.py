"""Dirichlet box free energy against the bulk density, with and without the surface term."""
from coulomb_limit.spectral import ThermoParams, box_free_energy, free_gas_limit_density, weyl_surface_density

p = ThermoParams(1.0, 1.0)
bulk = free_gas_limit_density(p)
print(f"bulk density {bulk:.6f}")
print("   L    F/L^3      rel gap   gap after surface term   (gap) L^2")
for L in (6, 12, 24, 48):
    f = box_free_energy(L, p) / L**3
    res = f - bulk - weyl_surface_density(L, p)
    print(f"{L:4d}  {f:.6f}  {abs(f - bulk) / abs(bulk):8.2%}  {res:22.3e}  {res * L * L:10.3f}")
