"""Sizes of the interior and boundary lattice sets of a dilated simplex."""
from coulomb_limit.motion import interior_boundary_sets, reference_simplex

vol = reference_simplex().volume()
print("   L  ell  #interior  #boundary  #boundary/(L^2 ell)  1 - #interior/|L S|")
for L in (16, 32, 64, 128):
    for ell in (1, 2, 4):
        s = interior_boundary_sets(L, ell)
        print(f"{L:4d} {ell:4d} {s.n_interior:10d} {s.n_boundary:10d} {s.n_boundary / (L * L * ell):20.3f}"
              f" {1 - s.n_interior / (L**3 * vol):20.4f}")
