"""Baxter and tile-averaging inequalities on a few random configurations."""
from coulomb_limit._seeding import rng_for
from coulomb_limit.electrostatics import (
    baxter_check,
    graf_schenker_check,
    random_baxter_configuration,
    random_neutral_configuration,
)
from coulomb_limit.suites import gs_constant_ceiling

for i in range(5):
    e, nuc = random_baxter_configuration(rng_for(0, 5, i), 3, 1e-3)
    lhs, rhs, ok = baxter_check(e, nuc)
    print(f"baxter config {i}: {len(e)} electrons, lhs {lhs:.4f} >= rhs {rhs:.4f}: {ok}")

c = random_neutral_configuration(8, 3.0, rng_for(0, 7, 0))
print(f"\nlarge-ell ceiling of the implied constant: {gs_constant_ceiling():.4f}")
for ell in (2.0, 4.0, 8.0, 16.0):
    r = graf_schenker_check(c, ell, 10_000, 1)
    print(f"ell = {ell:4g}: implied constant {r.row()['implied_constant']:.4f}, holds {r.holds}")
