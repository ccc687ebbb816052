import numpy as np
import pytest

from coulomb_limit.geometry import Ball, Box
from coulomb_limit.limit_engine import (
    AssumptionConfig,
    check_assumptions,
    check_subaverage,
    default_corpus,
    evaluate_e_ell,
    fit_inverse_powers,
    fit_power,
    run_general_domains,
    run_simplex_convergence,
    subaverage_chain,
)
from coulomb_limit.models import AdversarialFunctional, ConstantDensity, ScreenedCrystalModel, ZeroFunctional
from coulomb_limit.motion import RigidMotion, interior_boundary_sets, reference_simplex, sample_haar

CRYSTAL = ScreenedCrystalModel()
CENTRE = np.array([0.31, 0.17, 0.43])


def test_fit_inverse_powers_exact():
    x = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    y = 3.0 - 5.0 / x + 7.0 / x**2
    coef, err = fit_inverse_powers(x, y)
    assert np.allclose(coef, [3, -5, 7]) and err < 1e-10
    assert fit_power(x, 2 / x) == pytest.approx(-1.0)


def test_e_ell_small_and_periodic():
    g = sample_haar(1)
    # a small tile away from every lattice site is empty of charge
    assert evaluate_e_ell(CRYSTAL, reference_simplex(), 0.3, RigidMotion.shift([0.5, 0.5, 0.5])) == 0.0
    shifted = RigidMotion(g.translation + [1, -2, 3], g.rotation)
    s = reference_simplex()
    assert evaluate_e_ell(CRYSTAL, s, 6.0, g) == evaluate_e_ell(CRYSTAL, s, 6.0, shifted)


def test_constant_functional_has_no_spread():
    r = run_simplex_convergence(ConstantDensity(2.0), g_samples=20, ell_grid=(2, 4, 8))
    assert np.allclose(r.mean, 2.0) and np.all(r.spread < 1e-12)
    assert r.e_bar == pytest.approx(2.0)


def test_convergence_report_invariants():
    r = run_simplex_convergence(CRYSTAL, g_samples=20, ell_grid=(4, 8, 16), seed=2)
    assert np.all(r.spread >= 0)
    assert np.all((r.minimum <= r.mean) & (r.mean <= r.maximum))
    assert r.values.shape == (3, 20)
    with pytest.raises(ValueError):
        run_simplex_convergence(CRYSTAL, ell_grid=(8, 4))
    with pytest.raises(ValueError):
        run_simplex_convergence(CRYSTAL, g_samples=5)


def test_values_within_one_over_ell_envelope():
    r = run_simplex_convergence(CRYSTAL, g_samples=50, ell_grid=(16, 32), seed=3)
    c16 = np.max(np.abs(r.values[0] - CRYSTAL.e_cell)) * 16
    assert np.all(np.abs(r.values[1] - CRYSTAL.e_cell) <= 1.25 * c16 / 32)


def test_convergence_thread_independence():
    a = run_simplex_convergence(CRYSTAL, g_samples=20, ell_grid=(4, 8), seed=5, threads=1)
    b = run_simplex_convergence(CRYSTAL, g_samples=20, ell_grid=(4, 8), seed=5, threads=3)
    assert np.array_equal(a.values, b.values) and a.e_bar == b.e_bar


def test_subaverage_zero_functional():
    om = Box.cube(6.0, CENTRE)
    s = check_subaverage(ZeroFunctional(), om, None, 2.0, 50)
    assert s.holds and s.lhs == 0.0
    assert s.rhs == pytest.approx(-om.volume() * 0.5)


def test_subaverage_constant_recovers_volume():
    om = Box.cube(5.0, CENTRE)
    s = check_subaverage(ConstantDensity(2.0), om, None, 2.0, 400, seed=4)
    assert abs(s.average - 2.0 * om.volume()) < 4 * s.stderr


def test_subaverage_crystal_and_alpha_monotone():
    om = Box.cube(16.0, CENTRE)
    s1 = check_subaverage(CRYSTAL, om, None, 4.0, 1000, AssumptionConfig(alpha_const=1.0), seed=1)
    s2 = check_subaverage(CRYSTAL, om, None, 4.0, 1000, AssumptionConfig(alpha_const=2.0), seed=1)
    assert s1.holds and s1.margin > 0
    assert s2.margin > s1.margin
    with pytest.raises(ValueError):
        check_subaverage(CRYSTAL, Box.cube(2.0), None, 8.0, 10)


def test_chain_crystal_and_constant():
    c = subaverage_chain(CRYSTAL, None, 32.0, 4.0, samples=100, outer=4)
    assert c.holds and c.margin >= 0
    k = subaverage_chain(ConstantDensity(1.5), None, 16.0, 2.0, samples=20, outer=2)
    assert k.e_L_min == pytest.approx(1.5) and k.avg_e_ell == pytest.approx(1.5)
    assert k.c_fit == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        subaverage_chain(CRYSTAL, None, 16.0, 8.0)


def test_chain_correction_scaling():
    # kappa #boundary / |L S| = O(ell / L)
    big = lambda L: L**3 * reference_simplex().volume()
    corr = {(L, l): interior_boundary_sets(L, l).n_boundary / big(L) for L in (64, 128, 256) for l in (1, 2, 4)}
    assert fit_power([64, 128, 256], [corr[(L, 2)] for L in (64, 128, 256)]) == pytest.approx(-1.0, abs=0.3)
    assert 0.5 <= fit_power([1, 2, 4], [corr[(256, l)] for l in (1, 2, 4)]) <= 1.3


def test_assumptions_crystal_without_subaverage():
    rep = check_assumptions(CRYSTAL, include_a5=False)
    assert rep.passed, rep.failing()
    assert rep.results["A2"].fitted == 0.0


def test_assumptions_adversarial_fails_a2():
    rep = check_assumptions(AdversarialFunctional(), include_a5=False)
    assert "A2" in rep.failing()
    assert rep.results["A2"].witness


def test_non_lattice_translation_not_asserted():
    # the crystal is only Z^3-periodic; A3 tests lattice shifts so it still passes
    d = Box.cube(4.0, CENTRE)
    assert CRYSTAL(d) != CRYSTAL(d.translate(np.array([0.5, 0.0, 0.0])))
    assert check_assumptions(CRYSTAL, [d], include_a5=False).results["A3"].passed


def test_default_corpus_shapes():
    c = default_corpus()
    assert len(c) == 11
    assert np.all(np.diff([d.volume() for d in c[:4]]) > 0)


def test_general_domains_cubes_and_slab():
    cubes = [Box.cube(s, CENTRE) for s in (4, 8, 16, 32)]
    r = run_general_domains(CRYSTAL, cubes, CRYSTAL.e_cell, regularity=False)
    assert r.diameter_ok and not r.flags
    assert abs(r.e_extrapolated - CRYSTAL.e_cell) / CRYSTAL.e_cell <= 0.02
    slabs = [Box(CENTRE - [s / 2, s / 2, 0.5], CENTRE + [s / 2, s / 2, 0.5]) for s in (8, 16, 32)]
    r = run_general_domains(CRYSTAL, slabs, CRYSTAL.e_cell, regularity=False)
    assert not r.diameter_ok and r.flags
    with pytest.raises(ValueError):
        run_general_domains(CRYSTAL, cubes[::-1], CRYSTAL.e_cell)


def test_general_domains_regularity_flags():
    balls = [Ball(CENTRE, r) for r in (4.0, 6.0, 8.0)]
    r = run_general_domains(CRYSTAL, balls, CRYSTAL.e_cell, fisher_samples=20_000, cone_samples=200)
    assert all(r.cone_ok) and np.all(np.isfinite(r.fisher_a))


def test_cube_finite_size_value_is_exact():
    # centre offsets (0.31, 0.17, 0.43): only the second axis has sites within 1/4 of a face,
    # one layer of dipoles per cube, so E/|cube| = e_cell (1 - 1/s) + p / s
    r = run_general_domains(CRYSTAL, [Box.cube(s, CENTRE) for s in (8, 16, 32)], CRYSTAL.e_cell, regularity=False)
    expect = [CRYSTAL.e_cell * (1 - 1 / s) + CRYSTAL.penalty / s for s in (8, 16, 32)]
    assert np.allclose(r.values, expect, rtol=1e-14)
