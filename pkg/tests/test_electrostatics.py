import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from coulomb_limit._seeding import rng_for
from coulomb_limit.electrostatics import (
    BAXTER_CONSTANT,
    ChargeConfiguration,
    CoincidentChargesError,
    baxter_check,
    coulomb_energy,
    graf_schenker_check,
    lattice_coulomb_potential,
    nearest_nucleus_distance,
    random_baxter_configuration,
    random_neutral_configuration,
    write_reports,
)
from coulomb_limit.motion import reference_simplex


def test_cube_corner_energy():
    # alternating +-1 charges on a unit cube: 12 edges, 12 face and 4 body diagonals
    corners = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=float)
    z = (-1.0) ** corners.sum(axis=1)
    expect = -12 + 12 / np.sqrt(2) - 4 / np.sqrt(3)
    assert coulomb_energy(ChargeConfiguration(corners, z)) == pytest.approx(expect, rel=1e-14)


def test_energy_small_cases():
    assert coulomb_energy(ChargeConfiguration(np.zeros((1, 3)), [2.0])) == 0.0
    c = ChargeConfiguration([[0, 0, 0], [0, 0, 2]], [1, -3])
    assert coulomb_energy(c) == pytest.approx(-1.5)


def test_coincident_charges_named():
    c = ChargeConfiguration([[0, 0, 0], [1, 0, 0], [0, 0, 0]], [1, 1, -1])
    with pytest.raises(CoincidentChargesError, match="particles 0 and 2"):
        coulomb_energy(c)


def test_configuration_text_round_trip():
    c = random_neutral_configuration(6, 2.0, np.random.default_rng(0))
    back = ChargeConfiguration.from_text("# header\n" + c.to_text())
    assert np.array_equal(back.positions, c.positions) and np.array_equal(back.charges, c.charges)
    with pytest.raises(ValueError, match="line 1"):
        ChargeConfiguration.from_text("1 2 3\n")
    with pytest.raises(ValueError):
        ChargeConfiguration(np.zeros((2, 3)), [1.0])


def test_neutral_configuration():
    c = random_neutral_configuration(10, 3.0, np.random.default_rng(1))
    assert c.total_charge == 0 and c.charge_square_sum == 10
    with pytest.raises(ValueError):
        random_neutral_configuration(3, 1.0, np.random.default_rng(1))


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.floats(-20, 20, allow_nan=False)] * 3))
def test_nearest_nucleus_distance(p):
    p = np.array(p)
    base = np.floor(p)
    cand = base + np.array([[i, j, k] for i in (-1, 0, 1, 2) for j in (-1, 0, 1, 2) for k in (-1, 0, 1, 2)])
    assert nearest_nucleus_distance(p) == pytest.approx(np.min(np.linalg.norm(cand - p, axis=1)), abs=1e-12)


def test_lattice_potential_against_direct_sum():
    rng = np.random.default_rng(2)
    e, nuc = random_baxter_configuration(rng, half_width=1, max_electrons=6)
    x = np.vstack([e, nuc])
    z = np.concatenate([-np.ones(len(e)), np.ones(len(nuc))])
    assert lattice_coulomb_potential(e, nuc) == pytest.approx(coulomb_energy(ChargeConfiguration(x, z)))


def test_baxter_single_electron():
    # one electron with the full 7^3 lattice: the bound holds with room
    nuc = np.array([[i, j, k] for i in range(-3, 4) for j in range(-3, 4) for k in range(-3, 4)], dtype=float)
    e = np.array([[0.5, 0.5, 0.5]])
    lhs, rhs, ok = baxter_check(e, nuc)
    assert ok and rhs == pytest.approx(-BAXTER_CONSTANT / np.sqrt(0.75))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_baxter_random(seed):
    e, nuc = random_baxter_configuration(rng_for(seed, 1), half_width=2)
    assert baxter_check(e, nuc)[2]


def test_baxter_electron_on_nucleus():
    with pytest.raises(CoincidentChargesError):
        lattice_coulomb_potential(np.zeros((1, 3)), np.zeros((1, 3)))


def _surface_over_volume(s, ell):
    return ConvexHull(s.simplex_vertices).area / s.volume() / ell


def test_gs_pair_split_probability():
    # 1 - P(both in one tile) = r <S>/(4|ell S|) to first order (Cauchy: mean projection = S/4)
    r, ell = 0.1, 2.0
    c = ChargeConfiguration([[0, 0, 0], [r, 0, 0]], [1, 1])
    rep = graf_schenker_check(c, ell, 200_000, seed=3)
    split = 1 - rep.rhs_mean / rep.lhs
    expect = r * _surface_over_volume(reference_simplex(), ell) / 4
    assert abs(split - expect) < 4 * rep.rhs_stderr / rep.lhs + 0.15 * expect


def test_gs_thread_independence():
    c = random_neutral_configuration(8, 2.0, np.random.default_rng(4))
    a = graf_schenker_check(c, 2.0, 5000, seed=9, threads=1, block=512)
    b = graf_schenker_check(c, 2.0, 5000, seed=9, threads=3, block=512)
    assert a == b


def test_gs_edge_cases():
    one = ChargeConfiguration(np.zeros((1, 3)), [1.0])
    assert graf_schenker_check(one, 2.0, 1000).holds
    c = random_neutral_configuration(4, 1.0, np.random.default_rng(5))
    with pytest.raises(ValueError, match="translation cell"):
        graf_schenker_check(c, 2.0, 1000, cell=(np.zeros(3), np.ones(3)))
    with pytest.raises(ValueError):
        graf_schenker_check(c, 2.0, 10)


def test_gs_holds_for_neutral_configurations():
    for i in range(5):
        c = random_neutral_configuration(10, 3.0, rng_for(6, i))
        for ell in (2.0, 4.0):
            assert graf_schenker_check(c, ell, 10_000, seed=i).holds


def test_report_csv(tmp_path):
    c = random_neutral_configuration(4, 1.0, np.random.default_rng(7))
    rep = graf_schenker_check(c, 2.0, 1000, seed=1)
    path = tmp_path / "gs.csv"
    write_reports([rep], path)
    head, row = path.read_text().splitlines()
    assert head.split(",")[0] == "lhs"
    assert float(row.split(",")[0]) == rep.lhs
