import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coulomb_limit.geometry import Ball, Box, sample_uniform
from coulomb_limit.motion import (
    KUHN_BARYCENTER,
    RigidMotion,
    Tiling,
    act,
    act_domain,
    interior_boundary_brute,
    interior_boundary_sets,
    kuhn_simplex,
    quat_to_matrix,
    reach,
    reference_simplex,
    sample_haar,
    sample_haar_batch,
    uniform_quaternions,
    write_boundary_counts,
)
from coulomb_limit._seeding import rng_for

quat = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 4).filter(lambda q: np.linalg.norm(q) > 0.1)


def _unit(q):
    q = np.array(q, dtype=float)
    return q / np.linalg.norm(q)


@settings(max_examples=50, deadline=None)
@given(quat)
def test_rotation_matrix_is_proper_orthogonal(q):
    r = quat_to_matrix(_unit(q))
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(quat, quat, st.tuples(*[st.floats(-5, 5)] * 3))
def test_compose_and_inverse(q1, q2, u):
    g = RigidMotion(np.array(u), _unit(q1))
    h = RigidMotion(-np.array(u)[::-1], _unit(q2))
    x = np.array([[0.3, -1.2, 2.0], [1.0, 0.0, 0.5]])
    assert np.allclose(g.compose(h)(x), g(h(x)))
    assert np.allclose(g.inverse()(g(x)), x)


def test_quaternion_norm_checked():
    with pytest.raises(ValueError):
        RigidMotion(np.zeros(3), np.array([1.0, 0.1, 0, 0]))


def test_haar_moments():
    # Haar on SO(3): E tr R = 0, E (tr R)^2 = 1
    tr = np.trace(quat_to_matrix(uniform_quaternions(200_000, rng_for(0, 99))), axis1=1, axis2=2)
    assert abs(tr.mean()) < 5 * tr.std() / np.sqrt(len(tr))
    assert abs((tr**2).mean() - 1) < 5 * (tr**2).std() / np.sqrt(len(tr))


def test_sample_haar_deterministic():
    a, b = sample_haar(7), sample_haar(7)
    assert np.array_equal(a.translation, b.translation) and np.array_equal(a.rotation, b.rotation)
    assert np.all((a.translation >= 0) & (a.translation < 1))
    u, _ = sample_haar_batch(100, rng_for(1), (np.array([-2.0] * 3), np.array([3.0] * 3)))
    assert u.min() >= -2 and u.max() < 3


def test_act_domain_images():
    g = sample_haar(3)
    rng = np.random.default_rng(0)
    for d in (Box([0, 0, 0], [1, 2, 3]), Ball([1, 0, 0], 0.7), reference_simplex()):
        img = act_domain(g, 2.5, d)
        assert img.volume() == pytest.approx(2.5**3 * d.volume(), rel=1e-10)
        pts = sample_uniform(d, 500, rng)
        assert img.contains(act(g, pts, 2.5)).all()
    with pytest.raises(ValueError):
        act_domain(g, 0.0, Box.cube(1.0))


def test_kuhn_tetrahedra_partition_cube():
    pts = np.random.default_rng(1).random((5000, 3))
    hits = np.array([kuhn_simplex(k).contains(pts) for k in range(6)])
    assert np.all(hits.sum(axis=0) == 1)
    for k in range(6):
        assert kuhn_simplex(k).volume() == pytest.approx(1 / 6)


def test_reference_simplex():
    s = reference_simplex()
    assert np.allclose(s.simplex_vertices.mean(axis=0), 0)
    assert np.allclose(KUHN_BARYCENTER, [0.75, 0.5, 0.25])
    assert reach(s) == pytest.approx(np.sqrt(0.75**2 + 0.5**2 + 0.25**2))


def test_tiling_locate():
    t = Tiling(sample_haar(11), 3.0)
    pts = np.random.default_rng(2).uniform(-10, 10, size=(300, 3))
    z, k = t.locate(pts)
    for p, zi, ki in zip(pts, z, k):
        assert t.tile(zi, ki).contains(p[None])[0]
    # tile (0, 0) is the moved reference simplex
    ref = act_domain(t.motion, 3.0, reference_simplex())
    assert np.allclose(np.sort(t.tile((0, 0, 0), 0).simplex_vertices, axis=0),
                       np.sort(ref.simplex_vertices, axis=0))


@pytest.mark.parametrize("L,ell,seed", [(8, 1, None), (16, 1, None), (16, 2, 4), (20, 4, 5), (12, 1.5, 6)])
def test_interior_boundary_against_brute_force(L, ell, seed):
    g = None if seed is None else sample_haar(seed)
    fast = interior_boundary_sets(L, ell, g)
    assert (fast.n_interior, fast.n_boundary) == interior_boundary_brute(L, ell, g)


def test_interior_boundary_known_values():
    b = interior_boundary_sets(16, 1)
    assert (b.n_interior, b.n_boundary) == (56, 2544)


@pytest.mark.parametrize("L,ell", [(16, 1), (32, 2), (64, 4)])
def test_interior_boundary_cover(L, ell):
    b = interior_boundary_sets(L, ell, sample_haar(L))
    big = L**3 * reference_simplex().volume()
    assert b.n_interior <= big
    assert b.n_interior + b.n_boundary >= big


def test_boundary_counts_reject_bad_scale():
    with pytest.raises(ValueError):
        interior_boundary_sets(4, 8)


def test_boundary_csv(tmp_path):
    rows = [interior_boundary_sets(L, 1) for L in (8, 16)]
    path = tmp_path / "counts.csv"
    write_boundary_counts(rows, path)
    with open(path) as fh:
        recs = list(csv.DictReader(fh))
    assert list(recs[0]) == ["L", "ell", "n_interior", "n_boundary"]
    assert int(recs[1]["n_boundary"]) == rows[1].n_boundary
