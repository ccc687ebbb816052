"""Rigid motions of R^3, Haar sampling, and the Kuhn simplex tiling."""
import csv
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from ._seeding import rng_for
from .geometry import Ball, Box, Polytope, Simplex

PERMUTATIONS = tuple(permutations(range(3)))


def quat_to_matrix(q):
    """Rotation matrix of a unit quaternion ``(w, x, y, z)``; broadcasts."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    m = np.stack(
        [
            1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
            2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
        ],
        axis=-1,
    )
    return m.reshape(q.shape[:-1] + (3, 3))


def quat_mul(p, q):
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ])


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """``x -> R x + u`` with R stored as a unit quaternion ``(w, x, y, z)``."""

    translation: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.translation, dtype=float).reshape(3)
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"rotation quaternion must have unit norm, got {n!r}")
        object.__setattr__(self, "translation", u)
        object.__setattr__(self, "rotation", q)

    @classmethod
    def identity(cls):
        return cls(np.zeros(3), np.array([1.0, 0, 0, 0]))

    @classmethod
    def shift(cls, u):
        return cls(u, np.array([1.0, 0, 0, 0]))

    @property
    def matrix(self):
        return quat_to_matrix(self.rotation)

    def __call__(self, x, ell=1.0):
        return act(self, x, ell)

    def compose(self, other):
        """``self o other``."""
        q = quat_mul(self.rotation, other.rotation)
        q /= np.linalg.norm(q)
        return RigidMotion(self.matrix @ other.translation + self.translation, q)

    def inverse(self):
        qi = self.rotation * np.array([1.0, -1, -1, -1])
        return RigidMotion(-(self.matrix.T @ self.translation), qi)

    def __repr__(self):
        return f"RigidMotion(u={self.translation.tolist()}, q={self.rotation.tolist()})"


def uniform_quaternions(n, rng):
    """Haar-distributed rotations: normalised 4D Gaussians."""
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1)[:, None]


def sample_haar(seed, cell=None):
    """One motion with translation uniform on ``cell`` (default ``[0,1)^3``)
    and rotation uniform on SO(3)."""
    rng = rng_for(seed, 3)
    u, q = sample_haar_batch(1, rng, cell)
    return RigidMotion(u[0], q[0])


def sample_haar_batch(n, rng, cell=None):
    lo, hi = (np.zeros(3), np.ones(3)) if cell is None else map(np.asarray, cell)
    u = lo + (hi - lo) * rng.random((n, 3))
    return u, uniform_quaternions(n, rng)


def act(g, x, ell=1.0):
    """``R (ell x) + u`` for a point or an ``(n, 3)`` array."""
    x = np.asarray(x, dtype=float)
    return (ell * x) @ g.matrix.T + g.translation


def act_domain(g, ell, d):
    """Image of a domain under ``x -> R (ell x) + u``; volume scales by ell^3."""
    if not ell > 0:
        raise ValueError(f"scale must be positive, got {ell}")
    r = g.matrix
    if isinstance(d, Simplex):
        return Simplex(act(g, d.simplex_vertices, ell))
    if isinstance(d, Ball):
        return Ball(act(g, d.center, ell), ell * d.radius)
    if isinstance(d, Box):
        d = d.as_polytope()
    if isinstance(d, Polytope):
        a = d.normals @ r.T
        return Polytope(a, ell * d.offsets + a @ g.translation)
    raise TypeError(f"cannot move a {type(d).__name__}")


# -- Kuhn tiling -------------------------------------------------------------

def kuhn_vertices(k):
    """Vertices 0, e_s0, e_s0+e_s1, (1,1,1) of the k-th Kuhn tetrahedron."""
    s = PERMUTATIONS[k]
    v = np.zeros((4, 3))
    for i in range(3):
        v[i + 1 :, s[i]] = 1.0
    return v


def kuhn_simplex(k=0):
    return Simplex(kuhn_vertices(k))


KUHN_BARYCENTER = kuhn_vertices(0).mean(axis=0)


def reference_simplex():
    """Kuhn tetrahedron ``conv{0, e1, e1+e2, e1+e2+e3}`` shifted so that its
    barycentre is the origin."""
    return Simplex(kuhn_vertices(0) - KUHN_BARYCENTER)


def reach(simplex):
    """Largest distance from the origin to a point of the simplex."""
    return float(np.max(np.linalg.norm(simplex.simplex_vertices, axis=1)))


@dataclass(frozen=True, eq=False)
class Tiling:
    """Tiles ``g ell (z + K_k - b)`` for z in Z^3, k in 0..5, where K_k are
    the Kuhn tetrahedra and b the barycentre of K_0; tile (0, 0) is the
    image of :func:`reference_simplex`."""

    motion: RigidMotion
    scale: float = 1.0
    simplex_id: int = 0

    def tile(self, z, k):
        v = kuhn_vertices(k) + np.asarray(z, float) - KUHN_BARYCENTER
        return Simplex(act(self.motion, v, self.scale))

    def locate(self, points):
        """Tile index ``(z, k)`` of each point (ties on faces broken arbitrarily)."""
        y = np.asarray(points, dtype=float)
        x = (y - self.motion.translation) @ self.motion.matrix / self.scale + KUHN_BARYCENTER
        z = np.floor(x)
        order = np.argsort(-(x - z), axis=1, kind="stable")
        lookup = {p: i for i, p in enumerate(PERMUTATIONS)}
        k = np.array([lookup[tuple(o)] for o in order])
        return z.astype(int), k


# -- interior and boundary lattice sets ---------------------------------------

@dataclass(frozen=True)
class BoundaryCount:
    L: float
    ell: float
    n_interior: int
    n_boundary: int
    motion: RigidMotion = None

    def row(self):
        return {"L": self.L, "ell": self.ell, "n_interior": self.n_interior, "n_boundary": self.n_boundary}


def _row_counts(normals, rhs):
    """Number of integers z2 per (z0, z1) row with ``n_i . z <= rhs_i``.

    ``rhs`` has shape (rows, planes) and already includes the z0, z1 terms.
    """
    n2 = normals[:, 2]
    lo = np.full(rhs.shape[0], -np.inf)
    hi = np.full(rhs.shape[0], np.inf)
    ok = np.ones(rhs.shape[0], dtype=bool)
    for i in range(len(n2)):
        if abs(n2[i]) < 1e-12:
            ok &= rhs[:, i] >= 0
        elif n2[i] > 0:
            hi = np.minimum(hi, rhs[:, i] / n2[i])
        else:
            lo = np.maximum(lo, rhs[:, i] / n2[i])
    cnt = np.floor(hi) - np.ceil(lo) + 1
    return np.where(ok & np.isfinite(cnt), np.maximum(cnt, 0), 0).astype(np.int64)


def interior_boundary_sets(L, ell, gbar=None, simplex=None):
    """Sizes of the interior set and boundary set of lattice cells.

    A cell z contributes placements ``R ell D + u + z`` with u in [0,1]^3 and
    R in SO(3); all of them lie in the ball of radius ``ell * reach + sqrt(3)/2``
    about ``z + (1/2, 1/2, 1/2)``. z is counted interior when that ball lies in
    ``gbar L D`` (sufficient for every placement to fit) and boundary when the
    ball crosses every face plane's outward offset but is not interior
    (necessary for some placement to meet the big simplex). Counting is done
    row by row along the third lattice axis, O(L^2).
    """
    if not 0 < ell <= L:
        raise ValueError(f"need 0 < ell <= L, got ell={ell}, L={L}")
    gbar = gbar or RigidMotion.identity()
    simplex = simplex or reference_simplex()
    big = act_domain(gbar, L, simplex)
    radius = ell * reach(simplex) + np.sqrt(3.0) / 2.0
    lo, hi = Polytope(big.normals, big.offsets + radius).bounds()
    r0 = np.arange(np.floor(lo[0]) - 1, np.ceil(hi[0]) + 2)
    r1 = np.arange(np.floor(lo[1]) - 1, np.ceil(hi[1]) + 2)
    z0, z1 = (a.ravel() for a in np.meshgrid(r0, r1, indexing="ij"))
    a, b = big.normals, big.offsets
    c = 0.5
    base = b[None, :] - a[:, 0][None, :] * (z0[:, None] + c) - a[:, 1][None, :] * (z1[:, None] + c) - a[:, 2][None, :] * c
    n_int = int(_row_counts(a, base - radius).sum())
    n_meet = int(_row_counts(a, base + radius).sum())
    return BoundaryCount(float(L), float(ell), n_int, n_meet - n_int, gbar)


def interior_boundary_brute(L, ell, gbar=None, simplex=None):
    """Same criteria by direct enumeration of every lattice point (test oracle)."""
    gbar = gbar or RigidMotion.identity()
    simplex = simplex or reference_simplex()
    big = act_domain(gbar, L, simplex)
    radius = ell * reach(simplex) + np.sqrt(3.0) / 2.0
    lo, hi = Polytope(big.normals, big.offsets + radius).bounds()
    axes = [np.arange(np.floor(l) - 1, np.ceil(h) + 2) for l, h in zip(lo, hi)]
    z = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    s = big.offsets[None, :] - (z + 0.5) @ big.normals.T
    interior = np.all(s >= radius, axis=1)
    meet = np.all(s >= -radius, axis=1)
    return int(interior.sum()), int((meet & ~interior).sum())


def write_boundary_counts(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["L", "ell", "n_interior", "n_boundary"])
        w.writeheader()
        for r in rows:
            w.writerow({k: format(v, ".17g") for k, v in r.row().items()})
