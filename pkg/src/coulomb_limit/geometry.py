"""Bounded domains of R^3 with exact volume and containment predicates.

Shapes are small immutable objects. Every shape answers ``contains`` for an
``(n, 3)`` array of points, ``contains_ball`` (is the open ball of the given
radius around each centre inside the set) and reports exact volume, bounds
and diameter. Primitive shapes also give the exact Euclidean distance to
their boundary, which is what the boundary-layer regularity test needs.
"""
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from ._seeding import rng_for


class EmptyDomainError(ValueError):
    """Raised for a polytope whose interior is empty."""


class InsufficientSamplesError(ValueError):
    def __init__(self, message, required):
        super().__init__(message)
        self.required = int(required)


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(1, 3) if x.ndim == 1 else x


class Domain:
    """Base class. Subclasses fill in the geometric primitives."""

    tag = "domain"
    is_convex = False

    def volume(self):
        raise NotImplementedError

    def contains(self, points):
        raise NotImplementedError

    def contains_ball(self, centers, radius):
        raise NotImplementedError

    def bounds(self):
        raise NotImplementedError

    def diameter(self):
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))

    def boundary_distance(self, points):
        raise NotImplementedError(f"{self.tag} has no exact boundary distance")

    def translate(self, z):
        raise NotImplementedError

    def hull_points(self):
        """Finite point set whose convex hull is the hull of the domain."""
        raise NotImplementedError

    def to_block(self):
        raise NotImplementedError

    def __and__(self, other):
        return Intersection((self, other))


class _Empty(Domain):
    """The empty set; only used to test normalisation E(empty) = 0."""

    tag = "empty"
    is_convex = True

    def volume(self):
        return 0.0

    def contains(self, points):
        return np.zeros(len(_as_points(points)), dtype=bool)

    def contains_ball(self, centers, radius):
        return np.zeros(len(_as_points(centers)), dtype=bool)

    def bounds(self):
        return np.zeros(3), np.zeros(3)

    def diameter(self):
        return 0.0

    def translate(self, z):
        return self

    def to_block(self):
        return {"shape": "empty"}

    def __repr__(self):
        return "EMPTY"


EMPTY = _Empty()


@dataclass(frozen=True, eq=False)
class Ball(Domain):
    center: np.ndarray
    radius: float

    tag = "ball"
    is_convex = True

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    def volume(self):
        return 4.0 * np.pi * self.radius**3 / 3.0

    def contains(self, points):
        d = np.linalg.norm(_as_points(points) - self.center, axis=1)
        return d < self.radius

    def contains_ball(self, centers, radius):
        d = np.linalg.norm(_as_points(centers) - self.center, axis=1)
        return d + radius <= self.radius

    def disjoint_ball(self, centers, radius):
        d = np.linalg.norm(_as_points(centers) - self.center, axis=1)
        return d >= self.radius + radius

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def diameter(self):
        return 2.0 * self.radius

    def boundary_distance(self, points):
        d = np.linalg.norm(_as_points(points) - self.center, axis=1)
        return np.abs(d - self.radius)

    def translate(self, z):
        return Ball(self.center + np.asarray(z, float), self.radius)

    def shrink(self, margin):
        return Ball(self.center, self.radius - margin)

    def hull_points(self):
        raise NotImplementedError("a ball has no finite hull point set")

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius:g})"

    def to_block(self):
        return {"shape": "ball", "center": _fmt_vec(self.center), "radius": repr(self.radius)}


@dataclass(frozen=True, eq=False)
class Box(Domain):
    """Open axis-aligned box ``lo < x < hi``."""

    lo: np.ndarray
    hi: np.ndarray

    tag = "box"
    is_convex = True

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3)
        hi = np.asarray(self.hi, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise EmptyDomainError(f"box has empty interior: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, side, center=(0.0, 0.0, 0.0)):
        c = np.asarray(center, dtype=float)
        return cls(c - side / 2.0, c + side / 2.0)

    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def contains(self, points):
        p = _as_points(points)
        return np.all((p > self.lo) & (p < self.hi), axis=1)

    def contains_ball(self, centers, radius):
        p = _as_points(centers)
        return np.all((p - radius >= self.lo) & (p + radius <= self.hi), axis=1)

    def disjoint_ball(self, centers, radius):
        p = _as_points(centers)
        gap = np.maximum(np.maximum(self.lo - p, p - self.hi), 0.0)
        return np.linalg.norm(gap, axis=1) >= radius

    def bounds(self):
        return self.lo.copy(), self.hi.copy()

    def boundary_distance(self, points):
        p = _as_points(points)
        inside = self.contains(p)
        d_in = np.min(np.minimum(p - self.lo, self.hi - p), axis=1)
        gap = np.maximum(np.maximum(self.lo - p, p - self.hi), 0.0)
        d_out = np.linalg.norm(gap, axis=1)
        # points on a face but outside the open box have gap 0 and d_in 0
        return np.where(inside, d_in, np.where(d_out > 0, d_out, np.abs(d_in)))

    def translate(self, z):
        z = np.asarray(z, float)
        return Box(self.lo + z, self.hi + z)

    def shrink(self, margin):
        return Box(self.lo + margin, self.hi - margin)

    def hull_points(self):
        return np.array([np.where(m, self.hi, self.lo) for m in product([0, 1], repeat=3)], float)

    def as_polytope(self):
        normals = np.vstack([np.eye(3), -np.eye(3)])
        return Polytope(normals, np.concatenate([self.hi, -self.lo]))

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"

    def to_block(self):
        return {"shape": "box", "lo": _fmt_vec(self.lo), "hi": _fmt_vec(self.hi)}


class Polytope(Domain):
    """Open convex polytope ``{x : A x < b}``; rows of A are normalised."""

    tag = "polytope"
    is_convex = True

    def __init__(self, normals, offsets):
        a = np.asarray(normals, dtype=float).reshape(-1, 3)
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if len(a) != len(b) or len(a) < 4:
            raise ValueError("a bounded polytope needs at least 4 halfspaces")
        norms = np.linalg.norm(a, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero halfspace normal")
        self.normals = a / norms[:, None]
        self.offsets = b / norms
        # Chebyshev centre: max r s.t. a_i.x + r <= b_i
        res = linprog(
            c=[0, 0, 0, -1],
            A_ub=np.hstack([self.normals, np.ones((len(b), 1))]),
            b_ub=self.offsets,
            bounds=[(None, None)] * 3 + [(None, None)],
            method="highs",
        )
        if res.status == 3:
            raise ValueError("halfspaces do not bound a finite region")
        if res.status != 0 or res.x[3] <= 1e-12:
            raise EmptyDomainError("polytope has empty interior")
        self.interior_point = res.x[:3]
        self.inradius = float(res.x[3])
        self._vertices = None
        self._triangles = None

    def _build(self):
        if self._vertices is not None:
            return
        a, b = self.normals, self.offsets
        pts = []
        for i, j, k in combinations(range(len(a)), 3):
            m = a[[i, j, k]]
            if abs(np.linalg.det(m)) < 1e-12:
                continue
            v = np.linalg.solve(m, b[[i, j, k]])
            if np.all(a @ v <= b + 1e-9 * (1 + np.abs(b))):
                pts.append(v)
        pts = np.array(pts)
        keep = []
        for p in pts:
            if not any(np.linalg.norm(p - q) < 1e-9 for q in keep):
                keep.append(p)
        self._vertices = np.array(keep)
        hull = ConvexHull(self._vertices)
        self._triangles = self._vertices[hull.simplices]

    @property
    def vertices(self):
        self._build()
        return self._vertices

    @property
    def triangles(self):
        self._build()
        return self._triangles

    def volume(self):
        # cone decomposition from an interior point into tetrahedra
        tri = self.triangles - self.interior_point
        return float(np.sum(np.abs(np.linalg.det(tri))) / 6.0)

    def contains(self, points):
        p = _as_points(points)
        return np.all(p @ self.normals.T < self.offsets, axis=1)

    def contains_ball(self, centers, radius):
        p = _as_points(centers)
        return np.all(p @ self.normals.T + radius <= self.offsets, axis=1)

    def disjoint_ball(self, centers, radius):
        p = _as_points(centers)
        return ~self.contains(p) & (self.boundary_distance(p) >= radius)

    def bounds(self):
        v = self.vertices
        return v.min(axis=0), v.max(axis=0)

    def diameter(self):
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)))

    def boundary_distance(self, points):
        p = _as_points(points)
        out = np.full(len(p), np.inf)
        for tri in self.triangles:
            out = np.minimum(out, point_triangle_distance(p, *tri))
        return out

    def plane_distance(self, points):
        """Signed distance to the nearest face plane (positive inside)."""
        p = _as_points(points)
        return np.min(self.offsets - p @ self.normals.T, axis=1)

    def translate(self, z):
        z = np.asarray(z, float)
        return Polytope(self.normals, self.offsets + self.normals @ z)

    def shrink(self, margin):
        return Polytope(self.normals, self.offsets - margin)

    def hull_points(self):
        return self.vertices

    def as_polytope(self):
        return self

    def to_block(self):
        rows = [" ".join(repr(float(v)) for v in (*n, o)) for n, o in zip(self.normals, self.offsets)]
        return {"shape": "polytope", "halfspaces": "; ".join(rows)}

    def __repr__(self):
        return f"Polytope({len(self.offsets)} halfspaces)"


class Simplex(Polytope):
    """Open tetrahedron given by its four vertices."""

    tag = "simplex-image"

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float).reshape(4, 3)
        vol6 = np.linalg.det(v[1:] - v[0])
        if abs(vol6) < 1e-14:
            raise EmptyDomainError("degenerate simplex")
        normals, offsets = [], []
        for k in range(4):
            face = np.delete(v, k, axis=0)
            n = np.cross(face[1] - face[0], face[2] - face[0])
            if n @ (v[k] - face[0]) > 0:
                n = -n
            normals.append(n)
            offsets.append(n @ face[0])
        super().__init__(normals, offsets)
        self.simplex_vertices = v
        self._vertices = v
        self._triangles = np.array([np.delete(v, k, axis=0) for k in range(4)])

    def volume(self):
        return float(abs(np.linalg.det(self.simplex_vertices[1:] - self.simplex_vertices[0])) / 6.0)

    def barycenter(self):
        return self.simplex_vertices.mean(axis=0)

    def translate(self, z):
        return Simplex(self.simplex_vertices + np.asarray(z, float))

    def to_block(self):
        return {"shape": "simplex-image", "vertices": "; ".join(_fmt_vec(v) for v in self.simplex_vertices)}

    def __repr__(self):
        return f"Simplex({self.simplex_vertices.tolist()})"


class Union(Domain):
    """Union of axis-aligned boxes (exact volume by coordinate compression)."""

    tag = "union"

    def __init__(self, parts):
        self.parts = tuple(parts)
        if not self.parts or not all(isinstance(p, Box) for p in self.parts):
            raise ValueError("Union supports a nonempty list of boxes")

    def volume(self):
        axes = [np.unique(np.concatenate([[p.lo[k], p.hi[k]] for p in self.parts])) for k in range(3)]
        mids = np.stack(np.meshgrid(*[(a[1:] + a[:-1]) / 2 for a in axes], indexing="ij"), -1).reshape(-1, 3)
        cell = np.einsum("i,j,k->ijk", *[np.diff(a) for a in axes]).ravel()
        return float(cell[self.contains(mids)].sum())

    def contains(self, points):
        p = _as_points(points)
        return np.any([q.contains(p) for q in self.parts], axis=0)

    def contains_ball(self, centers, radius):
        # sufficient condition only: some single part holds the whole ball
        p = _as_points(centers)
        return np.any([q.contains_ball(p, radius) for q in self.parts], axis=0)

    def bounds(self):
        return (np.min([p.lo for p in self.parts], axis=0), np.max([p.hi for p in self.parts], axis=0))

    def diameter(self):
        v = self.hull_points()
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=2)))

    def translate(self, z):
        return Union([p.translate(z) for p in self.parts])

    def hull_points(self):
        return np.vstack([p.hull_points() for p in self.parts])

    def to_block(self):
        return {"shape": "union", "boxes": "; ".join(_fmt_vec(np.concatenate([p.lo, p.hi])) for p in self.parts)}


class Difference(Domain):
    """``outer`` minus the closure of ``inner``."""

    tag = "difference"

    def __init__(self, outer, inner):
        if not isinstance(inner, (Ball, Box, Polytope)):
            raise ValueError("inner part must be a primitive shape")
        self.outer = outer
        self.inner = inner

    def volume(self):
        if isinstance(self.inner, Ball):
            inside = self.outer.contains_ball(self.inner.center, self.inner.radius)[0]
        else:
            inside = bool(np.all(self.outer.contains(self.inner.hull_points())))
        if not inside:
            raise NotImplementedError("difference volume needs inner contained in outer")
        return self.outer.volume() - self.inner.volume()

    def contains(self, points):
        p = _as_points(points)
        closed_inner = self.inner.contains(p) | (self.inner.boundary_distance(p) == 0)
        return self.outer.contains(p) & ~closed_inner

    def contains_ball(self, centers, radius):
        p = _as_points(centers)
        return self.outer.contains_ball(p, radius) & self.inner.disjoint_ball(p, radius)

    def bounds(self):
        return self.outer.bounds()

    def diameter(self):
        return self.outer.diameter()

    def translate(self, z):
        return Difference(self.outer.translate(z), self.inner.translate(z))

    def hull_points(self):
        return self.outer.hull_points()

    def to_block(self):
        blk = {"shape": "difference"}
        blk.update({f"outer.{k}": v for k, v in self.outer.to_block().items()})
        blk.update({f"inner.{k}": v for k, v in self.inner.to_block().items()})
        return blk


class Intersection(Domain):
    """Intersection of domains, evaluated predicate-wise."""

    tag = "intersection"

    def __init__(self, parts):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, Intersection) else [p])
        self.parts = tuple(flat)
        self.is_convex = all(p.is_convex for p in self.parts)

    def _polytope(self):
        if all(isinstance(p, (Box, Polytope)) for p in self.parts):
            polys = [p.as_polytope() for p in self.parts]
            return Polytope(np.vstack([p.normals for p in polys]), np.concatenate([p.offsets for p in polys]))
        return None

    def volume(self):
        if self.is_empty():
            return 0.0
        try:
            poly = self._polytope()
        except EmptyDomainError:
            return 0.0
        if poly is None:
            raise NotImplementedError("intersection volume needs polyhedral parts")
        return poly.volume()

    def is_empty(self):
        """Cheap test: disjoint bounding boxes."""
        lo, hi = self.bounds()
        return bool(np.any(hi <= lo))

    def contains(self, points):
        p = _as_points(points)
        out = np.ones(len(p), dtype=bool)
        for q in self.parts:
            out &= q.contains(p)
        return out

    def contains_ball(self, centers, radius):
        p = _as_points(centers)
        out = np.ones(len(p), dtype=bool)
        for q in self.parts:
            out &= q.contains_ball(p, radius)
        return out

    def bounds(self):
        los, his = zip(*(p.bounds() for p in self.parts))
        return np.max(los, axis=0), np.min(his, axis=0)

    def translate(self, z):
        return Intersection([p.translate(z) for p in self.parts])

    def hull_points(self):
        poly = self._polytope()
        if poly is None:
            raise NotImplementedError("intersection hull needs polyhedral parts")
        return poly.vertices


def point_triangle_distance(p, a, b, c):
    """Euclidean distance from each row of ``p`` to the closed triangle abc."""
    p = _as_points(p)
    ab, ac = b - a, c - a
    ap, bp, cp = p - a, p - b, p - c
    d1, d2 = ap @ ab, ap @ ac
    d3, d4 = bp @ ab, bp @ ac
    d5, d6 = cp @ ab, cp @ ac
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        q = a + np.outer(v, ab) + np.outer(w, ac)
        # lower-priority regions first so that vertex regions win ties
        wbc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        m = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
        q[m] = b + np.outer(wbc[m], c - b)
        wac = d2 / (d2 - d6)
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        q[m] = a + np.outer(wac[m], ac)
        m = (d6 >= 0) & (d5 <= d6)
        q[m] = c
        vab = d1 / (d1 - d3)
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        q[m] = a + np.outer(vab[m], ab)
        m = (d3 >= 0) & (d4 <= d3)
        q[m] = b
        m = (d1 <= 0) & (d2 <= 0)
        q[m] = a
    return np.linalg.norm(p - q, axis=1)


# -- measure-theoretic operations -------------------------------------------

def volume(d):
    """Exact volume of a domain."""
    v = d.volume()
    if d is not EMPTY and not v > 0:
        raise EmptyDomainError(f"{d!r} has zero volume")
    return v


def sample_uniform(d, n, rng, batch=None):
    """``n`` points uniformly distributed in ``d`` by rejection."""
    lo, hi = d.bounds()
    out, have = [], 0
    batch = batch or max(1024, 2 * n)
    while have < n:
        x = lo + (hi - lo) * rng.random((batch, 3))
        x = x[d.contains(x)]
        out.append(x)
        have += len(x)
    return np.concatenate(out)[:n]


def mc_volume(d, samples, seed):
    """Hit-or-miss estimate of the volume; returns ``(estimate, stderr)``."""
    rng = rng_for(seed, 0)
    lo, hi = d.bounds()
    box = float(np.prod(hi - lo))
    hits = 0
    for start in range(0, samples, 1 << 16):
        n = min(1 << 16, samples - start)
        hits += int(d.contains(lo + (hi - lo) * rng.random((n, 3))).sum())
    p = hits / samples
    return box * p, box * np.sqrt(p * (1 - p) / samples)


def lattice_points(d):
    """All points of Z^3 inside ``d``."""
    lo, hi = d.bounds()
    lo, hi = np.ceil(lo).astype(int), np.floor(hi).astype(int)
    if np.any(hi < lo):
        return np.empty((0, 3))
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    z = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3).astype(float)
    return z[d.contains(z)]


def regularized_volume(d):
    """Convex-hull volume, an upper bound for the regularised volume.

    The infimum over a regularity class cannot be computed; the hull is a
    regular convex superset, and it is exact for convex domains.
    """
    if d is EMPTY:
        return 0.0
    if d.is_convex and not isinstance(d, Intersection):
        return d.volume()
    if isinstance(d, Intersection) and d.is_convex:
        return d.volume()
    if isinstance(d, Difference):
        return regularized_volume(d.outer)
    return float(ConvexHull(d.hull_points()).volume)


@dataclass
class RegularityReport:
    kind: str
    a_estimate: float = None
    a_stderr: float = None
    eps_estimate: float = None
    t_grid: np.ndarray = None
    layer_volumes: np.ndarray = None
    layer_stderr: np.ndarray = None
    passed: bool = True
    witnesses: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    margins: np.ndarray = None
    samples: int = 0


def fisher_regularity(d, t_grid, samples=100_000, seed=0, a_max=None, rel_error=None):
    """Boundary-layer volumes ``|{x : d(x, bd) <= |d|^(1/3) t}|`` by Monte Carlo.

    One set of uniform samples in the bounding box inflated by ``|d|^(1/3)``
    is shared by every ``t``, so the measured layer volumes are nondecreasing
    in ``t`` on every run. ``a_estimate`` is the largest ratio
    ``layer / (|d| t)`` over the positive grid points.

    ``a_max``, when given, is tested at 3 standard errors. ``rel_error``, when
    given, is the largest acceptable relative error of a positive layer
    volume; too few samples raise :class:`InsufficientSamplesError` carrying
    the required count.
    """
    if samples < 10_000:
        raise InsufficientSamplesError(f"fisher_regularity needs >= 10000 samples, got {samples}", 10_000)
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any((t < 0) | (t > 1)):
        raise ValueError("t_grid must be a nonempty list of values in [0, 1]")
    vol = volume(d)
    scale = vol ** (1.0 / 3.0)
    lo, hi = d.bounds()
    lo, hi = lo - scale, hi + scale
    box = float(np.prod(hi - lo))
    rng = rng_for(seed, 1)
    counts = np.zeros(len(t), dtype=np.int64)
    thresholds = scale * t
    for start in range(0, samples, 1 << 15):
        n = min(1 << 15, samples - start)
        dist = d.boundary_distance(lo + (hi - lo) * rng.random((n, 3)))
        counts += (dist[:, None] <= thresholds[None, :]).sum(axis=0)
    p = counts / samples
    layer = box * p
    err = box * np.sqrt(p * (1 - p) / samples)
    pos = t > 0
    if rel_error is not None and np.any(pos):
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(layer[pos] > 0, err[pos] / layer[pos], np.inf)
        worst = float(np.max(rel))
        if worst > rel_error:
            pmin = max(float(np.min(p[pos])), 1.0 / samples)
            need = int(np.ceil((1 - pmin) / (pmin * rel_error**2)))
            raise InsufficientSamplesError(
                f"relative error {worst:.3g} exceeds {rel_error}; need about {need} samples", need
            )
    ratios = np.where(pos, layer / (vol * np.where(pos, t, 1.0)), 0.0)
    ratio_err = np.where(pos, err / (vol * np.where(pos, t, 1.0)), 0.0)
    k = int(np.argmax(ratios)) if np.any(pos) else 0
    passed = True
    if a_max is not None:
        passed = bool(np.all(layer <= vol * a_max * t + 3 * err))
    return RegularityReport(
        kind="fisher",
        a_estimate=float(ratios[k]),
        a_stderr=float(ratio_err[k]),
        t_grid=t,
        layer_volumes=layer,
        layer_stderr=err,
        passed=passed,
        samples=samples,
    )


_LATTICE_DIRS = np.array([v for v in product((-1, 0, 1), repeat=3) if any(v)], dtype=float)
_LATTICE_DIRS /= np.linalg.norm(_LATTICE_DIRS, axis=1)[:, None]


def _frame(a):
    """Rotation matrices taking e_z to each row of ``a``."""
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    helper = np.where(np.abs(a[..., :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    e1 = np.cross(helper, a)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(a, e1)
    return np.stack([e1, e2, a], axis=-1)


def _cone_pattern(eps, m, rng):
    """Probe points of the open cone with axis e_z, in local coordinates.

    The cone opens towards ``-e_z`` from the apex: a probe is ``-r v`` with
    ``v . e_z > 1 - eps**2`` and ``r < eps``.
    """
    cos_t = 1.0 - eps**2
    shrink = 1.0 - 1e-6
    # deterministic rim and axis probes at full length, then random interior
    k = 8
    phi = 2 * np.pi * np.arange(k) / k
    cos_rim = 1.0 - shrink * eps**2
    sin_rim = np.sqrt(1 - cos_rim**2)
    rim = np.stack([sin_rim * np.cos(phi), sin_rim * np.sin(phi), np.full(k, cos_rim)], -1)
    rim = np.vstack([rim, [0, 0, 1.0]]) * eps * shrink
    n = max(m - len(rim), 0)
    c = cos_t + (1 - cos_t) * rng.random(n)
    s = np.sqrt(np.clip(1 - c**2, 0, None))
    ph = 2 * np.pi * rng.random(n)
    r = eps * rng.random(n) ** (1 / 3)
    inner = (np.stack([s * np.cos(ph), s * np.sin(ph), c], -1)) * r[:, None]
    return -np.vstack([rim, inner])


def cone_property_check(d, eps, samples=2000, directions=48, seed=0):
    """Spot check of the eps-cone property for both ``d`` and its complement.

    ``samples`` points are drawn in ``d`` and the same number in the
    complement (restricted to the bounding box inflated by ``2 eps``; points
    farther than ``eps`` from ``d`` pass trivially). For each point the 26
    lattice directions plus a probed normal estimate are tried as cone axis;
    a cone passes when all ``directions`` probe points lie in the set. Points
    with no passing axis are returned as witnesses, and ``margins`` holds the
    best fraction of inside probes per witness.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    rng = rng_for(seed, 2)
    pattern = _cone_pattern(eps, directions, rng)
    xs_in = sample_uniform(d, samples, rng)
    lo, hi = d.bounds()
    lo, hi = lo - 2 * eps, hi + 2 * eps
    xs_out = []
    while sum(len(x) for x in xs_out) < samples:
        x = lo + (hi - lo) * rng.random((2 * samples, 3))
        xs_out.append(x[~d.contains(x)])
    xs_out = np.concatenate(xs_out)[:samples]

    witnesses, margins = [], []
    for xs, inside in ((xs_in, d.contains), (xs_out, lambda p: ~d.contains(p))):
        ok, best = _cone_search(xs, inside, pattern, eps, rng)
        witnesses.append(xs[~ok])
        margins.append(best[~ok])
    witnesses = np.concatenate(witnesses)
    return RegularityReport(
        kind="cone",
        eps_estimate=float(eps),
        passed=len(witnesses) == 0,
        witnesses=witnesses,
        margins=np.concatenate(margins),
        samples=2 * samples,
    )


def _cone_search(xs, inside, pattern, eps, rng, chunk=256):
    n_probe = 32
    probes = rng.normal(size=(n_probe, 3))
    probes /= np.linalg.norm(probes, axis=1)[:, None]
    ok = np.zeros(len(xs), dtype=bool)
    best = np.zeros(len(xs))
    for s in range(0, len(xs), chunk):
        x = xs[s : s + chunk]
        m = len(x)
        # normal estimate: axis pointing away from where the set lies
        hit = inside((x[:, None, :] + 0.5 * eps * probes[None]).reshape(-1, 3)).reshape(m, n_probe)
        mean_in = (hit[:, :, None] * probes[None]).sum(axis=1)
        norm = np.linalg.norm(mean_in, axis=1)
        est = np.where(norm[:, None] > 0, -mean_in / np.where(norm > 0, norm, 1)[:, None], _LATTICE_DIRS[0])
        axes = np.concatenate([np.broadcast_to(_LATTICE_DIRS, (m, 26, 3)), est[:, None, :]], axis=1)
        frames = _frame(axes)  # (m, 27, 3, 3)
        pts = x[:, None, None, :] + np.einsum("mkij,pj->mkpi", frames, pattern)
        good = inside(pts.reshape(-1, 3)).reshape(m, 27, len(pattern))
        frac = good.mean(axis=2)
        ok[s : s + m] = np.any(frac == 1.0, axis=1)
        best[s : s + m] = frac.max(axis=1)
    return ok, best


# -- text serialisation -----------------------------------------------------

def _fmt_vec(v):
    return " ".join(repr(float(x)) for x in v)


def _vec(text, n=3):
    v = np.array([float(x) for x in text.split()])
    if len(v) != n:
        raise ValueError(f"expected {n} numbers, got {text!r}")
    return v


def domain_from_block(block):
    """Inverse of ``Domain.to_block``; ``block`` maps keys to strings."""
    shape = block.get("shape")
    if shape == "empty":
        return EMPTY
    if shape == "ball":
        return Ball(_vec(block["center"]), float(block["radius"]))
    if shape == "box":
        return Box(_vec(block["lo"]), _vec(block["hi"]))
    if shape == "cube":
        center = _vec(block["center"]) if "center" in block else np.zeros(3)
        return Box.cube(float(block["side"]), center)
    if shape == "simplex-image":
        return Simplex(np.array([_vec(r) for r in block["vertices"].split(";")]))
    if shape == "polytope":
        rows = np.array([_vec(r, 4) for r in block["halfspaces"].split(";")])
        return Polytope(rows[:, :3], rows[:, 3])
    if shape == "union":
        rows = [_vec(r, 6) for r in block["boxes"].split(";")]
        return Union([Box(r[:3], r[3:]) for r in rows])
    if shape == "difference":
        sub = lambda pre: {k[len(pre):]: v for k, v in block.items() if k.startswith(pre)}
        return Difference(domain_from_block(sub("outer.")), domain_from_block(sub("inner.")))
    raise ValueError(f"unknown shape {shape!r}")


def dump_domains(domains):
    """Text config with one ``[domain.N]`` block per domain."""
    lines = []
    for i, d in enumerate(domains):
        lines.append(f"[domain.{i}]")
        lines.extend(f"{k} = {v}" for k, v in d.to_block().items())
        lines.append("")
    return "\n".join(lines)


def load_domains(text):
    import configparser

    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    return [domain_from_block(dict(cp[s])) for s in cp.sections() if s.split(".")[0] == "domain"]
