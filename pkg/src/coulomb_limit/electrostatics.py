"""Classical Coulomb energies: direct sums, the Baxter one-body bound and a
Monte Carlo check of the Graf-Schenker tile-averaging inequality."""
import csv
from dataclasses import asdict, dataclass
from itertools import product

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._seeding import blocks, ordered_map, rng_for
from .motion import reach, reference_simplex, uniform_quaternions, quat_to_matrix

BAXTER_CONSTANT = 1.5 + np.sqrt(2.0)
MIN_SEPARATION = 1e-6


class CoincidentChargesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ChargeConfiguration:
    positions: np.ndarray
    charges: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        z = np.asarray(self.charges, dtype=float).reshape(-1)
        if len(x) != len(z):
            raise ValueError(f"{len(x)} positions but {len(z)} charges")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "charges", z)

    def __len__(self):
        return len(self.charges)

    @property
    def total_charge(self):
        return float(self.charges.sum())

    @property
    def charge_square_sum(self):
        return float(np.sum(self.charges**2))

    def min_separation(self):
        return float(pdist(self.positions).min()) if len(self) > 1 else np.inf

    def moved(self, g, ell=1.0):
        return ChargeConfiguration(g(self.positions, ell), self.charges)

    @classmethod
    def from_text(cls, text):
        """One particle per line, ``x y z charge``; ``#`` starts a comment."""
        rows = []
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {n}: expected 'x y z charge', got {line!r}")
            rows.append([float(p) for p in parts])
        rows = np.array(rows, dtype=float).reshape(-1, 4)
        return cls(rows[:, :3], rows[:, 3])

    def to_text(self):
        return "".join(
            " ".join(format(v, ".17g") for v in (*x, q)) + "\n" for x, q in zip(self.positions, self.charges)
        )


def random_neutral_configuration(n, box, rng, min_separation=MIN_SEPARATION):
    """``n`` (even) charges +-1 uniform in ``[0, box]^3``, total charge 0."""
    if n % 2:
        raise ValueError("a neutral +-1 configuration needs an even count")
    while True:
        x = box * rng.random((n, 3))
        if n < 2 or pdist(x).min() > min_separation:
            break
    z = np.repeat([1.0, -1.0], n // 2)
    return ChargeConfiguration(x, rng.permutation(z))


def coulomb_energy(c):
    """``sum_{i<j} z_i z_j / |x_i - x_j|`` by direct summation."""
    if len(c) < 2:
        return 0.0
    d = pdist(c.positions)
    if np.any(d == 0):
        k = int(np.argmin(d))
        i, j = _pair_index(k, len(c))
        raise CoincidentChargesError(f"particles {i} and {j} coincide at {c.positions[i].tolist()}")
    i, j = np.triu_indices(len(c), 1)
    return float(np.sum(c.charges[i] * c.charges[j] / d))


def _pair_index(k, n):
    """Invert the condensed pdist index ``k`` into ``(i, j)``."""
    i = 0
    while k >= n - 1 - i:
        k -= n - 1 - i
        i += 1
    return i, i + 1 + k


_NEIGHBOURS = np.array(list(product((-1, 0, 1), repeat=3)), dtype=float)


def nearest_nucleus_distance(x):
    """Distance to the nearest point of Z^3 (scalar for one point)."""
    p = np.asarray(x, dtype=float)
    single = p.ndim == 1
    p = p.reshape(-1, 3)
    r = np.round(p)
    cand = r[:, None, :] + _NEIGHBOURS[None]
    d = np.min(np.linalg.norm(p[:, None, :] - cand, axis=2), axis=1)
    return float(d[0]) if single else d


def lattice_coulomb_potential(electrons, nuclei):
    """The classical Coulomb energy of electrons (charge -1) and unit nuclei."""
    e = np.asarray(electrons, dtype=float).reshape(-1, 3)
    r = np.asarray(nuclei, dtype=float).reshape(-1, 3)
    total = 0.0
    if len(e) and len(r):
        d = np.linalg.norm(e[:, None, :] - r[None, :, :], axis=2)
        if np.any(d == 0):
            i, j = np.argwhere(d == 0)[0]
            raise CoincidentChargesError(f"electron {i} sits on nucleus {r[j].tolist()}")
        total -= np.sum(1.0 / d)
    for pts, label in ((e, "electrons"), (r, "nuclei")):
        if len(pts) > 1:
            d = pdist(pts)
            if np.any(d == 0):
                raise CoincidentChargesError(f"two {label} coincide")
            total += np.sum(1.0 / d)
    return float(total)


def baxter_check(electrons, nuclei):
    """Full potential versus ``-sum_i (3/2 + sqrt 2) / delta(x_i)``.

    Returns ``(lhs, rhs, holds)``.
    """
    e = np.asarray(electrons, dtype=float).reshape(-1, 3)
    lhs = lattice_coulomb_potential(e, nuclei)
    rhs = -float(np.sum(BAXTER_CONSTANT / nearest_nucleus_distance(e))) if len(e) else 0.0
    return lhs, rhs, lhs >= rhs


def random_baxter_configuration(rng, half_width=3, exclusion=1e-3, max_electrons=None):
    """Nuclei ``Z^3 cap [-w, w]^3``, a random number of electrons uniform in
    the cube away from the nuclei and from each other."""
    w = half_width
    ax = np.arange(-w, w + 1, dtype=float)
    nuclei = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1).reshape(-1, 3)
    n = int(rng.integers(1, (max_electrons or len(nuclei)) + 1))
    out = np.empty((0, 3))
    while len(out) < n:
        x = rng.uniform(-w, w, size=(n - len(out), 3))
        x = x[nearest_nucleus_distance(x) > exclusion]
        out = np.vstack([out, x])
        if len(out) > 1:
            d = squareform(pdist(out))
            np.fill_diagonal(d, np.inf)
            out = out[~np.any(np.triu(d < MIN_SEPARATION), axis=0)]
    return out, nuclei


# -- Graf-Schenker -----------------------------------------------------------

@dataclass
class GSCheckReport:
    lhs: float
    rhs_mean: float
    rhs_stderr: float
    implied_constant: float
    samples: int
    ell: float
    seed: int
    c_ref: float
    holds: bool

    def row(self):
        return asdict(self)


def _tile_pair_energy(x, z, kinv, simplex, ell, u, rot):
    """Tile-restricted pair energy for a batch of motions (u, R)."""
    # point x is in R ell S + u  iff  R^T (x - u) / ell is in S
    local = np.einsum("sji,snj->sni", rot, x[None, :, :] - u[:, None, :]) / ell
    inside = np.all(local @ simplex.normals.T < simplex.offsets, axis=2)
    m = inside * z[None, :]
    return 0.5 * np.einsum("si,ij,sj->s", m, kinv, m)


def graf_schenker_check(c, ell, samples=10_000, seed=0, simplex=None, c_ref=10.0, cell=None,
                        threads=1, block=2048):
    """Monte Carlo estimate of the tile-averaged pair energy.

    The average ``|ell S|^-1 int dlambda(g) sum_{i<j} z_i z_j 1(x_i, x_j in g ell S)
    / |x_i - x_j|`` vanishes unless the translation lies within
    ``ell * reach(S)`` of some charge, so the translation integral is done
    exactly over that cell: the result is ``(|cell| / |ell S|)`` times the
    sample mean over translations uniform in the cell and Haar rotations.

    ``holds`` is ``lhs >= rhs_mean - c_ref / ell * sum z^2 - 3 stderr``.
    """
    if not ell > 0:
        raise ValueError("ell must be positive")
    if samples < 1000:
        raise ValueError(f"graf_schenker_check needs >= 1000 samples, got {samples}")
    simplex = simplex or reference_simplex()
    lhs = coulomb_energy(c)
    zsq = c.charge_square_sum
    rho = ell * reach(simplex)
    lo, hi = c.positions.min(axis=0) - rho, c.positions.max(axis=0) + rho
    if cell is not None:
        clo, chi = (np.asarray(v, float) for v in cell)
        if np.any(clo > lo) or np.any(chi < hi):
            raise ValueError(
                f"translation cell {clo.tolist()}..{chi.tolist()} misses tiles touching the "
                f"configuration; it must contain {lo.tolist()}..{hi.tolist()}"
            )
        lo, hi = clo, chi
    if len(c) < 2:
        return GSCheckReport(lhs, 0.0, 0.0, lhs * ell / zsq if zsq else 0.0, samples, ell, seed, c_ref, True)
    kinv = squareform(1.0 / pdist(c.positions))
    weight = float(np.prod(hi - lo)) / (ell**3 * simplex.volume())

    def run(bounds):
        i0, i1 = bounds
        rng = rng_for(seed, 17, i0)
        n = i1 - i0
        u = lo + (hi - lo) * rng.random((n, 3))
        rot = quat_to_matrix(uniform_quaternions(n, rng))
        return _tile_pair_energy(c.positions, c.charges, kinv, simplex, ell, u, rot)

    vals = np.concatenate(ordered_map(run, blocks(samples, block), threads))
    rhs = weight * float(vals.mean())
    err = weight * float(vals.std(ddof=1)) / np.sqrt(samples)
    implied = (lhs - rhs) * ell / zsq
    holds = lhs >= rhs - c_ref / ell * zsq - 3 * err
    return GSCheckReport(lhs, rhs, err, implied, samples, ell, seed, c_ref, bool(holds))


def write_reports(rows, path):
    rows = [r.row() if hasattr(r, "row") else r for r in rows]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)
