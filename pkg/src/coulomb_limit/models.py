"""Energy functionals with exactly known thermodynamic limits.

The screened crystal places a unit nucleus on every site of Z^3 inside the
domain. A site whose ball of radius r fits in the domain carries a uniform
electron cloud of charge -1 centred on the nucleus; by Newton's theorem the
pair is invisible outside the ball, so these cells do not interact and each
costs exactly ``kappa_kin / r^2 - 9 / (10 r)``. Sites too close to the
boundary pay a penalty instead: ``p`` when a displaced ball still fits inside
the site's own unit cell (a dipole), ``p + 1/r`` when it does not.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np

from .geometry import EMPTY, lattice_points


def ball_self_energy(r):
    """Coulomb self-energy of a uniform unit charge in a ball of radius r."""
    return 3.0 / (5.0 * r)


def point_ball_energy(r):
    """Energy of a +1 point at the centre of a uniform -1 ball."""
    return -3.0 / (2.0 * r)


def cell_energy(r, kinetic_const):
    if not r > 0:
        raise ValueError("radius must be positive")
    return kinetic_const / r**2 + ball_self_energy(r) + point_ball_energy(r)


def screening_potential(r, x):
    """Potential of the neutral cell (unit nucleus at 0 plus uniform -1 ball).

    Zero for ``|x| >= r``; inside, ``1/|x| - (3 r^2 - |x|^2) / (2 r^3)``.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=float)
    s = np.linalg.norm(x, axis=-1)
    with np.errstate(divide="ignore"):
        inner = 1.0 / s - (3 * r * r - s * s) / (2 * r**3)
    return np.where(s >= r, 0.0, inner)


class EnergyFunctional:
    """``evaluate(domain) -> energy``; ``known_limit`` is energy per volume."""

    name = "functional"
    known_limit = None

    def evaluate(self, d):
        raise NotImplementedError

    def __call__(self, d):
        return self.evaluate(d)

    def stability_constant(self):
        return None


def _dipole_offsets(r, steps=5):
    """Displacements keeping a radius-r ball inside the site's unit cell."""
    h = 0.5 - r
    if h <= 0:
        return np.zeros((1, 3))
    ax = np.linspace(-h, h, steps)
    off = np.array(list(product(ax, ax, ax)))
    return off[np.argsort(np.linalg.norm(off, axis=1), kind="stable")]


@dataclass(frozen=True)
class ScreenedCrystalModel(EnergyFunctional):
    radius: float = 0.25
    kinetic_const: float = 1.0
    penalty: float = 1.0

    name = "screened-crystal"

    def __post_init__(self):
        if not 0 < self.radius <= 0.5:
            raise ValueError(f"radius must be in (0, 1/2], got {self.radius}")
        if self.kinetic_const < 0 or self.penalty < 0:
            raise ValueError("kinetic_const and penalty must be nonnegative")

    @property
    def e_cell(self):
        return cell_energy(self.radius, self.kinetic_const)

    @property
    def known_limit(self):
        return self.e_cell

    def stability_constant(self):
        return abs(self.e_cell) + self.penalty + 1.0 / self.radius + 1.0

    def site_classes(self, d):
        """Lattice sites of ``d`` split into (screened, dipole, bare) arrays."""
        if d is EMPTY:
            z = np.empty((0, 3))
            return z, z, z
        z = lattice_points(d)
        if len(z) == 0:
            return z, z, z
        r = self.radius
        screened = d.contains_ball(z, r)
        rest = z[~screened]
        offsets = _dipole_offsets(r)
        if len(rest):
            cand = (rest[:, None, :] + offsets[None]).reshape(-1, 3)
            fits = d.contains_ball(cand, r).reshape(len(rest), len(offsets))
            dip = fits.any(axis=1)
        else:
            dip = np.zeros(0, dtype=bool)
        return z[screened], rest[dip], rest[~dip]

    def evaluate(self, d):
        screened, dipole, bare = self.site_classes(d)
        return (
            len(screened) * self.e_cell
            + len(dipole) * self.penalty
            + len(bare) * (self.penalty + 1.0 / self.radius)
        )


@dataclass(frozen=True)
class ConstantDensity(EnergyFunctional):
    """``E = c |domain|``."""

    c: float = 1.0
    name = "constant"

    @property
    def known_limit(self):
        return self.c

    def stability_constant(self):
        return max(0.0, -self.c)

    def evaluate(self, d):
        return self.c * d.volume()


class ZeroFunctional(EnergyFunctional):
    name = "zero"
    known_limit = 0.0

    def stability_constant(self):
        return 0.0

    def evaluate(self, d):
        return 0.0


class AdversarialFunctional(EnergyFunctional):
    """``E = -|domain|^2``: unstable, so (A2) must fail."""

    name = "adversarial"

    def stability_constant(self):
        return 1.0

    def evaluate(self, d):
        return -d.volume() ** 2


def make_model(kind, **params):
    kinds = {
        "screened-crystal": ScreenedCrystalModel,
        "constant": ConstantDensity,
        "zero": lambda: ZeroFunctional(),
        "adversarial": lambda: AdversarialFunctional(),
    }
    if kind not in kinds:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(kinds)}")
    return kinds[kind](**params)
