"""Desk-scale quantum ingredients: Dirichlet box spectra, the free Fermi gas,
Lieb-Thirring ratios of box Slater states, Kato's inequality on Gaussians
and strong subadditivity of von Neumann entropy."""
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import gamma

SEMICLASSICAL_LT = 0.6 * (6 * np.pi**2) ** (2.0 / 3.0)


class CutoffError(ValueError):
    def __init__(self, message, suggested):
        super().__init__(message)
        self.suggested = float(suggested)


class PauliViolation(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


# -- box spectrum and the free gas -------------------------------------------

@dataclass(frozen=True, eq=False)
class BoxSpectrum:
    """Eigenvalues ``pi^2 |n|^2 / (2 L^2)`` of ``-Laplacian/2`` on ``(0, L)^3``
    with Dirichlet walls, one entry per mode ``n`` in ``{1, 2, ...}^3``."""

    L: float
    cutoff: float
    eigenvalues: np.ndarray
    modes: np.ndarray

    def count_below(self, e):
        return int(np.searchsorted(self.eigenvalues, e, side="right"))


@dataclass(frozen=True)
class ThermoParams:
    beta: float
    mu: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def dirichlet_spectrum(L, cutoff):
    """Every box eigenvalue ``<= cutoff``, sorted."""
    if not L > 0:
        raise ValueError("L must be positive")
    ground = 3 * np.pi**2 / (2 * L**2)
    if cutoff < ground:
        raise ValueError(f"cutoff {cutoff} is below the ground state {ground}")
    n2max = 2 * L**2 * cutoff / np.pi**2
    nmax = int(np.floor(np.sqrt(n2max - 2))) if n2max >= 3 else 1
    n = np.arange(1, nmax + 1)
    modes = np.stack(np.meshgrid(n, n, n, indexing="ij"), -1).reshape(-1, 3)
    ev = np.pi**2 * np.sum(modes**2, axis=1) / (2 * L**2)
    keep = ev <= cutoff
    order = np.argsort(ev[keep], kind="stable")
    return BoxSpectrum(float(L), float(cutoff), ev[keep][order], modes[keep][order])


def suggested_cutoff(p, rel=1e-12, margin=8.0):
    """A cutoff beyond which every Fermi-Dirac log term is below ``rel``."""
    return p.mu + (np.log(1.0 / rel) + margin) / p.beta


def free_fermion_free_energy(s, p, rel=1e-12):
    """Grand-canonical ``-(1/beta) sum_n log(1 + exp(-beta (e_n - mu)))``.

    The term at the spectrum's cutoff energy must be below ``rel`` times the
    magnitude of the sum, otherwise :class:`CutoffError` is raised with a
    suggested cutoff.
    """
    terms = np.logaddexp(0.0, -p.beta * (s.eigenvalues - p.mu))
    total = float(np.sum(terms))
    edge = float(np.logaddexp(0.0, -p.beta * (s.cutoff - p.mu)))
    if edge >= rel * total:
        raise CutoffError(
            f"cutoff {s.cutoff} too low for beta={p.beta}, mu={p.mu}; use at least {suggested_cutoff(p, rel):.6g}",
            suggested_cutoff(p, rel),
        )
    return -total / p.beta


def box_free_energy(L, p, rel=1e-12):
    return free_fermion_free_energy(dirichlet_spectrum(L, suggested_cutoff(p, rel)), p, rel)


def _free_gas_integrand(k, p):
    return 4 * np.pi * k * k * np.logaddexp(0.0, -p.beta * (0.5 * k * k - p.mu))


def free_gas_limit_density(p, tol=1e-8):
    """``-(1/beta) (2 pi)^-3 int log(1 + exp(-beta(|k|^2/2 - mu))) d^3k``.

    Adaptive radial quadrature, split at the Fermi momentum when mu > 0.
    """
    pieces = [0.0]
    if p.mu > 0:
        pieces.append(np.sqrt(2 * p.mu))
    pieces.append(pieces[-1] + 60.0 / np.sqrt(p.beta))
    total, err = 0.0, 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        v, e = quad(_free_gas_integrand, a, b, args=(p,), epsabs=1e-14, epsrel=1e-13, limit=400)
        total += v
        err += e
    tail, etail = quad(_free_gas_integrand, pieces[-1], np.inf, args=(p,), epsabs=1e-14, limit=200)
    total += tail
    err += etail
    scale = 1.0 / (p.beta * (2 * np.pi) ** 3)
    if err * scale > tol:
        raise ArithmeticError(f"quadrature did not reach {tol}: error estimate {err * scale:.3g}")
    return -total * scale


def fermi_dirac_integral(x):
    """``f_{5/2}(e^x) = Gamma(5/2)^-1 int_0^inf t^(3/2) / (e^(t - x) + 1) dt``."""
    f = lambda t: t**1.5 * np.exp(-np.logaddexp(0.0, t - x))
    top = max(x, 0.0) + 80.0
    v = quad(f, 0.0, max(x, 0.0), epsabs=0, epsrel=1e-13, limit=200)[0] if x > 0 else 0.0
    v += quad(f, max(x, 0.0), top, epsabs=0, epsrel=1e-13, limit=200)[0]
    return v / gamma(2.5)


def bulk_density_closed_form(p):
    """``-beta^(-5/2) (2 pi)^(-3/2) f_{5/2}(e^(beta mu))``."""
    return -(p.beta ** -2.5) * (2 * np.pi) ** -1.5 * fermi_dirac_integral(p.beta * p.mu)


def weyl_surface_density(L, p):
    """Dirichlet surface correction to ``F / L^3`` from the two-term Weyl law.

    The mode count ``L^3 k^3 / (6 pi^2) - 6 L^2 k^2 / (16 pi)`` at energy
    ``k^2 / 2`` lifts the free energy per volume by
    ``(6 / L) (8 pi beta)^-1 int_0^inf log(1 + exp(-beta (E - mu))) dE``.
    """
    x = p.beta * p.mu
    # int_0^inf log(1 + e^(x - t)) dt = f_1(e^x) = -Li_2(-e^x)
    g = lambda t: np.logaddexp(0.0, x - t)
    top = max(x, 0.0) + 80.0
    v = quad(g, 0.0, max(x, 0.0), epsrel=1e-13)[0] if x > 0 else 0.0
    v += quad(g, max(x, 0.0), top, epsrel=1e-13)[0]
    return 6.0 / L * v / (8 * np.pi * p.beta**2)


def thermo_bound_sup():
    """``sup`` over all ``(beta, mu)`` of ``-f(beta, mu) / (1 + beta^-5/2 + mu_+^5/2)``.

    With ``x = beta mu`` the ratio is at most
    ``(2 pi)^-3/2 f_{5/2}(e^x) / (1 + x_+^{5/2})`` in the ``beta -> 0`` corner
    (``beta^-5/2`` dominates 1 and ``mu_+^5/2 = beta^-5/2 x_+^5/2``), and this
    bounds every other ``beta`` too, so a scalar maximisation over ``x``
    gives the optimal constant.
    """
    h = lambda x: -(2 * np.pi) ** -1.5 * fermi_dirac_integral(x) / (1 + max(x, 0.0) ** 2.5)
    xs = np.linspace(-5, 20, 251)
    k = int(np.argmin([h(x) for x in xs]))
    res = minimize_scalar(h, bounds=(xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]), method="bounded",
                          options={"xatol": 1e-10})
    return float(-res.fun)


def thermo_bound_ratio(f, p):
    return -f / (1 + p.beta**-2.5 + max(p.mu, 0.0) ** 2.5)


# -- Lieb-Thirring -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SlaterState:
    """Slater determinant of box orbitals prod_d sqrt(2/L) sin(pi n_d x_d / L)."""

    L: float
    modes: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=int).reshape(-1, 3)
        if len(m) == 0:
            raise ValueError("a Slater state needs at least one orbital")
        if np.any(m < 1):
            raise ValueError("box modes are positive integers")
        if len({tuple(r) for r in m}) != len(m):
            raise PauliViolation("orbitals must be distinct (Pauli exclusion)")
        object.__setattr__(self, "modes", m)

    @property
    def N(self):
        return len(self.modes)

    def kinetic_energy(self):
        """``sum <phi, -Laplacian phi>`` over occupied orbitals."""
        return float(np.pi**2 * np.sum(self.modes**2) / self.L**2)

    def _factors(self, nodes):
        # per-orbital, per-axis values of (2/L) sin^2(pi n x / L)
        x = nodes[None, :]
        return (2.0 / self.L) * np.sin(np.pi * self.modes[:, :, None] * x[:, None, :] / self.L) ** 2

    def density_integrals(self, m):
        """``(int rho, int rho^(5/3))`` on an m-point Gauss-Legendre tensor grid."""
        t, w = leggauss(m)
        x = 0.5 * self.L * (t + 1)
        w = 0.5 * self.L * w
        f = self._factors(x)
        rho = np.einsum("ki,kj,kl->ijl", f[:, 0], f[:, 1], f[:, 2])
        ww = np.einsum("i,j,l->ijl", w, w, w)
        return float(np.sum(ww * rho)), float(np.sum(ww * np.clip(rho, 0, None) ** (5.0 / 3.0)))


def rho_53_integral(s, tol=1e-6):
    """``int rho^(5/3)`` to relative tolerance ``tol`` by grid refinement.

    Returns ``(value, int rho, nodes used)``.
    """
    m = 8 * int(np.max(s.modes)) + 16
    prev = s.density_integrals(m)[1]
    for _ in range(8):
        m = int(m * 1.5)
        n_int, cur = s.density_integrals(m)
        if abs(cur - prev) <= tol * abs(cur):
            return cur, n_int, m
        prev = cur
    raise ArithmeticError(f"rho^(5/3) quadrature did not converge to {tol}")


def lieb_thirring_ratio(s, tol=1e-6):
    """``T / int rho^(5/3)`` with ``T = sum_k pi^2 |n_k|^2 / L^2``, the kinetic
    energy of ``sum_i (-Laplacian_i)`` (no factor 1/2)."""
    val, _, _ = rho_53_integral(s, tol)
    return s.kinetic_energy() / val


def random_slater_state(rng, n_max=20, mode_max=4, L=1.0):
    n = int(rng.integers(1, n_max + 1))
    pool = np.stack(np.meshgrid(*[np.arange(1, mode_max + 1)] * 3, indexing="ij"), -1).reshape(-1, 3)
    return SlaterState(L, pool[rng.choice(len(pool), size=n, replace=False)])


# -- Kato --------------------------------------------------------------------

def gaussian_moments(a):
    """``(<1/|x|>, <-Laplacian>)`` for the normalised ``exp(-a |x|^2)``."""
    if not a > 0:
        raise ValueError(f"Gaussian width parameter must be positive, got {a}")
    return 2.0 * np.sqrt(2.0 * a / np.pi), 3.0 * a


def kato_check(a):
    """Optimal-epsilon form of Kato's inequality on a Gaussian.

    ``eps <-Laplacian> + 1/eps`` is smallest at ``2 sqrt(<-Laplacian>)``; the
    returned ratio is ``<1/|x|>`` over that minimum, so the inequality holds
    iff ``ratio <= 1``.
    """
    coulomb, kinetic = gaussian_moments(a)
    ratio = coulomb / (2.0 * np.sqrt(kinetic))
    return ratio, bool(ratio <= 1.0)


# -- entropy -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TripartiteState:
    dims: tuple
    rho: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        n = int(np.prod(dims))
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (n, n):
            raise InvalidStateError(f"density matrix shape {r.shape} does not match dims {dims}")
        if np.max(np.abs(r - r.conj().T)) > 1e-12:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(r).real - 1) > 1e-10:
            raise InvalidStateError(f"trace {np.trace(r).real} != 1")
        if np.linalg.eigvalsh(r).min() < -1e-10:
            raise InvalidStateError("density matrix is not positive semidefinite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "rho", r)

    def reduced(self, keep):
        """Partial trace onto the parties listed in ``keep`` (sorted)."""
        d = self.dims
        t = self.rho.reshape(d + d)
        letters = "abc"
        row = [letters[i] for i in range(3)]
        col = [letters[i].upper() if i in keep else letters[i] for i in range(3)]
        out = "".join(letters[i] for i in keep) + "".join(letters[i].upper() for i in keep)
        r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
        n = int(np.prod([d[i] for i in keep]))
        return r.reshape(n, n)


def von_neumann_entropy(rho, cut=1e-14):
    """``-tr rho log rho`` in nats; eigenvalues below ``cut`` are dropped."""
    ev = np.linalg.eigvalsh(rho)
    ev = ev[ev > cut]
    return float(-np.sum(ev * np.log(ev)))


def ssa_check(s, slack=1e-9):
    """``S(123) + S(2) <= S(12) + S(23)``; returns ``(lhs, rhs, holds)``."""
    lhs = von_neumann_entropy(s.rho) + von_neumann_entropy(s.reduced([1]))
    rhs = von_neumann_entropy(s.reduced([0, 1])) + von_neumann_entropy(s.reduced([1, 2]))
    return lhs, rhs, bool(lhs <= rhs + slack)


def random_tripartite_state(dims, rng):
    """Partial trace of a Haar-random pure state on the doubled space
    (Hilbert-Schmidt measure)."""
    n = int(np.prod(dims))
    psi = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    psi /= np.linalg.norm(psi)
    rho = psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return TripartiteState(tuple(dims), rho / np.trace(rho).real)


def product_state(*factors):
    rho = factors[0]
    for f in factors[1:]:
        rho = np.kron(rho, f)
    return TripartiteState(tuple(len(f) for f in factors), rho)
