"""Thermodynamic-limit experiments on abstract energy functionals.

Everything here takes an explicit seed. Random motions are drawn from
streams keyed by ``(seed, purpose, index)``, work items are mapped in a
fixed order, so every result is identical for any thread count.
"""
from dataclasses import dataclass, field

import numpy as np

from ._seeding import ordered_map, rng_for
from .geometry import EMPTY, Intersection, regularized_volume
from .motion import (
    RigidMotion,
    act_domain,
    interior_boundary_sets,
    reach,
    reference_simplex,
    sample_haar_batch,
)

_CONVERGE, _SUBAVG, _CHAIN_OUTER, _CHAIN_INNER, _CORPUS = 23, 29, 31, 37, 41


@dataclass
class AssumptionConfig:
    """Constants of the stability / continuity / subaverage assumptions.

    ``kappa=None`` takes the functional's own stability constant. The rate
    function is ``alpha(x) = alpha_const / x``.
    """

    kappa: float = None
    alpha_const: float = 1.0
    delta: float = 2.0
    sigma: float = 3.0
    lattice_shifts: tuple = ((1, 0, 0), (0, -2, 3), (5, 7, -11))
    subaverage_ells: tuple = (2, 4, 8, 16)
    subaverage_samples: int = 400

    def __post_init__(self):
        if self.kappa is not None and self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def alpha(self, x):
        return self.alpha_const / x

    def kappa_for(self, E):
        if self.kappa is not None:
            return self.kappa
        k = E.stability_constant()
        return 0.0 if k is None else k


def _motions(seed, purpose, n):
    u, q = sample_haar_batch(n, rng_for(seed, purpose))
    return [RigidMotion(u[i], q[i]) for i in range(n)]


def evaluate_e_ell(E, simplex, ell, g):
    """Energy per volume of the moved, dilated simplex."""
    return E(act_domain(g, ell, simplex)) / (ell**3 * simplex.volume())


def fit_inverse_powers(sizes, values, sem=None, order=2):
    """Least squares ``values ~ sum_k c_k / size^k``, k = 0..order.

    Returns ``(coeffs, stderr of c_0)``. With ``sem`` the fit is weighted and
    the covariance scaled by the reduced chi-square when it exceeds one; the
    unweighted error comes from residuals alone.
    """
    x = 1.0 / np.asarray(sizes, dtype=float)
    y = np.asarray(values, dtype=float)
    a = np.vander(x, order + 1, increasing=True)
    if sem is not None:
        w = 1.0 / np.maximum(np.asarray(sem, dtype=float), 1e-15)
    else:
        w = np.ones_like(y)
    aw, yw = a * w[:, None], y * w
    coef, *_ = np.linalg.lstsq(aw, yw, rcond=None)
    dof = len(y) - (order + 1)
    cov = np.linalg.pinv(aw.T @ aw)
    resid = yw - aw @ coef
    if sem is None:
        scale = resid @ resid / dof if dof > 0 else 0.0
    else:
        scale = max(1.0, resid @ resid / dof) if dof > 0 else 1.0
    return coef, float(np.sqrt(cov[0, 0] * scale))


def fit_power(x, y):
    """Exponent of a log-log least-squares line."""
    x, y = np.asarray(x, float), np.abs(np.asarray(y, float))
    ok = y > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


@dataclass
class ConvergenceReport:
    ells: np.ndarray
    mean: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    spread: np.ndarray
    sem: np.ndarray
    e_bar: float
    e_bar_stderr: float
    mean_at_largest: float
    rate_exponent: float
    spread_exponent: float
    seed: int
    g_samples: int
    values: np.ndarray = field(repr=False, default=None)

    def rows(self):
        return [
            {"ell": l, "mean": m, "min": lo, "max": hi, "spread": s, "sem": e}
            for l, m, lo, hi, s, e in zip(self.ells, self.mean, self.minimum, self.maximum, self.spread, self.sem)
        ]


def run_simplex_convergence(E, simplex=None, ell_grid=(4, 8, 16, 32), g_samples=50, seed=0,
                            threads=1, order=2):
    """Sample ``e_ell(g)`` over ``g`` in ``[0,1)^3 x SO(3)`` on an ell grid.

    The same motions are used at every ell. ``e_bar`` is the intercept of a
    fit in powers of 1/ell (``order`` 2: face and edge corrections);
    ``rate_exponent`` is the log-log slope of ``|mean_ell - e_bar|``.
    """
    simplex = simplex or reference_simplex()
    ells = np.asarray(ell_grid, dtype=float)
    if np.any(np.diff(ells) <= 0):
        raise ValueError("ell_grid must be increasing")
    if g_samples < 20:
        raise ValueError("need at least 20 motion samples")
    motions = _motions(seed, _CONVERGE, g_samples)
    tasks = [(i, k) for i in range(len(ells)) for k in range(g_samples)]
    vals = ordered_map(lambda t: evaluate_e_ell(E, simplex, ells[t[0]], motions[t[1]]), tasks, threads)
    vals = np.array(vals).reshape(len(ells), g_samples)
    mean = vals.mean(axis=1)
    sem = vals.std(axis=1, ddof=1) / np.sqrt(g_samples)
    lo, hi = vals.min(axis=1), vals.max(axis=1)
    coef, err = fit_inverse_powers(ells, mean, sem, order=order)
    return ConvergenceReport(
        ells=ells,
        mean=mean,
        minimum=lo,
        maximum=hi,
        spread=hi - lo,
        sem=sem,
        e_bar=float(coef[0]),
        e_bar_stderr=err,
        mean_at_largest=float(mean[-1]),
        rate_exponent=fit_power(ells, mean - coef[0]),
        spread_exponent=fit_power(ells, hi - lo),
        seed=seed,
        g_samples=g_samples,
        values=vals,
    )


@dataclass
class SubaverageResult:
    lhs: float
    rhs: float
    margin: float
    holds: bool
    average: float
    stderr: float
    ell: float
    alpha: float
    regularized_volume: float

    def required_alpha_const(self):
        """Smallest ``c`` in ``alpha = c / ell`` making the inequality hold."""
        denom = self.average + self.regularized_volume
        if self.lhs >= self.average or denom <= 0:
            return 0.0
        return float(self.ell * (self.average - self.lhs) / denom)


def check_subaverage(E, omega, simplex=None, ell=4.0, samples=1000, cfg=None, seed=0, threads=1):
    """Monte Carlo version of the subaverage inequality for one domain.

    The average ``|ell S|^-1 int E(omega cap g ell S) dlambda(g)`` is taken over
    translations uniform in ``omega``'s bounding box inflated by
    ``ell * reach(S)`` (outside it the piece is empty, contributing 0) and
    Haar rotations.
    """
    simplex = simplex or reference_simplex()
    cfg = cfg or AssumptionConfig()
    if ell > omega.diameter():
        raise ValueError(f"ell={ell} exceeds the domain diameter {omega.diameter():.4g}")
    lo, hi = omega.bounds()
    pad = ell * reach(simplex)
    lo, hi = lo - pad, hi + pad
    cell = float(np.prod(hi - lo))
    tile_vol = ell**3 * simplex.volume()
    u, q = sample_haar_batch(samples, rng_for(seed, _SUBAVG, int(ell * 1000)), (lo, hi))

    def piece(i):
        tile = act_domain(RigidMotion(u[i], q[i]), ell, simplex)
        inter = Intersection((omega, tile))
        return 0.0 if inter.is_empty() else float(E(inter))

    vals = np.array(ordered_map(piece, range(samples), threads))
    avg = cell / tile_vol * float(vals.mean())
    err = cell / tile_vol * float(vals.std(ddof=1)) / np.sqrt(samples)
    a = cfg.alpha(ell)
    vol_r = regularized_volume(omega)
    lhs = float(E(omega))
    rhs = (1 - a) * avg - vol_r * a
    return SubaverageResult(lhs, rhs, lhs - rhs, bool(lhs >= rhs - cfg.sigma * err), avg, err, float(ell), a, vol_r)


@dataclass
class ChainResult:
    e_L_min: float
    avg_e_ell: float
    correction: float
    rhs: float
    margin: float
    holds: bool
    c_fit: float
    stderr: float
    n_interior: int
    n_boundary: int


def subaverage_chain(E, simplex=None, L=32.0, ell=4.0, samples=200, seed=0, outer=8, cfg=None, threads=1):
    """The lower-bound chain from the subaverage property for big simplices.

    ``e_L_min`` is the smallest ``e_L`` over ``outer`` sampled motions and
    ``avg_e_ell`` the Monte Carlo mean of ``e_ell`` over ``[0,1)^3 x SO(3)``.
    Lattice cells are split into interior and boundary sets; boundary cells
    are bounded below by ``-kappa`` each, giving ``correction = kappa
    #boundary / |L S|``. The checked inequality is

        e_L_min >= (1 - alpha) (#interior avg_e_ell / |L S| - correction) - alpha

    and ``c_fit`` is the smallest C with ``e_L_min >= avg_e_ell - C (alpha + ell/L)``.
    """
    simplex = simplex or reference_simplex()
    cfg = cfg or AssumptionConfig()
    if ell > L / 4:
        raise ValueError(f"need ell <= L/4, got ell={ell}, L={L}")
    outer_g = _motions(seed, _CHAIN_OUTER, outer)
    inner_g = _motions(seed, _CHAIN_INNER, samples)
    e_L = np.array(ordered_map(lambda g: evaluate_e_ell(E, simplex, L, g), outer_g, threads))
    e_l = np.array(ordered_map(lambda g: evaluate_e_ell(E, simplex, ell, g), inner_g, threads))
    k = int(np.argmin(e_L))
    bc = interior_boundary_sets(L, ell, outer_g[k], simplex)
    big = L**3 * simplex.volume()
    kappa = cfg.kappa_for(E)
    a = cfg.alpha(ell)
    avg = float(e_l.mean())
    err = float(e_l.std(ddof=1) / np.sqrt(samples))
    correction = kappa * bc.n_boundary / big
    rhs = (1 - a) * (bc.n_interior * avg / big - correction) - a
    holds = e_L[k] >= rhs - cfg.sigma * err * bc.n_interior / big
    gap = avg - e_L[k]
    c_fit = max(0.0, gap / (a + ell / L))
    return ChainResult(float(e_L[k]), avg, correction, rhs, float(e_L[k] - rhs), bool(holds), c_fit, err,
                       bc.n_interior, bc.n_boundary)


# -- assumption suite ----------------------------------------------------------

def default_corpus(seed=0):
    """Cubes of side 4..32, balls of radius 4..16, moved simplices ell=4..32."""
    from .geometry import Ball, Box

    centre = np.array([0.31, 0.17, 0.43])
    cubes = [Box.cube(s, centre) for s in (4, 8, 16, 32)]
    balls = [Ball(centre, r) for r in (4, 8, 16)]
    gs = _motions(seed, _CORPUS, 4)
    base = reference_simplex()
    simplices = [act_domain(g, l, base) for g, l in zip(gs, (4, 8, 16, 32))]
    return cubes + balls + simplices


@dataclass
class AssumptionResult:
    name: str
    passed: bool
    worst_margin: float
    witness: str = ""
    fitted: float = None
    detail: list = field(default_factory=list)


@dataclass
class AssumptionReport:
    functional: str
    results: dict

    @property
    def passed(self):
        return all(r.passed for r in self.results.values())

    def failing(self):
        return [k for k, r in self.results.items() if not r.passed]


def check_assumptions(E, corpus=None, cfg=None, seed=0, include_a5=True, threads=1):
    """Numerical versions of (A1)-(A5) for ``E`` over a domain corpus.

    Only lattice translations are used for (A3). (A4) compares each domain
    with its inner parallel body at distance ``delta + 1/4``. Failures are
    report entries, never exceptions.
    """
    corpus = list(corpus) if corpus is not None else default_corpus(seed)
    if not corpus:
        raise ValueError("corpus must be nonempty")
    cfg = cfg or AssumptionConfig()
    kappa = cfg.kappa_for(E)
    results = {}

    e0 = float(E(EMPTY))
    results["A1"] = AssumptionResult("A1", e0 == 0.0, -abs(e0), "" if e0 == 0 else "EMPTY", detail=[e0])

    energies = ordered_map(lambda d: float(E(d)), corpus, threads)
    vols = [d.volume() for d in corpus]
    margins = [e + kappa * v for e, v in zip(energies, vols)]
    k = int(np.argmin(margins))
    results["A2"] = AssumptionResult(
        "A2", margins[k] >= 0, margins[k], repr(corpus[k]) if margins[k] < 0 else "",
        fitted=max(0.0, max(-e / v for e, v in zip(energies, vols))), detail=margins,
    )

    worst, wit = 0.0, ""
    for d, e in zip(corpus, energies):
        for z in cfg.lattice_shifts:
            diff = abs(float(E(d.translate(np.array(z, float)))) - e)
            if diff > 1e-9 * max(1.0, abs(e)) and diff > worst:
                worst, wit = diff, f"{d!r} + {tuple(z)}"
    results["A3"] = AssumptionResult("A3", worst == 0.0, -worst, wit)

    margin = cfg.delta + 0.25
    rows = []
    for d, e in zip(corpus, energies):
        if not hasattr(d, "shrink"):
            continue
        try:
            inner = d.shrink(margin)
        except ValueError:
            continue
        excess = e - float(E(inner)) - kappa * (d.volume() - inner.volume())
        rows.append((excess, d.volume(), d))
    slack = [v * cfg.alpha(v) - ex for ex, v, _ in rows]
    k = int(np.argmin(slack)) if rows else None
    results["A4"] = AssumptionResult(
        "A4", k is None or slack[k] >= 0, slack[k] if rows else 0.0,
        repr(rows[k][2]) if rows and slack[k] < 0 else "",
        fitted=max((max(0.0, ex) / v for ex, v, _ in rows), default=0.0),
        detail=[ex / v for ex, v, _ in rows],
    )

    if include_a5:
        subs = []
        for i, d in enumerate(corpus):
            for ell in cfg.subaverage_ells:
                if ell > d.diameter():
                    continue
                s = check_subaverage(E, d, None, ell, cfg.subaverage_samples, cfg, seed + i, threads)
                subs.append((s, d))
        bad = [(s, d) for s, d in subs if not s.holds]
        worst_s = min(subs, key=lambda t: t[0].margin) if subs else None
        results["A5"] = AssumptionResult(
            "A5", not bad, worst_s[0].margin if worst_s else 0.0,
            repr(bad[0][1]) + f" ell={bad[0][0].ell}" if bad else "",
            fitted=max((s.required_alpha_const() for s, _ in subs), default=0.0),
            detail=[(s.ell, s.lhs, s.rhs, s.stderr) for s, _ in subs],
        )
    return AssumptionReport(E.name, results)


# -- general domain sequences ------------------------------------------------------

@dataclass
class GeneralDomainReport:
    sizes: np.ndarray
    values: np.ndarray
    gaps: np.ndarray
    e_ref: float
    e_extrapolated: float
    e_stderr: float
    decay_exponent: float
    diameter_ratios: np.ndarray
    diameter_ok: bool
    fisher_a: list
    cone_ok: list
    flags: list

    def rows(self):
        return [
            {"size": s, "energy_per_volume": v, "gap": g, "diameter_ratio": r, "fisher_a": a, "cone_ok": c}
            for s, v, g, r, a, c in zip(self.sizes, self.values, self.gaps, self.diameter_ratios, self.fisher_a,
                                        self.cone_ok)
        ]


def run_general_domains(E, domains, e_ref, seed=0, diameter_bound=4.0, eps=0.1, regularity=True,
                        fisher_samples=20_000, cone_samples=500, threads=1, order=2):
    """``E(domain)/|domain|`` along a sequence of growing domains.

    Each domain gets a Fisher boundary-layer estimate and an eps-cone spot
    check; these, and the diameter condition ``diam / |domain|^(1/3) <=
    diameter_bound``, are flagged when violated but never stop the run.
    """
    from .geometry import cone_property_check, fisher_regularity

    domains = list(domains)
    vols = np.array([d.volume() for d in domains])
    if np.any(np.diff(vols) <= 0):
        raise ValueError("domain volumes must increase along the sequence")
    values = np.array(ordered_map(lambda d: float(E(d)), domains, threads)) / vols
    sizes = vols ** (1 / 3)
    ratios = np.array([d.diameter() for d in domains]) / sizes
    flags = []
    diameter_ok = bool(np.all(ratios <= diameter_bound))
    if not diameter_ok:
        flags.append(f"diameter condition: max diam/|domain|^(1/3) = {ratios.max():.4g} > {diameter_bound}")
    fisher_a, cone_ok = [], []
    for i, d in enumerate(domains):
        if not regularity:
            fisher_a.append(float("nan"))
            cone_ok.append(True)
            continue
        try:
            fr = fisher_regularity(d, np.linspace(0.1, 1.0, 10), fisher_samples, seed + i)
            fisher_a.append(fr.a_estimate)
        except NotImplementedError:
            fisher_a.append(float("nan"))
        cr = cone_property_check(d, eps, cone_samples, 32, seed + i)
        cone_ok.append(cr.passed)
        if not cr.passed:
            flags.append(f"cone property fails for domain {i}: witness {cr.witnesses[0].tolist()}")
    coef, err = fit_inverse_powers(sizes, values, order=min(order, len(sizes) - 2))
    return GeneralDomainReport(
        sizes=sizes,
        values=values,
        gaps=values - e_ref,
        e_ref=float(e_ref),
        e_extrapolated=float(coef[0]),
        e_stderr=err,
        decay_exponent=fit_power(sizes, values - e_ref),
        diameter_ratios=ratios,
        diameter_ok=diameter_ok,
        fisher_a=fisher_a,
        cone_ok=cone_ok,
        flags=flags,
    )
