"""Batch verification suites shared by the command line and the tests.

Each suite returns ``(rows, checks)``: CSV rows (dicts with a fixed key
order) and a list of ``(name, passed, detail)`` checks.
"""
import numpy as np

from ._seeding import ordered_map, rng_for
from .electrostatics import (
    ChargeConfiguration,
    baxter_check,
    graf_schenker_check,
    random_baxter_configuration,
    random_neutral_configuration,
)
from .motion import reference_simplex
from .spectral import (
    SEMICLASSICAL_LT,
    ThermoParams,
    box_free_energy,
    free_gas_limit_density,
    kato_check,
    lieb_thirring_ratio,
    product_state,
    random_slater_state,
    random_tripartite_state,
    ssa_check,
    thermo_bound_ratio,
    thermo_bound_sup,
    weyl_surface_density,
)

KATO_RATIO = np.sqrt(2.0 / (3.0 * np.pi))


def _surface_ratio(simplex):
    from scipy.spatial import ConvexHull

    return float(ConvexHull(simplex.simplex_vertices).area / simplex.volume())


def gs_constant_ceiling(simplex=None):
    """``S / (8 |S|)``, minus the large-ell limit of the implied constant.

    A pair at distance r is split by the tiling with probability
    ``r S / (4 |S| ell) + O(r^2 / ell^2)`` (mean projected area S/4), so when
    every pair is short compared to the tile the energy difference tends to
    ``S / (4 |S| ell) sum_{i<j} z_i z_j = -S / (8 |S| ell) sum z^2`` for a
    neutral configuration.
    """
    return _surface_ratio(simplex or reference_simplex()) / 8.0


def baxter_suite(configs=1000, seed=0, half_width=3, exclusion=1e-3, threads=1):
    def one(i):
        e, nuc = random_baxter_configuration(rng_for(seed, 5, i), half_width, exclusion)
        lhs, rhs, ok = baxter_check(e, nuc)
        return {"config": i, "n_electrons": len(e), "lhs": lhs, "rhs": rhs, "margin": lhs - rhs, "holds": ok}

    rows = ordered_map(one, range(configs), threads)
    bad = [r["config"] for r in rows if not r["holds"]]
    return rows, [("baxter", not bad, f"{len(bad)} violations in {configs} configurations")]


def gs_suite(configs=100, seed=0, max_n=20, box=3.0, ells=(2.0, 4.0, 8.0), samples=10_000, c_ref=10.0,
             threads=1):
    """Random neutral +-1 configurations, N even in 2..max_n, in ``[0, box]^3``.

    Checks: the inequality at every (configuration, ell); and boundedness of
    the implied constant. For a neutral configuration with every pair short
    compared to the tile, the implied constant tends to ``-S/(8|S|)``
    (:func:`gs_constant_ceiling`), so ``C(ell)``, the configuration mean of
    ``-implied``, must stay below that ceiling within 3 standard errors and
    grow sublinearly (``C(ell_max) / C(ell_min) < ell_max / ell_min``).
    """
    simplex = reference_simplex()
    rows = []
    for i in range(configs):
        rng = rng_for(seed, 7, i)
        n = 2 * int(rng.integers(1, max_n // 2 + 1))
        c = random_neutral_configuration(n, box, rng)
        for j, ell in enumerate(ells):
            sub = int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
            r = graf_schenker_check(c, ell, samples, sub, simplex, c_ref, threads=threads)
            row = {"config": i, "n": n}
            row.update(r.row())
            rows.append(row)
    bad = [(r["config"], r["ell"]) for r in rows if not r["holds"]]
    checks = [("gs-inequality", not bad, f"{len(bad)} failures in {len(rows)} cases")]
    ceiling = gs_constant_ceiling(simplex)
    means = []
    for ell in ells:
        v = np.array([-r["implied_constant"] for r in rows if r["ell"] == ell])
        means.append((v.mean(), v.std(ddof=1) / np.sqrt(len(v)) if len(v) > 1 else 0.0, v.max()))
    bounded = all(m <= ceiling + 3 * se for m, se, _ in means)
    lo, hi = means[0][0], means[-1][0]
    sub = len(ells) < 2 or lo <= 0 or hi / lo < max(ells) / min(ells)
    detail = ", ".join(f"C({l:g})={m:.4g}+-{se:.2g} (worst {w:.3g})" for l, (m, se, w) in zip(ells, means))
    checks.append(("gs-constant-bounded", bool(bounded and sub), f"{detail}; ceiling {ceiling:.4g}"))
    return rows, checks


def spectral_suite(L=12.0, beta=1.0, mu=1.0, rel_tol=0.02, betas=(0.5, 1.0, 2.0, 4.0),
                   mus=(-2.0, -1.0, 0.0, 1.0, 2.0), lt_states=50, lt_tol=1e-6, kato_widths=(0.01, 0.1, 1.0, 10.0, 100.0),
                   seed=0):
    rows, checks = [], []

    def add(check, value, reference, passed, **extra):
        rows.append({"check": check, "value": value, "reference": reference, "passed": bool(passed),
                     "params": " ".join(f"{k}={v:g}" for k, v in extra.items())})

    p = ThermoParams(beta, mu)
    f_box = box_free_energy(L, p) / L**3
    f_bulk = free_gas_limit_density(p)
    rel = abs(f_box - f_bulk) / abs(f_bulk)
    add("free-gas-box-vs-bulk", f_box, f_bulk, rel <= rel_tol, L=L, beta=beta, mu=mu)
    checks.append(("free-gas-box-vs-bulk", rel <= rel_tol, f"relative gap {rel:.4g} at L={L:g} (tolerance {rel_tol})"))
    weyl = f_bulk + weyl_surface_density(L, p)
    add("free-gas-weyl-two-term", f_box, weyl, True, L=L, beta=beta, mu=mu)

    f1 = free_gas_limit_density(ThermoParams(1.0, 0.0))
    worst = 0.0
    for b in betas:
        fb = free_gas_limit_density(ThermoParams(b, 0.0))
        err = abs(fb - b**-2.5 * f1) / abs(fb)
        worst = max(worst, err)
        add("free-gas-scaling", fb, b**-2.5 * f1, err <= 1e-8, beta=b, mu=0.0)
    checks.append(("free-gas-scaling", worst <= 1e-8, f"worst relative error {worst:.3g}"))

    ratios = []
    for b in betas:
        for m in mus:
            q = ThermoParams(b, m)
            f = free_gas_limit_density(q)
            ratios.append(thermo_bound_ratio(f, q))
            add("thermo-bound-ratio", ratios[-1], np.nan, True, beta=b, mu=m)
    c_fit, c_sup = max(ratios), thermo_bound_sup()
    add("thermo-bound-constant", c_fit, c_sup, c_fit <= c_sup)
    checks.append(("thermo-bound", c_fit <= c_sup, f"fitted C={c_fit:.6g}, optimal C={c_sup:.6g}"))

    lt = []
    for i in range(lt_states):
        s = random_slater_state(rng_for(seed, 11, i))
        r = lieb_thirring_ratio(s, lt_tol)
        lt.append(r)
        add("lieb-thirring", r, SEMICLASSICAL_LT, r >= SEMICLASSICAL_LT, N=s.N)
    checks.append(("lieb-thirring", min(lt) >= SEMICLASSICAL_LT, f"min ratio {min(lt):.6g}"))

    ks = [kato_check(a)[0] for a in kato_widths]
    for a, r in zip(kato_widths, ks):
        add("kato", r, KATO_RATIO, abs(r - KATO_RATIO) <= 1e-8, a=a)
    ok = max(abs(r - KATO_RATIO) for r in ks) <= 1e-8 and max(ks) - min(ks) <= 1e-12
    checks.append(("kato", ok, f"ratios in [{min(ks):.17g}, {max(ks):.17g}]"))
    return rows, checks


def ssa_suite(states=1000, dims_list=((2, 2, 2), (2, 3, 2)), seed=0, slack=1e-9):
    rows, bad, worst_prod = [], 0, 0.0
    for j, dims in enumerate(dims_list):
        for i in range(states):
            lhs, rhs, ok = ssa_check(random_tripartite_state(dims, rng_for(seed, 13, j, i)), slack)
            bad += not ok
            rows.append({"dims": "x".join(map(str, dims)), "state": i, "lhs": lhs, "rhs": rhs, "gap": rhs - lhs,
                         "holds": ok, "product": False})
        rng = rng_for(seed, 19, j)
        factors = [random_tripartite_state((d, 1, 1), rng).rho for d in dims]
        lhs, rhs, ok = ssa_check(product_state(*factors), slack)
        worst_prod = max(worst_prod, abs(rhs - lhs))
        rows.append({"dims": "x".join(map(str, dims)), "state": -1, "lhs": lhs, "rhs": rhs, "gap": rhs - lhs,
                     "holds": ok, "product": True})
    return rows, [
        ("ssa", bad == 0, f"{bad} violations"),
        ("ssa-product-equality", worst_prod <= 1e-10, f"largest gap {worst_prod:.3g}"),
    ]


def gs_single(c, ells=(2.0, 4.0, 8.0), samples=10_000, seed=0, c_ref=10.0, threads=1):
    """The tile-averaging check for one given configuration."""
    rows = []
    for j, ell in enumerate(ells):
        r = graf_schenker_check(c, ell, samples, seed + j, None, c_ref, threads=threads)
        row = {"config": 0, "n": len(c)}
        row.update(r.row())
        rows.append(row)
    bad = [r["ell"] for r in rows if not r["holds"]]
    return rows, [("gs-inequality", not bad, f"fails at ell = {bad}" if bad else f"holds at {len(rows)} scales")]


def load_configuration(path):
    with open(path) as fh:
        return ChargeConfiguration.from_text(fh.read())
