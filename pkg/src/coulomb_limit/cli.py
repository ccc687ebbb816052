"""Command-line batch driver.

A config file holds an ``[experiment]`` block (``command``, ``seed``,
``out``), a block named after the command with its parameters, and where
relevant a ``[model]`` block, a ``[sequence]`` block or ``[domain.N]``
blocks. Run ``python -m coulomb_limit CONFIG``.

Exit status: 0 all checks hold, 1 some check failed, 2 configuration error,
3 I/O error.
"""
import argparse
import configparser
import csv
import io
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import limit_engine as engine
from . import suites
from .electrostatics import _fmt
from .geometry import Ball, Box, cone_property_check, domain_from_block, fisher_regularity
from .models import make_model
from .motion import RigidMotion, act_domain, reference_simplex, sample_haar

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# -- parameter schema ------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    kind: str  # int, float, floats, ints, bool, str
    default: object
    lo: float = None
    hi: float = None
    open_lo: bool = False
    choices: tuple = None

    def parse(self, text):
        t = text.strip()
        if self.kind == "int":
            return int(t)
        if self.kind == "float":
            return float(t)
        if self.kind == "floats":
            return tuple(float(v) for v in t.replace(",", " ").split())
        if self.kind == "ints":
            return tuple(int(v) for v in t.replace(",", " ").split())
        if self.kind == "bool":
            if t.lower() in ("true", "yes", "1", "on"):
                return True
            if t.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {t!r}")
        return t

    def check(self, value):
        vals = value if isinstance(value, tuple) else (value,)
        if self.kind in ("floats", "ints") and not vals:
            return "must not be empty"
        if self.choices is not None and value not in self.choices:
            return f"must be one of {', '.join(self.choices)}"
        for v in vals:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                continue
            if not np.isfinite(v):
                return "must be finite"
            if self.lo is not None and (v <= self.lo if self.open_lo else v < self.lo):
                return f"must be {'>' if self.open_lo else '>='} {self.lo:g}, got {v:g}"
            if self.hi is not None and v > self.hi:
                return f"must be <= {self.hi:g}, got {v:g}"
        return None

    def format(self, value):
        if self.kind in ("floats", "ints"):
            return " ".join(repr(v) for v in value)
        if self.kind == "bool":
            return "true" if value else "false"
        return repr(value) if self.kind == "float" else str(value)


def _pos(kind, default, **kw):
    return Param(kind, default, lo=0, open_lo=True, **kw)


def _count(default, lo=1):
    return Param("int", default, lo=lo)


MODEL_KINDS = ("screened-crystal", "constant", "zero", "adversarial")

SCHEMAS = {
    "verify-baxter": {
        "configs": _count(1000),
        "half_width": _count(3),
        "exclusion": _pos("float", 1e-3),
    },
    "verify-gs": {
        "configs": _count(100),
        "max_n": _count(20, lo=2),
        "box": _pos("float", 3.0),
        "ells": _pos("floats", (2.0, 4.0, 8.0)),
        "samples": _count(10_000, lo=1000),
        "c_ref": Param("float", 10.0, lo=0),
        "charges": Param("str", None),
    },
    "regularity": {
        "t_grid": Param("floats", (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0), lo=0, hi=1),
        "samples": _count(100_000, lo=10_000),
        "a_max": _pos("float", 50.0),
        "eps": Param("float", 0.1, lo=0, hi=0.999, open_lo=True),
        "cone_samples": _count(2000),
    },
    "spectral-suite": {
        "L": _pos("float", 12.0),
        "beta": _pos("float", 1.0),
        "mu": Param("float", 1.0),
        "rel_tol": _pos("float", 0.02),
        "betas": _pos("floats", (0.5, 1.0, 2.0, 4.0)),
        "mus": Param("floats", (-2.0, -1.0, 0.0, 1.0, 2.0)),
        "lt_states": _count(50),
        "lt_tol": _pos("float", 1e-6),
        "kato_widths": _pos("floats", (0.01, 0.1, 1.0, 10.0, 100.0)),
    },
    "ssa": {
        "states": _count(1000),
        "dims": Param("str", "2x2x2 2x3x2"),
        "slack": Param("float", 1e-9, lo=0),
    },
    "converge": {
        "ell_grid": _pos("floats", (4.0, 8.0, 16.0, 32.0)),
        "g_samples": _count(50, lo=20),
        "order": Param("int", 2, lo=1, hi=3),
        "rel_tol": _pos("float", 0.01),
        "exponent": Param("float", -1.0),
        "exponent_tol": _pos("float", 0.3),
    },
    "assumptions": {
        "kappa": Param("float", None, lo=0),
        "alpha_const": _pos("float", 1.0),
        "delta": _pos("float", 2.0),
        "subaverage": Param("bool", True),
        "subaverage_samples": _count(400, lo=20),
    },
    "general-domains": {
        "diameter_bound": _pos("float", 4.0),
        "eps": Param("float", 0.1, lo=0, hi=0.999, open_lo=True),
        "regularity": Param("bool", True),
        "rel_tol": _pos("float", 0.02),
        "e_ref": Param("float", None),
    },
    "chain": {
        "L": _pos("float", 32.0),
        "ells": _pos("floats", (2.0, 4.0, 8.0)),
        "samples": _count(200, lo=20),
        "outer": _count(8),
        "alpha_const": _pos("float", 1.0),
    },
}

MODEL_SCHEMA = {
    "kind": Param("str", "screened-crystal", choices=MODEL_KINDS),
    "radius": Param("float", 0.25, lo=0, hi=0.5, open_lo=True),
    "kinetic_const": Param("float", 1.0, lo=0),
    "penalty": Param("float", 1.0, lo=0),
    "c": Param("float", 1.0),
}

SEQUENCE_SCHEMA = {
    "shape": Param("str", "cube", choices=("cube", "ball", "simplex", "slab")),
    "sizes": _pos("floats", (4.0, 8.0, 16.0, 32.0)),
    "center": Param("floats", (0.31, 0.17, 0.43)),
    "thickness": _pos("float", 1.0),
}

EXPERIMENT_SCHEMA = {
    "command": Param("str", None, choices=tuple(SCHEMAS)),
    "seed": Param("int", 0, lo=0),
    "out": Param("str", "."),
}

MODEL_COMMANDS = {"converge", "assumptions", "general-domains", "chain"}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict
    seed: int = 0
    out: str = "."
    model: dict = field(default_factory=dict)
    sequence: dict = field(default_factory=dict)
    domains: tuple = ()  # tuple of (block name, tuple of (key, value) string pairs)


def _read_block(section, schema, where, errors, required=()):
    values = {}
    for key in section:
        if key not in schema:
            errors.append(f"[{where}] unknown key {key!r}")
    for key, p in schema.items():
        if key not in section:
            if key in required:
                errors.append(f"[{where}] missing required key {key!r}")
            elif p.default is not None:
                values[key] = p.default
            continue
        try:
            v = p.parse(section[key])
        except ValueError as exc:
            errors.append(f"[{where}] {key}: cannot parse {section[key]!r} ({exc})")
            continue
        msg = p.check(v)
        if msg:
            errors.append(f"[{where}] {key} {msg}")
        else:
            values[key] = v
    return values


def _parse_dims(text):
    out = []
    for tok in text.split():
        d = tuple(int(v) for v in tok.lower().split("x"))
        if len(d) != 3 or min(d) < 1 or int(np.prod(d)) > 64:
            raise ValueError(f"bad dims {tok!r}: need three positive factors with product <= 64")
        out.append(d)
    if not out:
        raise ValueError("dims must not be empty")
    return tuple(out)


def parse_config(text):
    """Validate a config text; raises :class:`ConfigError` listing every problem."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errors = []
    if not cp.has_section("experiment"):
        raise ConfigError(["missing [experiment] block"])
    exp = _read_block(cp["experiment"], EXPERIMENT_SCHEMA, "experiment", errors, required=("command",))
    command = exp.get("command")
    allowed = {"experiment"}
    params, model, sequence, domains = {}, {}, {}, []
    if command:
        allowed.add(command)
        block = cp[command] if cp.has_section(command) else {}
        params = _read_block(block, SCHEMAS[command], command, errors)
        if command == "ssa" and "dims" in params:
            try:
                _parse_dims(params["dims"])
            except ValueError as exc:
                errors.append(f"[ssa] dims {exc}")
        if command in MODEL_COMMANDS:
            allowed.add("model")
            model = _read_block(cp["model"] if cp.has_section("model") else {}, MODEL_SCHEMA, "model", errors)
        if command == "general-domains":
            allowed.add("sequence")
            sequence = _read_block(cp["sequence"] if cp.has_section("sequence") else {}, SEQUENCE_SCHEMA,
                                   "sequence", errors)
            sizes = sequence.get("sizes", ())
            if any(b <= a for a, b in zip(sizes, sizes[1:])):
                errors.append("[sequence] sizes must be increasing")
            if "center" in sequence and len(sequence["center"]) != 3:
                errors.append("[sequence] center needs three coordinates")
        if command == "converge" and "ell_grid" in params:
            g = params["ell_grid"]
            if any(b <= a for a, b in zip(g, g[1:])):
                errors.append("[converge] ell_grid must be increasing")
            if len(g) < params.get("order", 2) + 1:
                errors.append("[converge] ell_grid needs more points than the fit order")
        if command == "chain" and "ells" in params and "L" in params:
            for ell in params["ells"]:
                if ell > params["L"] / 4:
                    errors.append(f"[chain] ells: {ell:g} exceeds L/4 = {params['L'] / 4:g}")
        if command == "regularity":
            for name in cp.sections():
                if name.startswith("domain."):
                    allowed.add(name)
                    items = tuple(cp[name].items())
                    try:
                        domain_from_block(dict(items))
                    except (KeyError, ValueError, TypeError) as exc:
                        errors.append(f"[{name}] invalid domain: {exc}")
                    domains.append((name, items))
            if not domains:
                errors.append("regularity needs at least one [domain.N] block")
    for name in cp.sections():
        if name not in allowed:
            errors.append(f"unexpected block [{name}]")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(command, params, exp["seed"], exp["out"], model, sequence, tuple(domains))


def serialize_config(cfg):
    """Text form accepted by :func:`parse_config`; ``parse(serialize(c)) == c``."""
    out = ["[experiment]", f"command = {cfg.command}", f"seed = {cfg.seed}", f"out = {cfg.out}", ""]
    blocks = [(cfg.command, SCHEMAS[cfg.command], cfg.params)]
    if cfg.command in MODEL_COMMANDS:
        blocks.append(("model", MODEL_SCHEMA, cfg.model))
    if cfg.command == "general-domains":
        blocks.append(("sequence", SEQUENCE_SCHEMA, cfg.sequence))
    for name, schema, values in blocks:
        out.append(f"[{name}]")
        out.extend(f"{k} = {schema[k].format(v)}" for k, v in values.items())
        out.append("")
    for name, items in cfg.domains:
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in items)
        out.append("")
    return "\n".join(out)


# -- running -------------------------------------------------------------------------

def _model(cfg):
    m = dict(cfg.model)
    kind = m.pop("kind")
    if kind == "screened-crystal":
        return make_model(kind, radius=m["radius"], kinetic_const=m["kinetic_const"], penalty=m["penalty"])
    if kind == "constant":
        return make_model(kind, c=m["c"])
    return make_model(kind)


def _sequence(seq, seed):
    c = np.array(seq["center"])
    shape = seq["shape"]
    if shape == "cube":
        return [Box.cube(s, c) for s in seq["sizes"]]
    if shape == "ball":
        return [Ball(c, r) for r in seq["sizes"]]
    if shape == "slab":
        h = seq["thickness"]
        return [Box(c - [s / 2, s / 2, h / 2], c + [s / 2, s / 2, h / 2]) for s in seq["sizes"]]
    g = sample_haar(seed)
    g = RigidMotion(g.translation + c, g.rotation)
    return [act_domain(g, s, reference_simplex()) for s in seq["sizes"]]


def _run_regularity(cfg, threads):
    p = cfg.params
    rows, checks = [], []
    for i, (name, items) in enumerate(cfg.domains):
        d = domain_from_block(dict(items))
        try:
            fr = fisher_regularity(d, p["t_grid"], p["samples"], cfg.seed + i, a_max=p["a_max"])
        except NotImplementedError:
            fr = None  # no exact boundary distance for this shape; reported as blank
        cr = cone_property_check(d, p["eps"], p["cone_samples"], 48, cfg.seed + i)
        rows.append({"domain": name, "shape": dict(items).get("shape"),
                     "a_estimate": fr.a_estimate if fr else "", "a_stderr": fr.a_stderr if fr else "",
                     "fisher_passed": fr.passed if fr else "", "eps": p["eps"],
                     "cone_passed": cr.passed, "cone_witnesses": len(cr.witnesses)})
        if fr:
            checks.append((f"{name}-fisher", fr.passed, f"a = {fr.a_estimate:.4g} +- {fr.a_stderr:.2g}"))
        w = "" if cr.passed else f"; first witness {np.round(cr.witnesses[0], 6).tolist()}"
        checks.append((f"{name}-cone", cr.passed, f"{len(cr.witnesses)} witnesses{w}"))
    return rows, checks


def _run_converge(cfg, threads):
    p = cfg.params
    E = _model(cfg)
    r = engine.run_simplex_convergence(E, None, p["ell_grid"], p["g_samples"], cfg.seed, threads, p["order"])
    rows = r.rows()
    checks = []
    if E.known_limit is not None:
        if E.known_limit != 0:
            rel = abs(r.e_bar - E.known_limit) / abs(E.known_limit)
            checks.append(("limit", rel <= p["rel_tol"], f"e_bar = {r.e_bar:.6g} +- {r.e_bar_stderr:.2g}, "
                                                       f"known {E.known_limit:.6g}, relative error {rel:.3g}"))
        else:
            checks.append(("limit", abs(r.e_bar) <= p["rel_tol"], f"e_bar = {r.e_bar:.6g}"))
    if np.any(r.spread > 1e-12):
        dec = bool(np.all(np.diff(r.spread) < 0))
        checks.append(("spread-decreasing", dec, " ".join(f"{s:.4g}" for s in r.spread)))
        ok = abs(r.rate_exponent - p["exponent"]) <= p["exponent_tol"]
        checks.append(("rate-exponent", ok, f"{r.rate_exponent:.4g}"))
    rows.append({"ell": "extrapolated", "mean": r.e_bar, "min": "", "max": "", "spread": "", "sem": r.e_bar_stderr})
    return rows, checks


def _run_assumptions(cfg, threads):
    p = cfg.params
    E = _model(cfg)
    acfg = engine.AssumptionConfig(kappa=p.get("kappa"), alpha_const=p["alpha_const"],
                                   delta=p["delta"], subaverage_samples=p["subaverage_samples"])
    rep = engine.check_assumptions(E, None, acfg, cfg.seed, p["subaverage"], threads)
    rows = [{"assumption": k, "passed": v.passed, "worst_margin": v.worst_margin,
             "fitted": "" if v.fitted is None else v.fitted, "witness": v.witness} for k, v in rep.results.items()]
    checks = [(k, v.passed, v.witness or f"worst margin {v.worst_margin:.6g}") for k, v in rep.results.items()]
    return rows, checks


def _run_general(cfg, threads):
    p = cfg.params
    E = _model(cfg)
    e_ref = p.get("e_ref", E.known_limit)
    if e_ref is None:
        raise ConfigError(["[general-domains] e_ref is required for a model without a known limit"])
    doms = _sequence(cfg.sequence, cfg.seed)
    r = engine.run_general_domains(E, doms, e_ref, cfg.seed, p["diameter_bound"], p["eps"], p["regularity"],
                                   threads=threads)
    checks = [("diameter-condition", r.diameter_ok, f"max ratio {r.diameter_ratios.max():.4g}")]
    cone_flags = [f for f in r.flags if f.startswith("cone")]
    checks.append(("regularity", all(r.cone_ok), "; ".join(cone_flags) or "no violations"))
    if e_ref != 0:
        rel = abs(r.e_extrapolated - e_ref) / abs(e_ref)
        checks.append(("limit", bool(rel <= p["rel_tol"]),
                       f"extrapolated {r.e_extrapolated:.6g} +- {r.e_stderr:.2g}, reference {e_ref:.6g}"))
    rows = r.rows()
    rows.append({"size": "extrapolated", "energy_per_volume": r.e_extrapolated, "gap": r.e_extrapolated - e_ref,
                 "diameter_ratio": "", "fisher_a": "", "cone_ok": ""})
    return rows, checks


def _run_chain(cfg, threads):
    p = cfg.params
    E = _model(cfg)
    acfg = engine.AssumptionConfig(alpha_const=p["alpha_const"])
    rows, checks = [], []
    for i, ell in enumerate(p["ells"]):
        c = engine.subaverage_chain(E, None, p["L"], ell, p["samples"], cfg.seed + i, p["outer"], acfg, threads)
        row = {"L": p["L"], "ell": ell}
        row.update(c.__dict__)
        rows.append(row)
        checks.append((f"chain-ell-{ell:g}", c.holds, f"margin {c.margin:.6g}"))
    return rows, checks


def run(cfg, threads=1):
    """Execute a parsed config; returns ``(rows, checks)``."""
    p, s = cfg.params, cfg.seed
    if cfg.command == "verify-baxter":
        return suites.baxter_suite(p["configs"], s, p["half_width"], p["exclusion"], threads)
    if cfg.command == "verify-gs" and "charges" in p:
        try:
            c = suites.load_configuration(p["charges"])
        except ValueError as exc:
            raise ConfigError([f"[verify-gs] charges: {exc}"]) from None
        return suites.gs_single(c, p["ells"], p["samples"], s, p["c_ref"], threads)
    if cfg.command == "verify-gs":
        return suites.gs_suite(p["configs"], s, p["max_n"], p["box"], p["ells"], p["samples"], p["c_ref"], threads)
    if cfg.command == "spectral-suite":
        return suites.spectral_suite(p["L"], p["beta"], p["mu"], p["rel_tol"], p["betas"], p["mus"],
                                     p["lt_states"], p["lt_tol"], p["kato_widths"], s)
    if cfg.command == "ssa":
        return suites.ssa_suite(p["states"], _parse_dims(p["dims"]), s, p["slack"])
    return {
        "regularity": _run_regularity,
        "converge": _run_converge,
        "assumptions": _run_assumptions,
        "general-domains": _run_general,
        "chain": _run_chain,
    }[cfg.command](cfg, threads)


def rows_to_csv(rows):
    buf = io.StringIO()
    keys = list(rows[0]) if rows else []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in keys})
    return buf.getvalue()


def summary_text(cfg, checks):
    lines = [f"command: {cfg.command}", f"seed: {cfg.seed}"]
    lines += [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in checks]
    lines.append("result: " + ("all checks hold" if all(ok for _, ok, _ in checks) else "FAILED"))
    return "\n".join(lines) + "\n"


def main(argv=None):
    ap = argparse.ArgumentParser(prog="coulomb-limit", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="experiment config file")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    args = ap.parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed must be >= 0"])
            cfg = ExperimentConfig(cfg.command, cfg.params, args.seed, cfg.out, cfg.model, cfg.sequence, cfg.domains)
        if "charges" in cfg.params and not os.path.isabs(cfg.params["charges"]):
            # charge files are looked up next to the config file
            path = os.path.join(os.path.dirname(os.path.abspath(args.config)), cfg.params["charges"])
            cfg = ExperimentConfig(cfg.command, {**cfg.params, "charges": path}, cfg.seed, cfg.out, cfg.model,
                                   cfg.sequence, cfg.domains)
        if args.threads < 1:
            raise ConfigError(["--threads must be >= 1"])
        t0 = time.perf_counter()
        rows, checks = run(cfg, args.threads)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = args.out or cfg.out
    try:
        os.makedirs(out, exist_ok=True)
        csv_path = os.path.join(out, f"{cfg.command}.csv")
        with open(csv_path, "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
        summary = summary_text(cfg, checks)
        with open(os.path.join(out, f"{cfg.command}-summary.txt"), "w") as fh:
            fh.write(summary)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(summary)
    print(f"wrote {csv_path} ({time.perf_counter() - t0:.1f} s)")
    failed = [(n, d) for n, ok, d in checks if not ok]
    for n, d in failed:
        print(f"failed check: {n}: {d}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
