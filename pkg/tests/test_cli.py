import pytest
from hypothesis import given, settings, strategies as st

from coulomb_limit.cli import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_IO,
    EXIT_OK,
    SCHEMAS,
    ConfigError,
    ExperimentConfig,
    main,
    parse_config,
    rows_to_csv,
    serialize_config,
)


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_minimal_converge_defaults():
    cfg = parse_config("[experiment]\ncommand = converge\n")
    assert cfg.params["ell_grid"] == (4.0, 8.0, 16.0, 32.0)
    assert cfg.params["g_samples"] == 50
    assert cfg.model["kind"] == "screened-crystal" and cfg.model["radius"] == 0.25
    assert cfg.seed == 0


def test_negative_radius_names_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("[experiment]\ncommand = converge\n[model]\nradius = -1\n")
    assert any("radius" in e for e in exc.value.errors)


def test_all_errors_reported():
    text = "[experiment]\ncommand = converge\nbogus = 2\n[model]\nradius = -1\n[converge]\ng_samples = x\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    errs = exc.value.errors
    assert len(errs) == 3
    assert any("bogus" in e for e in errs) and any("radius" in e for e in errs) and any("g_samples" in e for e in errs)


@pytest.mark.parametrize("text,needle", [
    ("[experiment]\ncommand = warp\n", "command"),
    ("[experiment]\nseed = 1\n", "missing required key 'command'"),
    ("[model]\nradius = 1\n", "[experiment]"),
    ("[experiment]\ncommand = ssa\n[model]\nradius = 0.2\n", "unexpected block [model]"),
    ("[experiment]\ncommand = ssa\n[ssa]\ndims = 2x2\n", "dims"),
    ("[experiment]\ncommand = chain\n[chain]\nL = 16\nells = 2 8\n", "exceeds L/4"),
    ("[experiment]\ncommand = converge\n[converge]\nell_grid = 8 4\n", "increasing"),
    ("[experiment]\ncommand = regularity\n", "domain"),
    ("[experiment]\ncommand = regularity\n[domain.0]\nshape = torus\n", "invalid domain"),
    ("[experiment]\ncommand = verify-gs\n[verify-gs]\nsamples = 10\n", "samples"),
    ("[experiment\ncommand = ssa\n", "syntax"),
])
def test_config_errors(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any(needle in e for e in exc.value.errors), exc.value.errors


@pytest.mark.parametrize("command", sorted(SCHEMAS))
def test_round_trip_defaults(command):
    extra = "[domain.0]\nshape = ball\ncenter = 0 0 0\nradius = 1\n" if command == "regularity" else ""
    cfg = parse_config(f"[experiment]\ncommand = {command}\nseed = 5\n{extra}")
    assert parse_config(serialize_config(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 2**31), st.integers(20, 500), st.floats(0.01, 0.5),
    st.lists(st.floats(0.5, 100, allow_nan=False), min_size=4, max_size=6, unique=True),
)
def test_round_trip_values(seed, g, radius, grid):
    grid = tuple(sorted(grid))
    cfg = ExperimentConfig("converge", {**{k: p.default for k, p in SCHEMAS["converge"].items()},
                                        "g_samples": g, "ell_grid": grid}, seed, "out dir",
                           {"kind": "screened-crystal", "radius": radius, "kinetic_const": 1.0, "penalty": 1.0,
                            "c": 1.0})
    assert parse_config(serialize_config(cfg)) == cfg


def test_csv_formatting():
    text = rows_to_csv([{"a": 0.1, "b": 3, "c": True}, {"a": 1 / 3, "b": -1, "c": False}])
    assert text.splitlines() == ["a,b,c", "0.10000000000000001,3,true", "0.33333333333333331,-1,false"]


def test_run_baxter_exit_zero(tmp_path, capsys):
    cfg = _write(tmp_path, "[experiment]\ncommand = verify-baxter\n[verify-baxter]\nconfigs = 30\n")
    assert main([cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    csv = (tmp_path / "o" / "verify-baxter.csv").read_text().splitlines()
    assert csv[0].startswith("config,n_electrons,lhs,rhs") and len(csv) == 31
    assert "PASS baxter" in (tmp_path / "o" / "verify-baxter-summary.txt").read_text()


def test_adversarial_assumptions_exit_nonzero(tmp_path, capsys):
    cfg = _write(tmp_path, "[experiment]\ncommand = assumptions\n[assumptions]\nsubaverage = false\n"
                           "[model]\nkind = adversarial\n")
    assert main([cfg, "--out", str(tmp_path)]) == EXIT_FAIL
    assert "A2" in capsys.readouterr().err


def test_config_error_exit(tmp_path, capsys):
    cfg = _write(tmp_path, "[experiment]\ncommand = converge\n[model]\nradius = -1\n")
    assert main([cfg]) == EXIT_CONFIG
    assert "radius" in capsys.readouterr().err
    ok = _write(tmp_path, "[experiment]\ncommand = ssa\n", "ok.ini")
    assert main([ok, "--threads", "0"]) == EXIT_CONFIG


def test_io_error_exits(tmp_path):
    assert main([str(tmp_path / "missing.ini")]) == EXIT_IO
    cfg = _write(tmp_path, "[experiment]\ncommand = ssa\n[ssa]\nstates = 3\n")
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main([cfg, "--out", str(blocker)]) == EXIT_IO


def test_byte_identical_output(tmp_path):
    cfg = _write(tmp_path, "[experiment]\ncommand = converge\nseed = 4\n[converge]\ng_samples = 20\n"
                           "ell_grid = 4 8 16\n")
    outs = []
    for i, threads in enumerate(("1", "1", "3")):
        d = tmp_path / f"run{i}"
        main([cfg, "--out", str(d), "--threads", threads])
        outs.append((d / "converge.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    d = tmp_path / "other"
    main([cfg, "--out", str(d), "--seed", "5"])
    assert (d / "converge.csv").read_bytes() != outs[0]


def test_regularity_command(tmp_path):
    text = ("[experiment]\ncommand = regularity\n[regularity]\nsamples = 20000\ncone_samples = 300\n"
            "[domain.0]\nshape = cube\nside = 2\n[domain.1]\nshape = ball\ncenter = 0 0 0\nradius = 1\n")
    assert main([_write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "regularity.csv").read_text().splitlines()
    assert len(rows) == 3


def test_general_domains_slab_flagged(tmp_path, capsys):
    text = ("[experiment]\ncommand = general-domains\n[general-domains]\nregularity = false\n"
            "[sequence]\nshape = slab\nsizes = 8 16 32\n")
    assert main([_write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_FAIL
    assert "diameter-condition" in capsys.readouterr().err


def test_verify_gs_from_charge_file(tmp_path):
    (tmp_path / "pair.xyz").write_text("# a dipole\n0 0 0 1\n0.5 0.2 0.1 -1\n1 1 1 1\n1.4 1 1 -1\n")
    cfg = _write(tmp_path, "[experiment]\ncommand = verify-gs\n[verify-gs]\ncharges = pair.xyz\nsamples = 2000\n")
    assert main([cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    assert len((tmp_path / "o" / "verify-gs.csv").read_text().splitlines()) == 4
    missing = _write(tmp_path, "[experiment]\ncommand = verify-gs\n[verify-gs]\ncharges = nope.xyz\n", "m.ini")
    assert main([missing, "--out", str(tmp_path / "o")]) == EXIT_IO
    (tmp_path / "bad.xyz").write_text("0 0 0\n")
    bad = _write(tmp_path, "[experiment]\ncommand = verify-gs\n[verify-gs]\ncharges = bad.xyz\n", "b.ini")
    assert main([bad, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_inline_comments():
    cfg = parse_config("[experiment]\ncommand = verify-baxter   # the Baxter bound\n[verify-baxter]\n"
                       "configs = 12   # a few\n")
    assert cfg.command == "verify-baxter" and cfg.params["configs"] == 12
