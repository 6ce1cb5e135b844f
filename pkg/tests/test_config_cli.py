import json
from fractions import Fraction

import pytest

from cubicsplit import config as cfgmod
from cubicsplit.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from cubicsplit.errors import ConfigParseError, UnknownPreset
from cubicsplit.report import PROFILE_COLUMNS, TORUS_COLUMNS

SMALL_TOML = """
preset = "cubic-golden"
kmax = 30
torus_res = 48
zeta_min = 4.0
zeta_max = 9.0
zeta_step = 0.01
"""


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL_TOML)
    return p


def test_presets():
    g = cfgmod.preset("cubic-golden")
    assert (g.r0, g.r1, g.r2) == (1, -1, 0)
    assert g.delta_override is None
    assert cfgmod.preset("cubic-golden-delta0").delta_override == 0.0
    with pytest.raises(UnknownPreset):
        cfgmod.preset("nope")


def test_json_and_toml_agree(tmp_path):
    data = {"r0": "1", "r1": -1, "r2": 0, "kmax": 50, "eps_values": [1e-6, 1e-8]}
    j = tmp_path / "c.json"
    j.write_text(json.dumps(data))
    t = tmp_path / "c.toml"
    t.write_text('r0 = "1"\nr1 = -1\nr2 = 0\nkmax = 50\neps_values = [1e-6, 1e-8]\n')
    a, b = cfgmod.load(j), cfgmod.load(t)
    assert a == b
    assert a.r0 == Fraction(1) and a.eps_values == (1e-6, 1e-8)


def test_rational_coefficients_parse():
    c = cfgmod.from_mapping({"r0": "3/2", "r1": -1, "r2": 0})
    assert c.r0 == Fraction(3, 2)


@pytest.mark.parametrize("bad", [
    {"r0": 1, "r1": -1},
    {"r0": 1, "r1": -1, "r2": 0, "bogus": 1},
    {"r0": 1, "r1": -1, "r2": 0, "precision_digits": 10},
    {"r0": 1, "r1": -1, "r2": 0, "rho": 0},
    {"r0": 1, "r1": -1, "r2": 0, "window": "round"},
    {"r0": 1, "r1": -1, "r2": 0, "zeta_min": 5, "zeta_max": 2},
    {"r0": 0.5, "r1": -1, "r2": 0},
])
def test_bad_configs_rejected(bad):
    with pytest.raises(ConfigParseError):
        cfgmod.from_mapping(bad)


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigParseError):
        cfgmod.load(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigParseError):
        cfgmod.load(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigParseError):
        cfgmod.load(p)


def test_digest_ignores_out_dir_only():
    g = cfgmod.preset("cubic-golden")
    assert g.digest() == g.replace(out_dir="elsewhere").digest()
    assert g.digest() != g.replace(kmax=10).digest()


def test_cli_koch_json(capsys):
    assert main(["--json", "koch"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["T"] == [[1, 0, 1], [1, 0, 0], [0, 1, 0]]
    assert float(out["lambda"]["value"]) == pytest.approx(1.465571, abs=1e-6)


def test_cli_input_errors(capsys, tmp_path):
    assert main(["--preset", "nope", "koch"]) == EXIT_INPUT
    bad = tmp_path / "field.json"
    bad.write_text(json.dumps({"r0": 1, "r1": 0, "r2": 0}))  # x^3 - 1 has a rational root
    assert main(["--config", str(bad), "koch"]) == EXIT_INPUT
    assert main(["--precision", "8", "koch"]) == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_cli_estimate(capsys):
    assert main(["--json", "estimate", "--eps", "1e-6"]) == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert "eta21" in rec


def test_cli_profile_and_torus_files(tmp_path, small_config, capsys):
    prof = tmp_path / "p.csv"
    tor = tmp_path / "t.csv"
    assert main(["--config", str(small_config), "--no-figures", "profile", "--out", str(prof)]) == EXIT_OK
    assert main(["--config", str(small_config), "--no-figures", "torus", "--out", str(tor)]) == EXIT_OK
    for path, cols in ((prof, PROFILE_COLUMNS), (tor, TORUS_COLUMNS)):
        lines = path.read_text().splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        digest = cfgmod.load(small_config).digest()
        assert f"# config {digest}" in comments
        assert any(ln.startswith("# digits ") for ln in comments)
        header = next(ln for ln in lines if not ln.startswith("#"))
        assert tuple(header.split(",")) == cols
    assert not (tmp_path / "p.png").exists()


def test_analyze_is_deterministic(tmp_path, small_config, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["--config", str(small_config), "--out", str(out), "analyze"]) == EXIT_OK
        runs.append(out)
    names = sorted(p.name for p in runs[0].iterdir())
    assert {"koch.json", "constants.json", "primitives.csv", "profile.csv", "torus.csv",
            "scatter.csv", "estimates.json", "run.json", "profile.png", "torus.png",
            "scatter.png"} <= set(names)
    # run.json records the output directory, every other file must match byte for byte
    for n in names:
        if n != "run.json":
            assert (runs[0] / n).read_bytes() == (runs[1] / n).read_bytes(), n
    m0, m1 = (json.loads((r / "run.json").read_text()) for r in runs)
    assert m0["files"] == m1["files"]
    assert m0["timestamp"] == m1["timestamp"]
    assert m0["config_hash"] == cfgmod.load(small_config).digest()


def test_verify_zero_tolerance_fails(capsys):
    assert main(["verify", "--only", "1", "--tolerance", "0"]) == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().out


def test_verify_single_criterion_passes(capsys):
    assert main(["verify", "--only", "1", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_verify_delta0_marks_non_periodicity_not_applicable(capsys):
    assert main(["--preset", "cubic-golden-delta0", "--json", "verify", "--only", "8"]) == EXIT_OK
    res = json.loads(capsys.readouterr().out)
    checks = res[0]["checks"]
    assert any(c["passed"] is None for c in checks)
