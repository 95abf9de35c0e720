import json

import numpy as np
import pytest

from kinlag import bundle, lagrangian
from kinlag.cli import main
from kinlag.errors import ValidationError
from kinlag.scenario import SCHEMA, parse_scenario

SHOCK = """
flux: {name: burgers}
initial: {breakpoints: [0.0], values: [1.0, 0.0]}
discretization: {n_v: 64, grid: [8, 8, 4]}
diagnostics: {curves: true, current: true, besov: true}
besov: {deltas: [0.2, 0.4]}
probes: [[0.5, 0.25]]
"""

EULER = """
problem: euler3
initial: {left: [1.0, 0.5], rows: [[0.0, 0.6, 0.0]]}
discretization: {n_v: 64}
"""


def test_defaults():
    scn = parse_scenario("initial: {values: [0.5]}")
    assert scn.n_v == 256 and scn.dv == 1 / 256
    assert scn["discretization"]["dx"] == 1 / 256
    assert 0 <= scn.seed < 2 ** 64
    assert scn["diagnostics"]["current"] is False


@pytest.mark.parametrize("text, path", [
    ("initial: {values: [0.5]}\nextra: 1", "extra"),
    ("initial: {values: [0.5], random: {pieces: 3, colour: 1}}", "initial.random.colour"),
    ("initial: {values: [0.5]}\ndiagnostics: {bogus: true}", "diagnostics.bogus"),
])
def test_unknown_key_named(text, path):
    with pytest.raises(ValidationError, match=f"unknown key: {path}$"):
        parse_scenario(text)


def test_type_and_range_errors():
    with pytest.raises(ValidationError, match="T: expected"):
        parse_scenario("initial: {values: [0.5]}\nT: fast")
    with pytest.raises(ValidationError, match="range"):
        parse_scenario("initial: {values: [0.5]}\nseed: -1")
    with pytest.raises(ValidationError, match="range"):
        parse_scenario(f"initial: {{values: [0.5]}}\nseed: {2 ** 64}")
    with pytest.raises(ValidationError, match="type"):
        parse_scenario("initial: {values: [0.5]}\ndiagnostics: {residual: 1}")


def test_initial_choices():
    with pytest.raises(ValidationError, match="exactly one"):
        parse_scenario("initial: {values: [0.5], random: {pieces: 4}}")
    with pytest.raises(ValidationError, match="one more entry"):
        parse_scenario("initial: {values: [0.5, 1.0]}")


def test_parse_error_line():
    with pytest.raises(ValidationError, match=r"parse: s.yaml at line 2, column 7"):
        parse_scenario("flux: {name: burgers}\nT: 1.0: 2\n", "s.yaml")


def test_vacuum_guard_row():
    text = "problem: euler3\ninitial: {left: [1.0, 0.0], rows: [[0.0, 1.0, 0.0], [0.5, 0.05, 0.0]]}"
    with pytest.raises(ValidationError, match=r"vacuum guard: initial.rows\[1\]"):
        parse_scenario(text)
    with pytest.raises(ValidationError, match=r"vacuum guard: initial.left"):
        parse_scenario("problem: euler3\ninitial: {left: [0.1, 0.0]}")


def test_schema_documented_keys():
    assert set(SCHEMA) >= {"problem", "flux", "initial", "T", "discretization", "diagnostics", "seed", "output"}


@pytest.fixture(scope="module")
def shock_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("shock")
    path, manifest = bundle.run(parse_scenario(SHOCK), out)
    return path, manifest


def test_manifest_contents(shock_bundle):
    path, manifest = shock_bundle
    on_disk = json.loads((path / "manifest.json").read_text())
    assert on_disk == json.loads(bundle.dump_json(manifest))
    assert on_disk["seed"] == 20240607
    assert on_disk["scenario"]["discretization"]["n_v"] == 64
    assert on_disk["constants"]["concentration_fraction"] == 1.0
    assert on_disk["skipped"] == []
    for name in on_disk["files"]:
        assert (path / name).is_file()
    timings = json.loads((path / "timings.json").read_text())
    assert "front_track" in timings


def test_measures_round_trip(shock_bundle):
    path, _ = shock_bundle
    for name in ("measures_mu0.csv", "measures_mu1.csv"):
        text = (path / name).read_text()
        header, _ = bundle.read_csv(path / name)
        assert tuple(header) == bundle.MEASURE_COLUMNS
        mu = bundle.measures_from_csv(path / name)
        back = bundle.csv_text(bundle.MEASURE_COLUMNS, mu.to_rows())
        a = np.array([r[:5] for r in bundle.read_csv(path / name)[1]], float)
        b = np.array([line.split(",")[:5] for line in back.splitlines()[1:]], float)
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=0)
        assert [line.split(",")[5:] for line in text.splitlines()] == [line.split(",")[5:] for line in back.splitlines()]


def test_tables_round_trip(shock_bundle):
    path, _ = shock_bundle
    for name in ("besov.csv", "concentration.csv", "dissipation.csv", "oleinik.csv", "fronts.csv", "snapshots.csv"):
        header, rows = bundle.read_csv(path / name)
        assert bundle.csv_text(header, [[_parse(v) for v in r] for r in rows]) == (path / name).read_text()
    header, _ = bundle.read_csv(path / "besov.csv")
    assert tuple(header) == bundle.BESOV_COLUMNS


def _parse(v):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


def test_curves_round_trip(shock_bundle):
    path, _ = shock_bundle
    text = (path / "curves.jsonl").read_text()
    fam = lagrangian.WeightedCurveFamily.from_json_lines(text)
    assert fam.to_json_lines() == text


def test_jsonl_records(shock_bundle):
    path, _ = shock_bundle
    for name in ("paths.jsonl", "probes.jsonl"):
        lines = (path / name).read_text().splitlines()
        recs = [json.loads(line) for line in lines]
        assert "\n".join(json.dumps(r, sort_keys=True) for r in recs) == "\n".join(lines)
    probe = json.loads((path / "probes.jsonl").read_text().splitlines()[0])
    assert probe["class"] == "jump"


def test_skipped_diagnostics_absent(tmp_path):
    text = SHOCK.replace("{curves: true, current: true, besov: true}", "{concentration: false, besov: false}")
    path, manifest = bundle.run(parse_scenario(text), tmp_path)
    assert not (path / "concentration.csv").exists()
    assert not (path / "besov.csv").exists()
    assert {"concentration", "besov", "curves", "current"} <= set(manifest["skipped"])


def test_output_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("KINLAG_OUT", str(tmp_path / "env"))
    scn = parse_scenario(EULER)
    assert scn.output_dir() == tmp_path / "env"
    assert scn.output_dir(tmp_path / "arg") == tmp_path / "arg"


def test_euler_bundle(tmp_path):
    path, manifest = bundle.run(parse_scenario(EULER), tmp_path)
    c = manifest["constants"]
    assert c["m_max"] <= 0 and c["m_concentration"] == 1.0
    assert c["conservation_error"] < 1e-12
    header, rows = bundle.read_csv(path / "fronts.csv")
    assert header[-1] == "d_E" and len(rows) == c["n_fronts"]


# -- command line -----------------------------------------------------------------------------

def test_cli_riemann(capsys):
    assert main(["riemann", "--flux", "burgers", "--left", "1", "--right", "0"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["kind"] == "shock" and rec["speed_left"] == 0.5


def test_cli_riemann_domain_error(capsys):
    assert main(["riemann", "--flux", "burgers", "--left", "3", "--right", "0"]) == 2
    assert "domain" in capsys.readouterr().err


def test_cli_euler3(capsys):
    assert main(["euler3-riemann", "--left", "1,0.5", "--right", "0.6,0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert main(["euler3-riemann", "--left", "0.1,0", "--right", "1,0"]) == 2
    assert "vacuum guard: --left" in capsys.readouterr().err
    assert main(["euler3-riemann", "--left", "1", "--right", "1,0"]) == 2


def test_cli_sweep(capsys, tmp_path):
    assert main(["sweep-shocks", "--family", "1", "--strengths", "0.001,0.01,0.1"]) == 0
    cap = capsys.readouterr()
    lines = cap.out.splitlines()
    assert lines[0] == "strength,z_jump,sigma_offset,d_E" and len(lines) == 4
    assert "exponents" in json.loads(cap.err)
    out = tmp_path / "sweep.csv"
    assert main(["sweep-shocks", "--family", "2", "--strengths", "0.01,0.1", "--out", str(out)]) == 0
    assert out.read_text().startswith("strength,w_jump,")
    assert main(["sweep-shocks", "--family", "3", "--strengths", "0.1"]) == 2


def test_cli_run_and_errors(tmp_path, capsys):
    good = tmp_path / "s.yaml"
    good.write_text(EULER)
    assert main(["run", str(good), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "manifest.json").is_file()
    bad = tmp_path / "bad.yaml"
    bad.write_text("initial: {values: [0.5]}\nwho: 1\n")
    assert main(["run", str(bad)]) == 2
    assert "unknown key: who" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2
    assert main(["nope"]) == 2


def test_cli_numerical_exit(tmp_path, capsys):
    scn = tmp_path / "big.yaml"
    scn.write_text("initial: {random: {pieces: 50}}\ndiscretization: {max_fronts: 5}\n"
                   "diagnostics: {residual: false, concentration: false, dissipation: false, oleinik: false}\n")
    assert main(["run", str(scn), "--out", str(tmp_path / "o")]) == 3
    assert "complexity budget" in capsys.readouterr().err


def test_cli_decompose(tmp_path, capsys):
    scn = tmp_path / "c.yaml"
    scn.write_text(SHOCK)
    assert main(["decompose-current", str(scn), "--out", str(tmp_path / "d")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["cone_violations"] == 0 and info["mass_error"] < 1e-9
    assert (tmp_path / "d" / "paths.jsonl").is_file()
