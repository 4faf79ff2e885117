import csv
import json
from importlib import resources

import jsonschema
import pytest

from flownoise import cli


def schema(name):
    return json.loads(resources.files("flownoise").joinpath("schemas", name).read_text())


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sensitivity_csv(tmp_path, capsys):
    path = tmp_path / "s.csv"
    argv = ["sensitivity", "--model", "zm-toy", "--m", "2", "--steps", "8", "--rho-grid", "0.5,0.9,0.99",
            "--replicas", "20000", "--seed", "7", "--out", str(path)]
    code, out, _ = run(argv, capsys)
    assert code == 0 and "exact" in out
    rows = list(csv.DictReader(path.open()))
    assert [r["rho"] for r in rows] == ["0.5", "0.9", "0.99"]
    for r in rows:
        rho, value, se = float(r["rho"]), float(r["estimate"]), float(r["std_error"])
        assert abs(value - rho**9) <= 3 * se
    first = path.read_bytes()
    assert run(argv, capsys)[0] == 0
    assert path.read_bytes() == first


def test_sensitivity_threads_reproduce(tmp_path, capsys):
    outs = []
    for threads in ("1", "3"):
        p = tmp_path / f"t{threads}.json"
        argv = ["sensitivity", "--model", "arratia-lattice", "--m", "8", "--steps", "5", "--rho-grid", "0.5",
                "--replicas", "20000", "--seed", "1", "--threads", threads, "--format", "json", "--out", str(p)]
        assert run(argv, capsys)[0] == 0
        outs.append(p.read_bytes())
        jsonschema.validate(json.loads(outs[-1]), schema("sensitivity.schema.json"))
    assert outs[0] == outs[1]


def test_spectral_json(tmp_path, capsys):
    p = tmp_path / "sp.json"
    code, out, _ = run(["spectral", "--model", "zm-toy", "--m", "4", "--steps", "6", "--out", str(p)], capsys)
    assert code == 0
    obj = json.loads(p.read_text())
    jsonschema.validate(obj, schema("spectral_measure.schema.json"))
    assert obj["inclusion_probability"][:6] == pytest.approx([0.5] * 6)


def test_spectral_stdout_csv(capsys):
    code, out, _ = run(["spectral", "--model", "zm-toy", "--m", "2", "--steps", "2", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines() == ["subset,weight", ",0.0", "0 1 tail,1.0"] or out.startswith("subset,weight")


def test_simulate_csv_and_json(tmp_path, capsys):
    code, out, _ = run(["simulate", "--model", "arratia-lattice", "--m", "8", "--steps", "4", "--starts", "0,2",
                        "--replicas", "2", "--seed", "3"], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 2 * 2 * 5
    p = tmp_path / "sim.json"
    code, _, _ = run(["simulate", "--model", "sticky", "--dt", "0.1", "--lam", "1", "--steps", "3", "--starts", "0,0.5",
                      "--seed", "3", "--format", "json", "--out", str(p)], capsys)
    assert code == 0
    jsonschema.validate(json.loads(p.read_text()), schema("trajectories.schema.json"))


def test_sticky_verify(tmp_path, capsys):
    p = tmp_path / "sv.json"
    code, out, _ = run(["sticky-verify", "--eps", "0.25", "--m-max", "4", "--n-max", "3", "--out", str(p)], capsys)
    assert code == 0
    jsonschema.validate(json.loads(p.read_text()), schema("sticky_verify.schema.json"))


def test_check_passes(tmp_path, capsys):
    p = tmp_path / "c.json"
    code, out, _ = run(["check", "--quick", "--out", str(p)], capsys)
    assert code == 0 and "FAIL" not in out
    jsonschema.validate(json.loads(p.read_text()), schema("check.schema.json"))


def test_blacknoise_small(tmp_path, capsys):
    p = tmp_path / "bn.json"
    code, out, _ = run(["blacknoise", "--m", "256", "--replicas", "1500", "--seed", "2", "--out", str(p)], capsys)
    obj = json.loads(p.read_text())
    jsonschema.validate(obj, schema("report.schema.json"))
    assert code == (0 if obj["verdict"] == "pass" else 1)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["spectral", "--model", "zm-toy", "--m", "4"],
        ["spectral", "--model", "zm-toy", "--m", "4", "--steps", "3", "--unknown"],
        ["spectral", "--model", "zm-toy", "--m", "4", "--ste", "3"],
        ["sensitivity", "--model", "zm-toy", "--m", "2", "--steps", "3", "--rho-grid", "0.5", "--replicas", "500"],
        ["sensitivity", "--model", "zm-toy", "--m", "2", "--steps", "3", "--rho-grid", "1.5", "--replicas", "500", "--seed", "1"],
        ["sensitivity", "--model", "zm-toy", "--m", "1", "--steps", "3", "--rho-grid", "0.5", "--replicas", "500", "--seed", "1"],
        ["simulate", "--model", "sticky-lattice", "--lam", "0.01", "--dt", "1", "--steps", "3", "--seed", "1"],
        ["simulate", "--model", "coal-lattice", "--steps", "3", "--starts", "-1", "--seed", "1"],
        ["blacknoise", "--m", "64", "--eps-grid", "0.0001", "--seed", "1"],
        ["sticky-verify", "--eps", "1.5"],
        ["sticky-verify", "--mc-replicas", "10"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2
    assert err


def test_help_exits_zero(capsys):
    assert cli.run(["--help"]) == 0
    assert "sensitivity" in capsys.readouterr().out


def test_threads_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("FLOWNOISE_THREADS", "0")
    code, _, err = run(["spectral", "--model", "zm-toy", "--m", "2", "--steps", "2"], capsys)
    assert code == 2 and "threads" in err
