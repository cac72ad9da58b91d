import csv
import io
import json
import math

import pytest

from uavbackhaul.cli import CSV_COLUMNS, VALIDATE_COLUMNS, main, parse_values
from uavbackhaul.errors import ConfigError
from uavbackhaul.params import DEFAULT_CONFIG, dumps_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_defaults(capsys):
    code, out, err = run(capsys, "eval")
    assert code == 0
    (row,) = rows(out)
    assert list(row) == list(CSV_COLUMNS)
    assert row["mode"] == "analytic" and row["scheme"] == "aware"
    assert 0.68 < float(row["p_cov"]) < 0.73
    manifest = json.loads(err)
    assert manifest["config"] == DEFAULT_CONFIG and manifest["seed"] == 0


def test_eval_writes_manifest_next_to_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(capsys, "eval", "--set", "tau_a_db=5", "--out", str(out))[0] == 0
    manifest = json.loads((tmp_path / "r.csv.manifest.json").read_text())
    assert manifest["config"]["tau_a_db"] == 5.0
    again = tmp_path / "again.csv"
    assert run(capsys, "eval", "--config", str(tmp_path / "r.csv.manifest.json"), "--out", str(again))[0] == 0
    assert again.read_bytes() == out.read_bytes()


def test_missing_key_names_it(tmp_path, capsys):
    text = "\n".join(line for line in dumps_config(DEFAULT_CONFIG).splitlines()
                      if not line.startswith("lambda_g"))
    path = tmp_path / "c.toml"
    path.write_text(text)
    code, out, err = run(capsys, "eval", "--config", str(path))
    assert code == 2 and "lambda_g" in err and out == ""


@pytest.mark.parametrize("argv", [
    ["eval", "--set", "warp=3"],
    ["eval", "--set", "delta_b=1.5"],
    ["eval", "--scheme", "instantaneous"],
    ["eval", "--trials", "0"],
    ["sweep", "h_u", "--range", "10:20:0"],
    ["sweep", "speed", "--values", "1"],
])
def test_config_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_empty_sweep_is_header_only(capsys):
    code, out, _ = run(capsys, "sweep", "h_u", "--values", "")
    assert code == 0 and out.strip() == ",".join(CSV_COLUMNS)


def test_sweep_keeps_value_order(capsys):
    code, out, _ = run(capsys, "sweep", "tau_a_db", "--values", "10,-5,0", "--workers", "2")
    assert code == 0
    got = rows(out)
    assert [float(r["value"]) for r in got] == [10.0, -5.0, 0.0]
    cov = [float(r["p_cov"]) for r in got]
    assert cov[1] > cov[2] > cov[0]


def test_range_is_stop_inclusive():
    assert parse_values("h_u", None, "50:70:10") == [50.0, 60.0, 70.0]
    assert parse_values("n_u", "3", "5:9:2") == [3, 5, 7, 9]
    with pytest.raises(ConfigError):
        parse_values("h_u", None, "a:b")


def test_simulated_sweep_rerun_from_manifest(tmp_path, capsys):
    out = tmp_path / "s.csv"
    argv = ["sweep", "n_u", "--values", "0,5", "--mode", "both", "--trials", "300", "--seed", "11",
            "--out", str(out)]
    assert run(capsys, *argv)[0] == 0
    got = rows(out.read_text())
    assert [r["mode"] for r in got] == ["analytic", "simulate"] * 2
    sim0 = got[1]
    assert sim0["ci_low"] and float(sim0["a_g"]) == 1.0 and sim0["s_backhaul"] == ""
    again = tmp_path / "s2.csv"
    # Seed and trials come back from the manifest.
    run(capsys, "sweep", "n_u", "--values", "0,5", "--mode", "both",
        "--config", f"{out}.manifest.json", "--out", str(again))
    assert again.read_bytes() == out.read_bytes()


def test_instantaneous_simulation(capsys):
    code, out, _ = run(capsys, "eval", "--mode", "simulate", "--scheme", "instantaneous", "--trials", "200")
    (row,) = rows(out)
    assert code == 0 and row["p_cov_g"] == "" and 0 <= float(row["p_cov"]) <= 1


def test_validate_negative_control(capsys):
    code, out, err = run(capsys, "validate", "--trials", "3000", "--perturb-analytic", "tau_a_db=3")
    assert code == 4 and "validate: FAIL" in err
    assert any(r["status"] == "FAIL" for r in rows(out))


def test_validate_passes_small_run(capsys):
    code, out, err = run(capsys, "validate", "--trials", "3000", "--seed", "2")
    assert code == 0 and "validate: PASS" in err
    assert list(rows(out)[0]) == list(VALIDATE_COLUMNS)


def test_validate_without_uavs(capsys):
    code, out, err = run(capsys, "validate", "--set", "n_u=0", "--trials", "500")
    assert code == 0
    status = {r["metric"]: r["status"] for r in rows(out)}
    assert status["s_backhaul"] == "N/A" and "PASS" in status.values()


def test_reproduce_misalignment(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code, _, err = run(capsys, "reproduce", "coverage-vs-misalignment", "--out", str(out))
    assert code == 0 and "max |dev|" in err
    got = rows(out.read_text())
    at0 = {r["series"]: float(r["computed"]) for r in got if float(r["x"]) == 0.0}
    assert at0["sigma=0"] == pytest.approx(0.714, abs=0.02)
    assert at0["sigma=1"] == pytest.approx(0.387, abs=0.02)
    for r in got:
        assert math.isclose(float(r["deviation"]), float(r["computed"]) - float(r["reference"]), abs_tol=1e-12)


def test_reproduce_skips_simulation_series_in_analytic_mode(capsys):
    code, out, err = run(capsys, "reproduce", "aware-vs-instantaneous")
    assert code == 0 and "skipped instantaneous" in err
    assert {r["kind"] for r in rows(out)} == {"analytic"}
