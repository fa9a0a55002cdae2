import csv
import json
import subprocess
import sys

import pytest

from twr import cli, presets

FIG3_COLUMNS = ["P_dB", "outage_pro_mc", "outage_pro_mc_se", "outage_lb", "outage_app", "outage_asy"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def fig3_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig3") / "fig3.csv"
    assert cli.main(["sweep", "--sweep", "fig3", "--out", str(out)]) == 0
    return out


def test_fig3_schema(fig3_csv):
    rows = _rows(fig3_csv)
    assert rows[0] == FIG3_COLUMNS
    assert len(rows) == 10
    assert [float(r[0]) for r in rows[1:]] == [0, 5, 10, 15, 20, 25, 30, 35, 40]


def test_fig3_end_to_end_agreement(fig3_csv):
    row = next(r for r in _rows(fig3_csv)[1:] if float(r[0]) == 30.0)
    mc, se, lb = float(row[1]), float(row[2]), float(row[3])
    assert abs(lb - mc) < 3 * se


def test_same_seed_gives_identical_bytes(fig3_csv, tmp_path):
    again = tmp_path / "again.csv"
    assert cli.main(["sweep", "--sweep", "fig3", "--out", str(again)]) == 0
    assert again.read_bytes() == fig3_csv.read_bytes()


def test_seed_override_changes_mc_only(fig3_csv, tmp_path):
    other = tmp_path / "other.csv"
    assert cli.main(["--seed", "99", "sweep", "--sweep", "fig3", "--out", str(other)]) == 0
    a, b = _rows(fig3_csv), _rows(other)
    assert [r[3:] for r in a] == [r[3:] for r in b]
    assert [r[1] for r in a[1:]] != [r[1] for r in b[1:]]


def test_worker_count_does_not_change_output(tmp_path, monkeypatch):
    doc = {"variable": "P_dB", "range": [10, 30, 3], "metrics": ["outage_pro_mc", "ber_mc", "rate_mc"],
           "mc": {"n": 100000, "seed": 5}}
    sw = tmp_path / "sw.json"
    sw.write_text(json.dumps(doc))
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("TWR_THREADS", threads)
        out = tmp_path / f"t{threads}.csv"
        assert cli.main(["sweep", "--sweep", str(sw), "--scenario", str(_scenario_file(tmp_path)),
                         "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def _scenario_file(tmp_path, **over):
    doc = {"P_dB": 20, "v": 3, "D": 0.5, "omega": 0.5,
           "interferers": {n: {"L": 2, "P_I_dB": 0} for n in ("T1", "T2", "R")}}
    doc.update(over)
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(doc))
    return p


def test_malformed_scenario_exit_2_no_output(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "o.json"
    assert cli.main(["optimize", "--scenario", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert cli.main(["optimize", "--scenario", str(tmp_path / "missing.json"), "--out", str(out)]) == 2
    assert not out.exists()


def test_invalid_scenario_exit_3(tmp_path):
    p = _scenario_file(tmp_path, D=1.5)
    out = tmp_path / "o.json"
    assert cli.main(["optimize", "--scenario", str(p), "--out", str(out)]) == 3
    assert not out.exists()


def test_analytic_metric_without_interference_exit_3(tmp_path):
    p = _scenario_file(tmp_path, interferers={n: {"L": 2, "P_I_dB": None} for n in ("T1", "T2", "R")})
    sw = tmp_path / "sw.json"
    sw.write_text(json.dumps({"variable": "P_dB", "range": [10, 20, 2], "metrics": ["outage_lb"]}))
    assert cli.main(["sweep", "--scenario", str(p), "--sweep", str(sw), "--out", str(tmp_path / "x.csv")]) == 3


def test_bad_sweep_document_exit_2(tmp_path):
    sw = tmp_path / "sw.json"
    sw.write_text(json.dumps({"variable": "P_dB", "range": [10, 20, 1], "metrics": ["outage_lb"]}))
    out = tmp_path / "x.csv"
    assert cli.main(["sweep", "--scenario", str(_scenario_file(tmp_path)), "--sweep", str(sw),
                     "--out", str(out)]) == 2
    assert not out.exists()
    sw.write_text(json.dumps({"variable": "P_dB", "range": [10, 20, 3], "metrics": ["nope"]}))
    assert cli.main(["sweep", "--scenario", str(_scenario_file(tmp_path)), "--sweep", str(sw),
                     "--out", str(out)]) == 2


def test_sweep_without_scenario_needs_preset(tmp_path):
    sw = tmp_path / "sw.json"
    sw.write_text(json.dumps({"variable": "P_dB", "range": [10, 20, 3], "metrics": ["outage_lb"]}))
    assert cli.main(["sweep", "--sweep", str(sw), "--out", str(tmp_path / "x.csv")]) == 2


def test_optimize_joint_symmetric(tmp_path):
    out = tmp_path / "o.json"
    assert cli.main(["optimize", "--scenario", str(_scenario_file(tmp_path)), "--mode", "joint",
                     "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["trace"][1]["omega"] == pytest.approx(0.5) and res["trace"][1]["D"] == pytest.approx(0.5)
    assert res["mode"] == "joint" and res["iterations"] == 3


def test_optimize_grid_vs_joint_on_fig6(tmp_path):
    doc = {"P_dB": 20, "v": 3, "D": 0.5, "omega": 0.5,
           "interferers": {"T1": {"L": 5, "P_I_dB": -5}, "T2": {"L": 5, "P_I_dB": 5},
                           "R": {"L": 5, "P_I_dB": -5}}}
    p = tmp_path / "f6.json"
    p.write_text(json.dumps(doc))
    res = {}
    for mode in ("joint", "grid", "omega", "location"):
        out = tmp_path / f"{mode}.json"
        assert cli.main(["optimize", "--scenario", str(p), "--mode", mode, "--out", str(out)]) == 0
        res[mode] = json.loads(out.read_text())
    assert res["grid"]["objective"] <= res["joint"]["objective"]
    assert res["omega"]["d_opt"] == 0.5 and res["location"]["omega_opt"] == 0.5
    assert res["joint"]["outage_asy"] > 0


def test_max_iter_zero_rejected(tmp_path):
    out = tmp_path / "o.json"
    assert cli.main(["optimize", "--scenario", str(_scenario_file(tmp_path)), "--max-iter", "0",
                     "--out", str(out)]) == 2


def test_cdf_subcommand(tmp_path, capsys):
    assert cli.main(["cdf", "--scenario", str(_scenario_file(tmp_path)), "--gamma", "1", "7"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "gamma,cdf_lower_bound"
    vals = [float(line.split(",")[1]) for line in lines[1:]]
    assert 0 < vals[0] < vals[1] < 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "twr.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("twr ")


def test_every_preset_parses():
    from twr import sweep
    for name in sorted(presets.PRESETS):
        scen, doc = presets.get_preset(name)
        spec = sweep.parse_sweep(doc)
        sweep.check_compatible(scen, spec)
