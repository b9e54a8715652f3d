import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fptlab import cli
from fptlab.tables import fig1_closed_form


def read_csv(path):
	with open(path) as fh:
		first = fh.readline()
		assert first.startswith("# runspec: ")
		spec = json.loads(first[len("# runspec: "):])
		rows = list(csv.reader(fh))
	return spec, rows[0], rows[1:]


def test_eval_csv_embeds_runspec(tmp_path):
	out = tmp_path / "d.csv"
	code = cli.run(["eval", "--model", "tanh", "--alpha", "1", "--xs", "0,1,5", "--ts", "0", "--seed", "17",
		"--out", str(out)])
	assert code == 0
	spec, header, rows = read_csv(out)
	assert header == ["x", "t", "value"]
	assert spec["command"] == "eval" and spec["model"] == {"family": "tanh", "alpha": 1.0, "beta": 0.0}
	assert float(rows[2][2]) == pytest.approx(np.tanh(5.0), rel=1e-15)
	# 17 significant digits round-trip exactly
	assert float(rows[2][2]) == float(np.tanh(5.0))


def test_eval_json_and_quantities(tmp_path):
	out = tmp_path / "f.json"
	assert cli.run(["eval", "--model", "bm", "--quantity", "fpt-density", "--ts", "1", "--format", "json",
		"--out", str(out)]) == 0
	d = json.loads(out.read_text())
	assert d["runspec"]["format"] == "json"
	assert d["rows"][0][2] == pytest.approx(0.241970724519143350, rel=1e-14)
	txt = out.read_text()
	assert txt == cli.dump_json(json.loads(txt))


def test_eval_conditioned_drift(capsys):
	assert cli.run(["eval", "--model", "tanh", "--alpha", "1", "--scheme", "fpt-tanh", "--gamma", "1",
		"--delta", "0.3", "--xs", "0", "--ts", "2"]) == 0
	last = capsys.readouterr().out.strip().splitlines()[-1]
	assert float(last.split(",")[2]) == pytest.approx(np.tanh(0.3), rel=1e-14)


def test_config_file_with_flag_override(tmp_path, capsys):
	cfg = tmp_path / "run.json"
	cfg.write_text(json.dumps({"model": "bm", "mu": 0.5, "xs": "0", "ts": "1"}))
	assert cli.run(["eval", "--config", str(cfg)]) == 0
	assert capsys.readouterr().out.strip().endswith(",0.5")
	assert cli.run(["eval", "--config", str(cfg), "--mu", "0.25"]) == 0
	assert capsys.readouterr().out.strip().endswith(",0.25")
	bad = tmp_path / "bad.json"
	bad.write_text(json.dumps({"nonsense": 1}))
	assert cli.run(["eval", "--config", str(bad)]) == 2


@pytest.mark.parametrize("argv", [
	["eval", "--model", "tanh", "--alpha", "-1"],
	["eval", "--model", "taboo"],
	["eval", "--model", "taboo", "--b", "0.5"],
	["eval", "--x0", "2"],
	["eval", "--scheme", "dirac"],
	["simulate", "--dt", "5", "--horizon", "1"],
	["eval", "--model", "taboo", "--b", "2", "--scheme", "fpt-tanh", "--gamma", "1"],
	["nonsense"],
])
def test_validation_errors_exit_2(argv, capsys):
	assert cli.run(argv) == 2


def test_simulate_writes_summary_and_samples(tmp_path):
	out = tmp_path / "sim.json"
	assert cli.run(["simulate", "--model", "bm", "--paths", "2000", "--dt", "1e-3", "--horizon", "2",
		"--seed", "3", "--out", str(out)]) == 0
	d = json.loads(out.read_text())
	assert d["runspec"]["sim"]["seed"] == 3
	assert d["summary"]["n_paths"] == 2000
	spec, header, rows = read_csv(str(out) + ".fpt.csv")
	assert header == ["tau"] and len(rows) == d["summary"]["n_absorbed"]
	assert spec["sim"]["seed"] == 3


def test_verify_exit_codes(tmp_path):
	ok = cli.run(["verify", "--model", "bm", "--paths", "20000", "--dt", "1e-3", "--horizon", "3",
		"--seed", "1", "--out", str(tmp_path / "ok.json")])
	assert ok == 0
	assert json.loads((tmp_path / "ok.json").read_text())["report"]["pass"] is True
	# tanh conditioned on the BM(0) law is checked against the law it imposes
	cond = cli.run(["verify", "--model", "tanh", "--alpha", "1", "--scheme", "fpt-bm", "--mu", "0",
		"--paths", "20000", "--dt", "1e-3", "--horizon", "3", "--seed", "1", "--out", str(tmp_path / "cond.json")])
	assert cond == 0
	forever = cli.run(["verify", "--model", "tanh", "--scheme", "forever", "--paths", "2000", "--dt", "1e-3",
		"--horizon", "2", "--out", str(tmp_path / "f.json")])
	assert forever == 0
	few = cli.run(["verify", "--model", "bm", "--mu", "-3", "--a", "3", "--paths", "200", "--dt", "1e-2",
		"--horizon", "1", "--out", str(tmp_path / "few.json")])
	assert few == 1


def test_verify_mismatch_exits_1(tmp_path, monkeypatch):
	# simulate tanh but compare with the BM(0) law
	monkeypatch.setattr(cli, "_reference", lambda model, scheme: cli.BM(0.0))
	code = cli.run(["verify", "--model", "tanh", "--alpha", "1", "--paths", "20000", "--dt", "1e-3",
		"--horizon", "3", "--seed", "1", "--out", str(tmp_path / "r.json")])
	assert code == 1
	assert json.loads((tmp_path / "r.json").read_text())["report"]["pass"] is False


def test_fig1(tmp_path):
	out = tmp_path / "fig1.csv"
	assert cli.run(["fig1", "--out", str(out)]) == 0
	spec, header, rows = read_csv(out)
	assert header == ["x", "tanh_drift", "conditioned_drift"]
	assert len(rows) == 1000
	v = np.array(rows, dtype=float)
	assert v[0, 0] == -5.0 and v[-1, 0] < 5.0
	assert v[v[:, 0] == 0.0, 1][0] == 0.0
	assert np.max(np.abs(v[:, 1] - np.tanh(v[:, 0]))) <= 1e-12


def test_fig1_reference_form_is_finite_and_differs():
	x, d0, d1 = cli.fig1_curves()
	sel = (x >= 1) & (x <= 4.9)
	ref_form = fig1_closed_form(x[sel])
	assert np.all(np.isfinite(ref_form))
	assert np.max(np.abs(d1[sel] - ref_form)) > 1e-3


def test_table_check_reports_every_row(tmp_path):
	out = tmp_path / "t.csv"
	code = cli.run(["table-check", "--out", str(out)])
	_, header, rows = read_csv(out)
	assert header == ["row", "max_deviation", "status"]
	assert len(rows) == 17
	failing = [r[0] for r in rows if r[2] == "fail"]
	assert code == (1 if failing else 0)


def test_reciprocity(tmp_path):
	out = tmp_path / "r.csv"
	assert cli.run(["reciprocity", "--out", str(out)]) == 0
	_, _, rows = read_csv(out)
	d = {r[0]: (float(r[1]), r[2]) for r in rows}
	assert d["bm(0.3)<->taboo(2.0)"][0] <= 1e-12
	assert d["bm(0.3)<->taboo(2.0)"][1] == "asserted"
	assert len(d) == 2


def test_entry_point_runs():
	r = subprocess.run([sys.executable, "-m", "fptlab", "eval", "--xs", "0", "--ts", "1"],
		capture_output=True, text=True)
	assert r.returncode == 0
	assert r.stdout.startswith("# runspec: ")
	r = subprocess.run([sys.executable, "-m", "fptlab", "eval", "--a", "-1"], capture_output=True, text=True)
	assert r.returncode == 2 and "error" in r.stderr


def test_finite_horizon_scheme(capsys):
	# conditioning on the tanh(0.5, 0.3) law up to T gives back that drift
	assert cli.run(["eval", "--model", "bm", "--mu", "0.2", "--scheme", "finite", "--T", "2", "--gamma", "0.5",
		"--delta", "0.3", "--xs=-1,0.5", "--ts", "0.5"]) == 0
	out = capsys.readouterr().out.strip().splitlines()
	assert '"kind": "FiniteHorizon"' in out[0]
	vals = [float(line.split(",")[2]) for line in out[2:]]
	assert np.allclose(vals, 0.5 * np.tanh(0.5 * np.array([-1.0, 0.5]) + 0.3), atol=1e-6)
	assert cli.run(["eval", "--scheme", "finite", "--gamma", "0.5"]) == 2
