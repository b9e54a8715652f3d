"""Command-line front end.

Exit status: 0 success, 1 a verification did not pass, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analytics as an
from .conditioning import (DiracTime, FiniteHorizon, ForeverSurvival, FptOfBM, FptOfTaboo, FptOfTanh,
	conditioned_drift, q_function, reciprocity_check)
from .models import BM, BarrierSetup, DomainError, SpaceTimePoint, Taboo, TanhDrift
from .sim import SimConfig, SimulationError, simulate_ensemble
from .verify import TooFewAbsorbedError, ks_against_fpt, table_identity_sweep

COMMANDS = ("eval", "simulate", "verify", "table-check", "fig1", "reciprocity")
QUANTITIES = ("drift", "propagator-free", "propagator-absorbed", "fpt-density", "survival",
	"absorption", "q")
TABLE_TOL = 1e-10
RECIPROCITY_TOL = 1e-12

DEFAULTS = {
	"model": "bm", "alpha": 1.0, "beta": 0.0, "mu": 0.0, "b": None, "gamma": None, "delta": 0.0,
	"a": 1.0, "x0": 0.0, "t0": 0.0, "T": None, "Tstar": None, "dt": 1e-4, "horizon": 20.0,
	"paths": 100_000, "seed": 0, "out": None, "format": "csv", "scheme": None,
	"quantity": "drift", "xs": "-1:0.9:20", "ts": "1", "checkpoints": None, "num": 1000,
	"samples": None, "no_bridge": False,
}


class UsageError(ValueError):
	pass


@dataclass
class RunSpec:
	command: str
	model: dict
	setup: dict
	scheme: dict | None = None
	sim: dict | None = None
	output_path: str | None = None
	format: str = "csv"
	options: dict = field(default_factory=dict)

	def as_dict(self):
		return asdict(self)


def build_parser() -> argparse.ArgumentParser:
	p = argparse.ArgumentParser(prog="fptlab", description=__doc__)
	p.add_argument("command", choices=COMMANDS)
	p.add_argument("--config", help="JSON run file; flags override its values")
	p.add_argument("--model", choices=("bm", "tanh", "taboo"))
	for name in ("alpha", "beta", "mu", "b", "gamma", "delta", "a", "x0", "t0", "T", "Tstar",
			"dt", "horizon"):
		p.add_argument(f"--{name}", type=float)
	p.add_argument("--paths", type=int)
	p.add_argument("--seed", type=int)
	p.add_argument("--out")
	p.add_argument("--format", choices=("csv", "json"))
	p.add_argument("--scheme", choices=("dirac", "forever", "fpt-bm", "fpt-tanh", "fpt-taboo", "finite"),
		help="finite: the tanh(--gamma, --delta) law observed up to --T")
	p.add_argument("--quantity", choices=QUANTITIES)
	p.add_argument("--xs", help="positions: 'lo:hi:n' or comma list")
	p.add_argument("--ts", help="times: 'lo:hi:n' or comma list")
	p.add_argument("--checkpoints", help="survival checkpoints for verify, comma list")
	p.add_argument("--num", type=int, help="number of fig1 grid points")
	p.add_argument("--samples", help="FPT sample CSV path for simulate")
	p.add_argument("--no-bridge", dest="no_bridge", action="store_const", const=True,
		help="disable the within-step crossing test")
	return p


def merge_options(args) -> dict:
	vals = dict(DEFAULTS)
	if args.config:
		with open(args.config) as fh:
			loaded = json.load(fh)
		unknown = set(loaded) - set(DEFAULTS)
		if unknown:
			raise UsageError(f"unknown keys in run file: {sorted(unknown)}")
		vals.update(loaded)
	for k in DEFAULTS:
		v = getattr(args, k, None)
		if v is not None:
			vals[k] = v
	return vals


def _grid(text) -> np.ndarray:
	text = str(text)
	if ":" in text:
		lo, hi, n = text.split(":")
		return np.linspace(float(lo), float(hi), int(n))
	return np.array([float(v) for v in text.split(",") if v.strip()])


def make_model(o):
	m = o["model"]
	if m == "bm":
		return BM(o["mu"])
	if m == "tanh":
		return TanhDrift(o["alpha"], o["beta"])
	if o["b"] is None:
		raise UsageError("--model taboo needs --b")
	return Taboo(o["b"])


def make_scheme(o):
	s = o["scheme"]
	if s is None:
		return None
	if s == "dirac":
		if o["Tstar"] is None:
			raise UsageError("--scheme dirac needs --Tstar")
		return DiracTime(o["Tstar"])
	if s == "forever":
		return ForeverSurvival()
	if s == "fpt-bm":
		if o["model"] == "bm":
			raise UsageError("fpt-bm takes its mu from --mu, which a bm source already uses")
		return FptOfBM(o["mu"])
	if s == "finite":
		if o["T"] is None or o["gamma"] is None:
			raise UsageError("--scheme finite needs --T and --gamma (and optionally --delta)")
		return FiniteHorizon.of_process(TanhDrift(o["gamma"], o["delta"]),
			BarrierSetup(o["a"], o["x0"], o["t0"]), o["T"])
	if s == "fpt-tanh":
		if o["gamma"] is None:
			raise UsageError("--scheme fpt-tanh needs --gamma (and optionally --delta)")
		return FptOfTanh(o["gamma"], o["delta"])
	if o["model"] == "taboo":
		raise UsageError("fpt-taboo takes its state from --b, which a taboo source already uses")
	if o["b"] is None:
		raise UsageError("--scheme fpt-taboo needs --b")
	return FptOfTaboo(o["b"])


def _scheme_dict(scheme, o=None):
	if scheme is None:
		return None
	if isinstance(scheme, FiniteHorizon):
		return {"kind": "FiniteHorizon", "T": scheme.T, "target": {"family": "tanh",
			"alpha": o["gamma"], "beta": o["delta"]}}
	return {"kind": type(scheme).__name__, **asdict(scheme)}


def _model_dict(model):
	from .models import describe
	return describe(model)


def make_spec(command, o) -> tuple[RunSpec, object, object, BarrierSetup, SimConfig | None]:
	model = make_model(o)
	scheme = make_scheme(o)
	setup = BarrierSetup(o["a"], o["x0"], o["t0"])
	setup.check_model(model)
	cfg = None
	if command in ("simulate", "verify"):
		cfg = SimConfig(dt=o["dt"], horizon=o["horizon"], n_paths=o["paths"], seed=o["seed"],
			bridge_correction=not o["no_bridge"])
	if o["format"] not in ("csv", "json"):
		raise UsageError("--format must be csv or json")
	keep = {"eval": ("quantity", "xs", "ts"), "verify": ("checkpoints",), "fig1": ("num",),
		"simulate": ("samples",)}.get(command, ())
	spec = RunSpec(command, _model_dict(model), asdict(setup), _scheme_dict(scheme, o),
		cfg.as_dict() if cfg else None, o["out"], o["format"], {k: o[k] for k in keep})
	return spec, model, scheme, setup, cfg


# -- output ----------------------------------------------------------------

def _fmt(v):
	if isinstance(v, (float, np.floating)):
		return format(float(v), ".17g")
	return str(v)


def _json_default(v):
	if isinstance(v, np.generic):
		return v.item()
	if isinstance(v, np.ndarray):
		return v.tolist()
	raise TypeError(f"cannot serialise {type(v).__name__}")


def _clean(v):
	# NaN is not valid JSON
	if isinstance(v, dict):
		return {k: _clean(x) for k, x in v.items()}
	if isinstance(v, (list, tuple)):
		return [_clean(x) for x in v]
	if isinstance(v, float) and not math.isfinite(v):
		return None
	return v


def dump_json(obj) -> str:
	return json.dumps(_clean(obj), sort_keys=True, indent=2, default=_json_default) + "\n"


def render_table(spec: RunSpec, header, rows, fmt=None) -> str:
	fmt = spec.format if fmt is None else fmt
	if fmt == "json":
		return dump_json({"runspec": spec.as_dict(), "columns": list(header),
			"rows": [[_clean(float(v)) if isinstance(v, (float, np.floating)) else v for v in r] for r in rows]})
	buf = io.StringIO()
	buf.write("# runspec: " + json.dumps(_clean(spec.as_dict()), sort_keys=True) + "\n")
	w = csv.writer(buf, lineterminator="\n")
	w.writerow(header)
	for r in rows:
		w.writerow([_fmt(v) for v in r])
	return buf.getvalue()


def emit(text: str, path):
	if path:
		with open(path, "w") as fh:
			fh.write(text)
	else:
		sys.stdout.write(text)


# -- commands --------------------------------------------------------------

def cmd_eval(spec, model, scheme, setup, o):
	q = o["quantity"]
	xs, ts = _grid(o["xs"]), _grid(o["ts"])
	rows = []
	if q in ("fpt-density", "survival", "absorption"):
		for t in ts:
			if q == "fpt-density":
				v = an.fpt_density(model, setup, t)
			elif q == "survival":
				v = an.survival_to_T(model, setup, t)
			else:
				v = an.absorption_probability(model, setup)
			rows.append((setup.x0, t, v))
	else:
		if q == "drift" and scheme is not None:
			f = conditioned_drift(model, setup, scheme)
		elif q == "drift":
			def f(x, t):
				return an.drift_value(model, SpaceTimePoint(x, t))
		elif q == "q":
			if scheme is None:
				raise UsageError("--quantity q needs --scheme")
			f = q_function(model, setup, scheme)
		elif q == "propagator-free":
			def f(x, t):
				return an.propagator_free(model, setup.start, SpaceTimePoint(x, t))
		else:
			def f(x, t):
				return an.propagator_absorbed(model, setup, setup.start, SpaceTimePoint(x, t))
		for t in ts:
			for x in xs:
				rows.append((x, t, float(f(x, t))))
	emit(render_table(spec, ("x", "t", "value"), rows), o["out"])
	return 0


def _drift_for(model, scheme, setup):
	return model if scheme is None else conditioned_drift(model, setup, scheme)


def cmd_simulate(spec, model, scheme, setup, cfg, o):
	ens = simulate_ensemble(_drift_for(model, scheme, setup), setup, cfg)
	emit(dump_json({"runspec": spec.as_dict(), "summary": ens.summary()}), o["out"])
	sample_path = o["samples"] or (o["out"] + ".fpt.csv" if o["out"] else None)
	if sample_path:
		times = np.sort(ens.absorbed_times)
		emit(render_table(spec, ("tau",), [(t,) for t in times], fmt="csv"), sample_path)
	return 0


def _reference(model, scheme):
	if scheme is None:
		return model
	if isinstance(scheme, DiracTime):
		return scheme
	if isinstance(scheme, FptOfBM):
		return BM(scheme.mu)
	if isinstance(scheme, FptOfTanh):
		return TanhDrift(scheme.gamma, scheme.delta)
	if isinstance(scheme, FptOfTaboo):
		return Taboo(scheme.b)
	return None


def cmd_verify(spec, model, scheme, setup, cfg, o):
	ens = simulate_ensemble(_drift_for(model, scheme, setup), setup, cfg)
	ref = _reference(model, scheme)
	if isinstance(scheme, FiniteHorizon):
		ref = TanhDrift(o["gamma"], o["delta"])
	if ref is None:
		# forever survival: no path may be absorbed
		ok = ens.n_absorbed == 0
		report = {"n_absorbed": ens.n_absorbed, "absorbed_fraction": ens.absorbed_fraction,
			"pass": ok, "tolerances": {"n_absorbed": 0}}
	else:
		cps = _grid(o["checkpoints"]) if o["checkpoints"] else None
		r = ks_against_fpt(ens, ref, setup, checkpoints=cps)
		report = r.as_dict()
		ok = r.passed
	emit(dump_json({"runspec": spec.as_dict(), "report": report, "summary": ens.summary()}), o["out"])
	return 0 if ok else 1


def cmd_table_check(spec, o):
	rows = table_identity_sweep()
	res = [(rid, dev, "pass" if dev <= TABLE_TOL else "fail") for rid, dev in rows]
	emit(render_table(spec, ("row", "max_deviation", "status"), res), o["out"])
	return 0 if all(r[2] == "pass" for r in res) else 1


def fig1_curves(num=1000, a=5.0, mu=-1.0, alpha=1.0, beta=0.0):
	x = np.linspace(-a, a, num, endpoint=False)
	tanh = TanhDrift(alpha, beta)
	cond = conditioned_drift(BM(mu), BarrierSetup(a), FptOfTanh(alpha, beta))
	return x, np.asarray(tanh.drift(x)), np.asarray(cond(x, np.zeros_like(x)))


def cmd_fig1(spec, o):
	x, d0, d1 = fig1_curves(int(o["num"]))
	emit(render_table(spec, ("x", "tanh_drift", "conditioned_drift"), zip(x, d0, d1)), o["out"])
	return 0


def reciprocity_pairs(a=1.0, mu=0.3, b=2.0, alpha=1.0, beta=0.2, delta=-0.4, n=20):
	setup = BarrierSetup(a)
	x = np.linspace(-2.0, a - 1e-3, n)
	t = np.linspace(0.0, 3.0, n)
	grid = [(xi, ti) for xi in x for ti in t]
	fwd = q_function(BM(mu), setup, FptOfTaboo(b))
	bwd = q_function(Taboo(b), setup, FptOfBM(mu))
	tf = q_function(TanhDrift(alpha, beta), setup, FptOfTanh(alpha, delta))
	tb = q_function(TanhDrift(alpha, delta), setup, FptOfTanh(alpha, beta))
	return [
		(f"bm({mu})<->taboo({b})", reciprocity_check(fwd, bwd, grid), True),
		(f"tanh({alpha},{beta})<->tanh({alpha},{delta})", reciprocity_check(tf, tb, grid), False),
	]


def cmd_reciprocity(spec, o):
	res = reciprocity_pairs()
	rows = [(name, dev, "asserted" if asserted else "reported") for name, dev, asserted in res]
	emit(render_table(spec, ("pair", "max_deviation", "role"), rows), o["out"])
	ok = all(dev <= RECIPROCITY_TOL for _, dev, asserted in res if asserted)
	return 0 if ok else 1


def run(argv=None) -> int:
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as e:
		return int(e.code or 0)
	try:
		o = merge_options(args)
		cmd = args.command
		if cmd in ("table-check", "fig1", "reciprocity"):
			spec = RunSpec(cmd, {}, {}, None, None, o["out"], o["format"],
				{"num": o["num"]} if cmd == "fig1" else {})
			if cmd == "fig1":
				spec.model = {"family": "bm", "mu": -1.0, "target": {"family": "tanh", "alpha": 1.0, "beta": 0.0}}
				spec.setup = {"a": 5.0, "x0": 0.0, "t0": 0.0}
			return {"table-check": cmd_table_check, "fig1": cmd_fig1, "reciprocity": cmd_reciprocity}[cmd](spec, o)
		spec, model, scheme, setup, cfg = make_spec(cmd, o)
		if cmd == "eval":
			return cmd_eval(spec, model, scheme, setup, o)
		if cmd == "simulate":
			return cmd_simulate(spec, model, scheme, setup, cfg, o)
		return cmd_verify(spec, model, scheme, setup, cfg, o)
	except TooFewAbsorbedError as e:
		print(f"fptlab: verification impossible: {e}", file=sys.stderr)
		return 1
	except (DomainError, UsageError, ValueError, TypeError, OSError, json.JSONDecodeError) as e:
		print(f"fptlab: error: {e}", file=sys.stderr)
		return 2
	except SimulationError as e:
		print(f"fptlab: simulation failed: {e}", file=sys.stderr)
		return 1


def main():
	sys.exit(run())
