"""Euler–Maruyama ensembles with an absorbing barrier and Girsanov reweighting."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .conditioning import ConditionedDrift
from .models import BM, BarrierSetup, DomainError, Taboo, TanhDrift, describe

BLOCK = 4096
MAX_FAILED_FRACTION = 1e-3


class SimulationError(RuntimeError):
	pass


@dataclass(frozen=True)
class SimConfig:
	dt: float = 1e-4
	horizon: float = 20.0
	n_paths: int = 100_000
	seed: int = 0
	bridge_correction: bool = True
	boundary_guard: float = 1e-9

	def __post_init__(self):
		if not (self.dt > 0 and self.dt < self.horizon):
			raise DomainError("need 0 < dt < horizon")
		if self.n_paths < 1:
			raise DomainError("need n_paths >= 1")
		if not 0 <= self.seed < 2**64:
			raise DomainError("seed must be a 64-bit unsigned integer")
		if not self.boundary_guard > 0:
			raise DomainError("boundary_guard must be positive")

	def as_dict(self):
		return asdict(self)


class PathOutcome(NamedTuple):
	absorbed: bool
	tau: float
	x_end: float
	n_steps: int


@dataclass(frozen=True, eq=False)
class PathEnsemble:
	"""Outcomes of ``n_paths`` simulated paths stored column-wise.

	``status`` holds 1 for absorbed paths and 0 for paths alive at the
	horizon; ``tau`` is meaningful only for absorbed paths and ``x_end`` only
	for survivors.
	"""

	status: np.ndarray
	tau: np.ndarray
	x_end: np.ndarray
	n_steps: np.ndarray
	config: SimConfig
	setup: BarrierSetup
	model_label: str
	n_failed: int = 0

	@property
	def absorbed(self) -> np.ndarray:
		return self.status == K.ABSORBED

	@property
	def absorbed_times(self) -> np.ndarray:
		return self.tau[self.absorbed]

	@property
	def n_absorbed(self) -> int:
		return int(np.count_nonzero(self.absorbed))

	@property
	def absorbed_fraction(self) -> float:
		return self.n_absorbed / len(self.status)

	@property
	def outcomes(self) -> list[PathOutcome]:
		return [PathOutcome(bool(s == K.ABSORBED), float(t), float(x), int(n))
			for s, t, x, n in zip(self.status, self.tau, self.x_end, self.n_steps)]

	def alive_fraction(self, t):
		"""Fraction of paths not absorbed by time ``t``."""
		t = np.asarray(t, dtype=float)
		times = np.sort(self.absorbed_times)
		return 1.0 - np.searchsorted(times, t, side="right") / len(self.status)

	def same_as(self, other: "PathEnsemble") -> bool:
		return all(np.array_equal(getattr(self, f), getattr(other, f))
			for f in ("status", "tau", "x_end", "n_steps"))

	def summary(self) -> dict:
		tt = self.absorbed_times
		return {
			"model": self.model_label,
			"n_paths": int(len(self.status)),
			"n_absorbed": self.n_absorbed,
			"absorbed_fraction": self.absorbed_fraction,
			"n_failed": self.n_failed,
			"tau_mean": float(tt.mean()) if tt.size else None,
			"tau_std": float(tt.std(ddof=1)) if tt.size > 1 else None,
			"config": self.config.as_dict(),
			"setup": asdict(self.setup),
		}


def thread_count() -> int:
	n = os.cpu_count() or 1
	cap = os.environ.get("FPTLAB_THREADS")
	if cap:
		n = min(n, max(1, int(cap)))
	return n


def _resolve(drift):
	"""``(kind, params, singular, upper, terminal, label)`` or ``None`` for a plain callable."""
	if isinstance(drift, BM):
		return K.CONST, (drift.mu,), False, math.inf, None, f"bm(mu={drift.mu})"
	if isinstance(drift, TanhDrift):
		return K.TANH, (drift.alpha, drift.beta), False, math.inf, None, f"tanh(alpha={drift.alpha},beta={drift.beta})"
	if isinstance(drift, Taboo):
		return K.TABOO, (drift.b,), False, drift.b, None, f"taboo(b={drift.b})"
	if isinstance(drift, ConditionedDrift) and drift.kernel is not None:
		kind, params = drift.kernel
		upper = drift.upper if kind == K.TABOO else math.inf
		return kind, params, drift.singular_at_barrier, upper, drift.terminal_time, drift.label
	return None


def simulate_ensemble(drift, setup: BarrierSetup, cfg: SimConfig) -> PathEnsemble:
	"""Simulate ``cfg.n_paths`` paths of ``dX = drift dt + dW`` from ``setup.start``.

	``drift`` is a base family, a :class:`ConditionedDrift` or any callable
	``f(x, t)`` accepting arrays; the first two run on the compiled engine.
	"""
	nsteps = int(round((cfg.horizon - setup.t0) / cfg.dt))
	if nsteps < 1:
		raise DomainError("horizon must lie after the start time")
	n = cfg.n_paths
	status = np.zeros(n, np.int8)
	tau = np.zeros(n)
	xend = np.zeros(n)
	steps = np.zeros(n, np.int64)
	spec = _resolve(drift)
	if spec is None:
		label = getattr(drift, "label", getattr(drift, "__name__", "callable"))
		singular = bool(getattr(drift, "singular_at_barrier", False))
		terminal = getattr(drift, "terminal_time", None)
		upper = getattr(drift, "upper", math.inf) if singular else math.inf
	else:
		kind, params, singular, upper, terminal, label = spec
		params = np.asarray(params, dtype=float)
	terminal_steps = -1
	t_term = 0.0
	if terminal is not None:
		if not setup.t0 < terminal < cfg.horizon:
			raise DomainError("terminal time must lie inside the simulated window")
		terminal_steps = int(math.floor((terminal - setup.t0) / cfg.dt + 1e-9)) - 1
		t_term = float(terminal)
	blocks = [(i, min(BLOCK, n - i)) for i in range(0, n, BLOCK)]

	def run(block):
		i, m = block
		sl = slice(i, i + m)
		if spec is None:
			_run_python(drift, cfg, setup, i, m, nsteps, singular, upper, terminal_steps, t_term,
				status[sl], tau[sl], xend[sl], steps[sl])
		else:
			K.run_block(kind, params, np.uint64(cfg.seed), i, m, setup.x0, setup.t0, cfg.dt, nsteps,
				setup.a, cfg.bridge_correction, singular, upper, cfg.boundary_guard,
				terminal_steps, t_term, status[sl], tau[sl], xend[sl], steps[sl])

	workers = min(thread_count(), len(blocks))
	if workers > 1 and spec is not None:
		with ThreadPoolExecutor(workers) as pool:
			list(pool.map(run, blocks))
	else:
		for b in blocks:
			run(b)
	n_failed = int(np.count_nonzero(status == K.FAILED))
	if n_failed > MAX_FAILED_FRACTION * n:
		raise SimulationError(f"{n_failed} of {n} paths hit a non-finite drift value")
	return PathEnsemble(status, tau, xend, steps, cfg, setup, label, n_failed)


def _run_python(drift, cfg, setup, first, m, nsteps, singular, upper, terminal_steps, t_term,
		status, tau, xend, steps):
	# vectorised fallback for drifts without a compiled kernel
	rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(first,))))
	a, dt = setup.a, cfg.dt
	sq = math.sqrt(dt)
	cap = (min(upper, a) if singular else upper) - cfg.boundary_guard
	x = np.full(m, setup.x0)
	alive = np.ones(m, bool)
	stop = nsteps if terminal_steps < 0 else terminal_steps
	for k in range(stop):
		idx = np.flatnonzero(alive)
		if idx.size == 0:
			break
		t = setup.t0 + k * dt
		xi = x[idx]
		with np.errstate(all="ignore"):
			mu = np.asarray(drift(xi, np.full(idx.size, t)), dtype=float)
		bad = ~np.isfinite(mu)
		if bad.any():
			status[idx[bad]] = K.FAILED
			alive[idx[bad]] = False
			steps[idx[bad]] = k
		ok = ~bad
		idx, xi, mu = idx[ok], xi[ok], mu[ok]
		z = rng.standard_normal(idx.size)
		u = rng.random(idx.size)
		xn = np.minimum(xi + mu * dt + sq * z, cap)
		steps[idx] = k + 1
		if not singular:
			hit = xn >= a
			if cfg.bridge_correction:
				with np.errstate(over="ignore"):
					hit |= u < np.exp(-2.0 * (a - xi) * np.maximum(a - xn, 0.0) / dt)
			status[idx[hit]] = K.ABSORBED
			tau[idx[hit]] = t + 0.5 * dt
			alive[idx[hit]] = False
			xn = np.where(hit, xi, xn)
		x[idx] = xn
	xend[:] = x
	if terminal_steps >= 0:
		status[alive] = K.ABSORBED
		tau[alive] = t_term


class Estimate(NamedTuple):
	mean: float
	stderr: float
	n: int


def simulate_reweighted_expectation(weight_model, h, t: float, cfg: SimConfig, x0: float = 0.0) -> Estimate:
	"""Estimate ``E[h(X(t))]`` under ``weight_model`` from driftless paths.

	Driftless endpoints ``x0 + W(t)`` are sampled exactly and weighted by the
	closed-form Girsanov factor. For the taboo family the weight is set to zero
	on paths whose running maximum reached ``b``; the maximum is drawn from its
	exact law given the endpoint.
	"""
	if not isinstance(weight_model, (BM, TanhDrift, Taboo)):
		raise TypeError("weight_model must be BM, TanhDrift or Taboo")
	if not t > 0:
		raise DomainError("t must be positive")
	rng = np.random.Generator(np.random.Philox(cfg.seed))
	w = x0 + math.sqrt(t) * rng.standard_normal(cfg.n_paths)
	if isinstance(weight_model, Taboo):
		b = weight_model.b
		if not x0 < b:
			raise DomainError("start must lie below the taboo state")
		below = w < b
		ws = np.where(below, w, x0)
		crossed = ~below | (rng.random(cfg.n_paths) < np.exp(-2.0 * (b - x0) * (b - ws) / t))
		z = np.where(crossed, 0.0, (b - ws) / (b - x0))
	else:
		z = np.exp(weight_model.log_girsanov(w) - weight_model.log_girsanov(x0) - weight_model.decay * t)
	v = z * np.asarray(h(w), dtype=float)
	return Estimate(float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)), v.size)


def run_record(drift, setup, cfg) -> dict:
	return {"model": describe(drift), "setup": asdict(setup), "config": cfg.as_dict()}
