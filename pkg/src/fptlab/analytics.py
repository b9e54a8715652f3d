"""Closed-form transition densities, first-passage laws and survival.

All three base families share one structure: the law of the drifted process
is the driftless law reweighted by ``exp(g(x_end) - g(x_start) - lam*dt)``
where ``g = log_girsanov`` and ``lam = decay``. Killing at ``a`` commutes with
the reweighting, so the absorbed kernel and the first-passage density are the
Brownian ones times that factor. Everything below is evaluated in log space.

Functions accept scalars or numpy arrays for the evaluation coordinate and
return floats for scalar input.
"""
from __future__ import annotations

import math

import numpy as np

from ._numerics import as_output, clamp_probability, log_cosh, log_erfc, log_sinh
from .models import BM, BarrierSetup, DomainError, SpaceTimePoint, Taboo, TanhDrift

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _base(model):
	if not isinstance(model, (BM, TanhDrift, Taboo)):
		raise TypeError(f"expected BM, TanhDrift or Taboo, got {type(model).__name__}")
	return model


def _escape_rate(model) -> float:
	# sqrt(2*decay): exponential rate of the Laplace factor exp(-ell*c)
	if isinstance(model, BM):
		return abs(model.mu)
	if isinstance(model, TanhDrift):
		return model.alpha
	return 0.0


def drift_value(model, p: SpaceTimePoint):
	"""Drift of ``model`` at ``p``; conditioned drifts are evaluated directly."""
	if not isinstance(model, (BM, TanhDrift, Taboo)):
		return model(p.x, p.t)
	return as_output(model.drift(p.x))


def girsanov_weight(model, w_start, w_end, t_start, t_end):
	"""Density of the drifted law w.r.t. driftless paths between two times.

	Depends on the path only through its endpoints for all three families.
	"""
	_base(model)
	if not t_end > t_start:
		raise DomainError("girsanov_weight needs t_end > t_start")
	model.check_state(w_start)
	model.check_state(w_end)
	g = model.log_girsanov(w_end) - model.log_girsanov(w_start)
	return as_output(np.exp(g - model.decay * (t_end - t_start)))


def _log_gauss(dx, s):
	return -0.5 * dx * dx / s - 0.5 * np.log(s) - LOG_SQRT_2PI


def log_propagator_free(model, start: SpaceTimePoint, end_x, end_t):
	"""log of the unkilled transition density.

	For the taboo family the driftless kernel is itself killed at ``b``; the
	result is the full transition density of the taboo process.
	"""
	_base(model)
	s = np.asarray(end_t, dtype=float) - start.t
	x = np.asarray(end_x, dtype=float)
	if np.any(s <= 0):
		raise DomainError("propagator needs end time after start time")
	if isinstance(model, Taboo):
		model.check_state(start.x)
		inside = x < model.b
		xs = np.where(inside, x, start.x)
		kill = -np.expm1(-2.0 * (model.b - start.x) * (model.b - xs) / s)
		g = np.log(model.b - xs) - math.log(model.b - start.x)
		out = g + _log_gauss(xs - start.x, s) + np.log(kill)
		return np.where(inside, out, -np.inf)
	g = model.log_girsanov(x) - model.log_girsanov(start.x)
	return g - model.decay * s + _log_gauss(x - start.x, s)


def propagator_free(model, start: SpaceTimePoint, end: SpaceTimePoint):
	with np.errstate(divide="ignore"):
		return as_output(np.exp(log_propagator_free(model, start, end.x, end.t)))


def log_propagator_absorbed(model, setup: BarrierSetup, start: SpaceTimePoint, end_x, end_t):
	_base(model)
	setup.check_model(model)
	a = setup.a
	if not start.x < a:
		raise DomainError(f"start x={start.x} must lie below the barrier a={a}")
	s = np.asarray(end_t, dtype=float) - start.t
	if np.any(s <= 0):
		raise DomainError("propagator needs end time after start time")
	x = np.asarray(end_x, dtype=float)
	inside = x < a
	xs = np.where(inside, x, start.x)
	g = model.log_girsanov(xs) - model.log_girsanov(start.x)
	# image term written as 1 - exp(-2(a-x1)(a-x2)/s) to keep precision at the barrier
	kill = np.log(-np.expm1(-2.0 * (a - start.x) * (a - xs) / s))
	out = g - model.decay * s + _log_gauss(xs - start.x, s) + kill
	return np.where(inside, out, -np.inf)


def propagator_absorbed(model, setup: BarrierSetup, start: SpaceTimePoint, end: SpaceTimePoint):
	"""Transition density of the process killed at ``a`` (zero for x >= a)."""
	with np.errstate(divide="ignore"):
		return as_output(np.exp(log_propagator_absorbed(model, setup, start, end.x, end.t)))


def log_fpt_density(model, setup: BarrierSetup, t_hit, start: SpaceTimePoint | None = None):
	_base(model)
	setup.check_model(model)
	start = setup.start if start is None else start
	ell = setup.a - start.x
	if not ell > 0:
		raise DomainError(f"start x={start.x} must lie below the barrier a={setup.a}")
	s = np.asarray(t_hit, dtype=float) - start.t
	if np.any(s < 0):
		raise DomainError("first-passage time before the start time")
	pos = s > 0
	ss = np.where(pos, s, 1.0)
	g = model.log_girsanov(setup.a) - model.log_girsanov(start.x)
	out = g - model.decay * ss + math.log(ell) - 1.5 * np.log(ss) - LOG_SQRT_2PI - 0.5 * ell * ell / ss
	return np.where(pos, out, -np.inf)


def fpt_density(model, setup: BarrierSetup, t_hit, start: SpaceTimePoint | None = None):
	"""Density of the first hitting time of ``a``; zero at ``t_hit = t0``."""
	with np.errstate(divide="ignore"):
		return as_output(np.exp(log_fpt_density(model, setup, t_hit, start)))


def log_absorption_probability(model, setup: BarrierSetup, x0=None) -> float:
	_base(model)
	setup.check_model(model)
	x0 = setup.x0 if x0 is None else x0
	ell = setup.a - np.asarray(x0, dtype=float)
	g = model.log_girsanov(setup.a) - model.log_girsanov(x0)
	return g - ell * _escape_rate(model)


def absorption_probability(model, setup: BarrierSetup):
	"""Probability that the barrier is ever reached."""
	return clamp_probability(np.exp(log_absorption_probability(model, setup)))


def log_survival_forever(model, setup: BarrierSetup, x=None):
	"""log of the probability of never reaching ``a`` from ``x`` (-inf if zero).

	Written without subtractive cancellation for each family so that the
	value stays accurate as ``x`` approaches the barrier.
	"""
	_base(model)
	setup.check_model(model)
	return log_survival_forever_at(model, setup.a, setup.x0 if x is None else x)


def log_survival_forever_at(model, a, x):
	x = np.asarray(x, dtype=float)
	d = a - x
	if np.any(d <= 0):
		raise DomainError("survival needs x below the barrier")
	if isinstance(model, BM):
		if model.mu >= 0:
			return np.full_like(d, -np.inf)
		return np.log(-np.expm1(2.0 * model.mu * d))
	if isinstance(model, TanhDrift):
		al, be = model.alpha, model.beta
		return -(al * a + be) + log_sinh(al * d) - log_cosh(al * x + be)
	return np.log(d) - np.log(model.b - x)


def survival_forever(model, setup: BarrierSetup):
	with np.errstate(divide="ignore"):
		return clamp_probability(np.exp(log_survival_forever(model, setup)))


def _absorbed_by(model, setup: BarrierSetup, s):
	# P(T_a <= t0 + s): Laplace inversion of the reweighted inverse-Gaussian law
	ell = setup.a - setup.x0
	c = _escape_rate(model)
	g = model.log_girsanov(setup.a) - model.log_girsanov(setup.x0)
	r = np.sqrt(2.0 * s)
	lo = g - ell * c + log_erfc((ell - c * s) / r)
	hi = g + ell * c + log_erfc((ell + c * s) / r)
	return 0.5 * (np.exp(lo) + np.exp(hi))


def absorbed_by(model, setup: BarrierSetup, T):
	"""Probability of absorption in ``(t0, T]``."""
	_base(model)
	setup.check_model(model)
	s = np.asarray(T, dtype=float) - setup.t0
	if np.any(s < 0):
		raise DomainError("survival horizon before the start time")
	pos = s > 0
	out = np.where(pos, _absorbed_by(model, setup, np.where(pos, s, 1.0)), 0.0)
	return clamp_probability(out)


def survival_to_T(model, setup: BarrierSetup, T):
	"""Probability of not having reached ``a`` by time ``T``."""
	return clamp_probability(1.0 - np.asarray(absorbed_by(model, setup, T)))
