"""Stable elementary functions, probability clamping and quadrature helpers."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

LOG2 = math.log(2.0)


class ProbabilityRangeWarning(RuntimeWarning):
	"""A probability left [0, 1] by more than rounding before clamping."""


class QuadratureError(RuntimeError):
	"""Adaptive quadrature failed to reach the requested accuracy."""

	def __init__(self, message, error_estimate):
		super().__init__(f"{message} (error estimate {error_estimate:.3g})")
		self.error_estimate = error_estimate


def log_cosh(z):
	"""log(cosh z) without overflow."""
	z = np.abs(np.asarray(z, dtype=float))
	return z + np.log1p(np.exp(-2.0 * z)) - LOG2


def log_sinh(z):
	"""log(sinh z) for z > 0."""
	z = np.asarray(z, dtype=float)
	return z + np.log(-np.expm1(-2.0 * z)) - LOG2


def log_erfc(z):
	"""log(erfc z), accurate far into both tails."""
	z = np.asarray(z, dtype=float)
	return LOG2 + special.log_ndtr(-math.sqrt(2.0) * z)


def coth(z):
	return 1.0 / np.tanh(z)


def as_output(v):
	"""Return a Python float for 0-d results, the array otherwise."""
	v = np.asarray(v)
	return float(v) if v.ndim == 0 else v


def clamp_probability(p, tol=1e-12):
	p = np.asarray(p, dtype=float)
	if np.any(p < -tol) or np.any(p > 1.0 + tol):
		bad = p[(p < -tol) | (p > 1.0 + tol)]
		warnings.warn(
			f"probability outside [0, 1] before clamping: {bad.ravel()[:3]}",
			ProbabilityRangeWarning,
			stacklevel=2,
		)
	return as_output(np.clip(p, 0.0, 1.0))


def quad(f, lo, hi, *, epsrel=1e-11, limit=400, what="integral", points=None):
	"""scipy ``quad`` with relative-only tolerance and a hard failure mode."""
	with warnings.catch_warnings():
		warnings.simplefilter("error", integrate.IntegrationWarning)
		try:
			val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=limit, points=points)
		except integrate.IntegrationWarning:
			with warnings.catch_warnings():
				warnings.simplefilter("ignore", integrate.IntegrationWarning)
				val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=limit, points=points)
			if not err <= max(1e3 * epsrel * abs(val), 1e-14):
				raise QuadratureError(f"{what} did not converge", err) from None
	return val, err


def integrate_after(f, t0, t1=math.inf, *, split=1.0, epsrel=1e-11, what="time integral"):
	"""Integral of ``f`` over ``(t0, t1)`` for integrands singular at ``t0``.

	The piece next to ``t0`` is mapped by ``u = 1/(t - t0)`` which turns a
	``(t - t0)**-1.5 * exp(-c/(t - t0))`` integrand into a smooth Gaussian-like
	tail. Anything beyond ``t0 + split`` is integrated directly (or, for an
	infinite upper limit, with the same substitution towards ``u = 0``).
	"""
	if t1 <= t0:
		return 0.0
	mid = min(t0 + split, t1)

	def g(u):
		return f(t0 + 1.0 / u) / (u * u)

	head, _ = quad(g, 1.0 / (mid - t0), math.inf, epsrel=epsrel, what=what)
	if mid >= t1:
		return head
	if math.isinf(t1):
		tail, _ = quad(g, 0.0, 1.0 / (mid - t0), epsrel=epsrel, what=what)
	else:
		tail, _ = quad(f, mid, t1, epsrel=epsrel, what=what)
	return head + tail
