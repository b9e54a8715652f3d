"""Process families, barrier geometry and evaluation points.

Each base family is described by two numbers per state: the log of its
Girsanov numerator ``log_girsanov(x)`` and a constant decay rate ``decay``.
With those, the drift is the spatial derivative of ``log_girsanov`` and the
weight against driftless paths is

    Z = exp(log_girsanov(w_end) - log_girsanov(w_start) - decay * dt).

Every closed form in :mod:`fptlab.analytics` is built from these two pieces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._numerics import log_cosh


class DomainError(ValueError):
	"""Raised when an argument lies outside the domain of a formula."""


class SpaceTimePoint(NamedTuple):
	x: float
	t: float


def _finite(name, value):
	if not math.isfinite(value):
		raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class BM:
	"""Brownian motion with constant drift ``mu``."""

	mu: float = 0.0

	def __post_init__(self):
		_finite("mu", self.mu)

	@property
	def decay(self) -> float:
		return 0.5 * self.mu * self.mu

	def log_girsanov(self, x):
		return self.mu * np.asarray(x, dtype=float)

	def drift(self, x):
		return np.full_like(np.asarray(x, dtype=float), self.mu)

	def check_state(self, x):
		pass


@dataclass(frozen=True)
class TanhDrift:
	"""Drift ``alpha * tanh(alpha * x + beta)`` with ``alpha > 0``."""

	alpha: float
	beta: float = 0.0

	def __post_init__(self):
		_finite("alpha", self.alpha)
		_finite("beta", self.beta)
		if self.alpha <= 0:
			raise DomainError(f"alpha must be positive, got {self.alpha}")

	@property
	def decay(self) -> float:
		return 0.5 * self.alpha * self.alpha

	def log_girsanov(self, x):
		return log_cosh(self.alpha * np.asarray(x, dtype=float) + self.beta)

	def drift(self, x):
		return self.alpha * np.tanh(self.alpha * np.asarray(x, dtype=float) + self.beta)

	def check_state(self, x):
		pass


@dataclass(frozen=True)
class Taboo:
	"""Drift ``-1/(b - x)``; the state ``b`` is never reached."""

	b: float

	def __post_init__(self):
		_finite("b", self.b)

	@property
	def decay(self) -> float:
		return 0.0

	def check_state(self, x):
		x = np.asarray(x, dtype=float)
		if np.any(x >= self.b):
			raise DomainError(f"taboo state b={self.b} reached or exceeded")

	def log_girsanov(self, x):
		self.check_state(x)
		return np.log(self.b - np.asarray(x, dtype=float))

	def drift(self, x):
		self.check_state(x)
		return -1.0 / (self.b - np.asarray(x, dtype=float))


BASE_FAMILIES = (BM, TanhDrift, Taboo)


@dataclass(frozen=True)
class BarrierSetup:
	"""Absorbing level ``a`` and the start ``(x0, t0)`` below it."""

	a: float
	x0: float = 0.0
	t0: float = 0.0

	def __post_init__(self):
		for name in ("a", "x0", "t0"):
			_finite(name, getattr(self, name))
		if not self.x0 < self.a:
			raise DomainError(f"start x0={self.x0} must lie below the barrier a={self.a}")
		if self.t0 < 0:
			raise DomainError(f"t0 must be nonnegative, got {self.t0}")

	@property
	def start(self) -> SpaceTimePoint:
		return SpaceTimePoint(self.x0, self.t0)

	def check_model(self, model):
		if isinstance(model, Taboo) and not model.b > self.a:
			raise DomainError(f"taboo state b={model.b} must exceed the barrier a={self.a}")


def describe(model) -> dict:
	"""Plain-dict description used in run records."""
	if isinstance(model, BM):
		return {"family": "bm", "mu": model.mu}
	if isinstance(model, TanhDrift):
		return {"family": "tanh", "alpha": model.alpha, "beta": model.beta}
	if isinstance(model, Taboo):
		return {"family": "taboo", "b": model.b}
	return {"family": "conditioned", "label": getattr(model, "label", repr(model))}
