"""Q-functions and conditioned drifts.

A source process conditioned on a prescribed first-passage law has drift
``mu(x) + d/dx log Q(x, t)``. For the infinite-horizon schemes the Q-function
has the shape ``Q = T1 + T2``:

* ``T1`` comes from integrating the target FPT density against the ratio of
  source FPT densities. Because every family's FPT density is the driftless
  one times ``exp(g(a) - g(x) - lam*s)``, the integral is a Laplace transform
  of the Brownian FPT law and equals

      G_T(x0) * G_S(x)/G_S(x0) * exp((lam_S - lam_T)(t - t0)) * exp(-(a - x) c_T)

  with ``G(x) = exp(g(a) - g(x))`` and ``c_T = sqrt(2 lam_T)``.
* ``T2 = S_T(inf|x0) * H_S(x, t)`` carries the mass of target paths that
  never hit; ``H_S`` is the source's forever-survival ratio, or its limit
  ``(a-x)/(a-x0) exp(-mu(x-x0) + mu^2 (t-t0)/2)`` when the source is BM with
  ``mu >= 0``.

Differentiating gives ``drift = sig*c_T + (1 - sig)*w_S(x)`` with
``sig = T1/(T1 + T2)`` and ``w_S`` the source's own forever-survival drift.
This is the form evaluated here; it never forms the large exponentials of
the expanded rational expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from . import _kernels as K
from ._numerics import as_output, coth, integrate_after, quad
from .analytics import log_survival_forever, log_survival_forever_at, survival_to_T
from .models import BM, BarrierSetup, DomainError, SpaceTimePoint, Taboo, TanhDrift

BARRIER_GUARD = 1e-12


class UnsupportedPairError(DomainError):
	"""No conditioning branch exists for the requested (source, scheme) pair."""


@dataclass(frozen=True)
class DiracTime:
	"""Absorption exactly at ``t_star``."""

	t_star: float

	def __post_init__(self):
		if not self.t_star > 0:
			raise DomainError("DiracTime needs t_star > 0")


@dataclass(frozen=True)
class ForeverSurvival:
	"""Never reach the barrier."""


@dataclass(frozen=True)
class FptOfBM:
	"""First-passage law of Brownian motion with drift ``mu``."""

	mu: float


@dataclass(frozen=True)
class FptOfTanh:
	"""First-passage law of the tanh-drift process with parameters ``(gamma, delta)``."""

	gamma: float
	delta: float = 0.0

	def __post_init__(self):
		if not self.gamma > 0:
			raise DomainError("FptOfTanh needs gamma > 0")


@dataclass(frozen=True)
class FptOfTaboo:
	"""First-passage law of the taboo process with taboo state ``b``."""

	b: float


@dataclass(frozen=True, eq=False)
class FiniteHorizon:
	"""Prescribed FPT density on ``(t0, T]`` plus the position density at ``T``.

	``gamma_star(Ta)`` and ``p_star(y)`` must be vectorised callables;
	``p_star=None`` means no mass survives. The two must carry total mass one
	together, which is checked here once.
	"""

	T: float
	gamma_star: Callable
	p_star: Callable | None
	a: float
	t0: float = 0.0
	tol: float = 1e-6
	mass_fpt: float = field(init=False, default=float("nan"))
	mass_alive: float = field(init=False, default=float("nan"))

	def __post_init__(self):
		if not self.T > self.t0:
			raise DomainError("FiniteHorizon needs T > t0")
		m_fpt = integrate_after(lambda s: float(self.gamma_star(s)), self.t0, self.T,
			split=0.5 * (self.T - self.t0), epsrel=1e-10, what="target FPT mass")
		m_alive = 0.0
		if self.p_star is not None:
			lo = self.a - 1.0
			m_alive = quad(lambda y: float(self.p_star(y)), -math.inf, lo, epsrel=1e-10)[0]
			m_alive += quad(lambda y: float(self.p_star(y)), lo, self.a, epsrel=1e-10)[0]
		if abs(m_alive - (1.0 - m_fpt)) > self.tol:
			raise DomainError(
				f"target law is not normalised: surviving mass {m_alive:.8g} "
				f"vs 1 - absorbed mass {1.0 - m_fpt:.8g}")
		object.__setattr__(self, "mass_fpt", m_fpt)
		object.__setattr__(self, "mass_alive", m_alive)

	@classmethod
	def of_process(cls, model, setup: BarrierSetup, T: float):
		"""The law of ``model`` itself observed up to ``T``."""
		from .analytics import fpt_density, propagator_absorbed

		start = setup.start
		return cls(T, lambda s: fpt_density(model, setup, s),
			lambda y: propagator_absorbed(model, setup, start, SpaceTimePoint(y, T)),
			setup.a, setup.t0)


class QFunction(NamedTuple):
	evaluator: Callable
	closed_form: bool
	description: str

	def __call__(self, x, t):
		return self.evaluator(x, t)


@dataclass(frozen=True, eq=False)
class ConditionedDrift:
	"""A conditioned drift usable as a drift model.

	``kernel`` is ``(kind, params)`` for the compiled simulator, or ``None``
	when only the Python evaluator exists. ``singular_at_barrier`` marks drifts
	that repel the path from ``a`` so that it is never absorbed there.
	"""

	source: object
	scheme: object
	evaluator: Callable
	label: str
	q: QFunction
	upper: float = math.inf
	kernel: tuple | None = None
	singular_at_barrier: bool = False
	terminal_time: float | None = None

	def __call__(self, x, t):
		x = np.asarray(x, dtype=float)
		if np.any(x >= self.upper - BARRIER_GUARD):
			raise DomainError(f"conditioned drift {self.label} evaluated at or beyond {self.upper}")
		return as_output(self.evaluator(x, np.asarray(t, dtype=float)))


# -- source and target primitives -------------------------------------------

def _source_key(model) -> str:
	if isinstance(model, BM):
		return "bm+" if model.mu >= 0 else "bm-"
	if isinstance(model, TanhDrift):
		return "tanh"
	if isinstance(model, Taboo):
		return "taboo"
	raise TypeError(f"not a base family: {model!r}")


def _target_model(scheme):
	if isinstance(scheme, FptOfBM):
		return BM(scheme.mu)
	if isinstance(scheme, FptOfTanh):
		return TanhDrift(scheme.gamma, scheme.delta)
	if isinstance(scheme, FptOfTaboo):
		return Taboo(scheme.b)
	return None


def _scheme_key(scheme, source=None) -> str:
	if isinstance(scheme, DiracTime):
		return "dirac"
	if isinstance(scheme, FiniteHorizon):
		return "finite-horizon"
	if isinstance(scheme, ForeverSurvival):
		return "forever"
	if isinstance(scheme, FptOfBM):
		return "fpt-bm+" if scheme.mu >= 0 else "fpt-bm-"
	if isinstance(scheme, FptOfTanh):
		if isinstance(source, TanhDrift) and scheme.gamma == source.alpha:
			return "fpt-tanh(gamma=alpha)"
		return "fpt-tanh"
	if isinstance(scheme, FptOfTaboo):
		return "fpt-taboo"
	raise TypeError(f"not a conditioning scheme: {scheme!r}")


# (source key, scheme key) -> (branch form, table row)
DISPATCH = {
	("bm+", "dirac"): ("bridge", "I.1"),
	("bm-", "dirac"): ("bridge", "I.1"),
	("tanh", "dirac"): ("bridge", "I.4"),
	("taboo", "dirac"): ("bridge", "I.6"),
	("bm+", "forever"): ("taboo(a)", "I.2"),
	("bm-", "forever"): ("coth", "I.3"),
	("tanh", "forever"): ("coth", "I.5"),
	("taboo", "forever"): ("taboo(a)", "I.7"),
	("tanh", "fpt-bm+"): ("constant", "II.1"),
	("tanh", "fpt-bm-"): ("mixture", "II.2"),
	("tanh", "fpt-tanh"): ("mixture", "II.3"),
	("tanh", "fpt-tanh(gamma=alpha)"): ("tanh", "II.4"),
	("bm+", "fpt-tanh"): ("mixture", "II.5"),
	("bm+", "fpt-taboo"): ("taboo(b)", "II.6"),
	("bm-", "fpt-tanh"): ("mixture", "II.7"),
	("bm-", "fpt-taboo"): ("mixture", "II.8"),
	("taboo", "fpt-bm+"): ("constant", "II.9"),
	("taboo", "fpt-bm-"): ("mixture", "II.10"),
}
for _s in ("bm+", "bm-", "tanh", "taboo"):
	DISPATCH[(_s, "finite-horizon")] = ("finite-horizon", None)


def supported_pairs():
	return sorted(DISPATCH)


def branch_for(source, scheme):
	"""``(label, form, table_row)`` of the branch serving ``(source, scheme)``."""
	key = (_source_key(source), _scheme_key(scheme, source))
	if key not in DISPATCH:
		pairs = ", ".join(f"{s} on {c}" for s, c in supported_pairs())
		raise UnsupportedPairError(f"no conditioning branch for {key[0]} on {key[1]}; supported: {pairs}")
	form, row = DISPATCH[key]
	return f"{key[0]}|{key[1]}", form, row


def _escape_rate(model) -> float:
	if isinstance(model, BM):
		return abs(model.mu)
	if isinstance(model, TanhDrift):
		return model.alpha
	return 0.0


class _Mixture:
	"""The ``T1 + T2`` infinite-horizon Q-function and its drift."""

	def __init__(self, source, target, setup: BarrierSetup):
		self.source = source
		self.a = a = setup.a
		self.x0 = x0 = setup.x0
		self.t0 = setup.t0
		if target is None:
			self.c = 0.0
			self.lam_t = 0.0
			self.log_g_t = -math.inf
			self.log_s_t = 0.0
		else:
			setup.check_model(target)
			self.c = _escape_rate(target)
			self.lam_t = target.decay
			self.log_g_t = float(target.log_girsanov(a) - target.log_girsanov(x0))
			with np.errstate(divide="ignore"):
				self.log_s_t = float(log_survival_forever(target, setup))
		setup.check_model(source)
		self.dlam = source.decay - self.lam_t
		self.code = {"bm+": K.SRC_BM_POS, "bm-": K.SRC_BM_NEG, "tanh": K.SRC_TANH,
			"taboo": K.SRC_TABOO}[_source_key(source)]
		self.h0 = float(self._hx(np.float64(x0), np.float64(self.t0)))
		self.lgn0 = float(source.log_girsanov(x0))
		# D(x, t) = log T1 - log T2 = C0 - g_S(x) + dlam*t + c*x - hx(x, t)
		self.C0 = (self.log_g_t + self.lgn0 - self.dlam * self.t0 - self.c * a
			- self.log_s_t + self.h0)

	def _hx(self, x, t):
		# x,t-dependent part of log H_S
		s, a = self.source, self.a
		d = a - x
		if self.code == K.SRC_BM_POS:
			return np.log(d) - s.mu * x + 0.5 * s.mu * s.mu * t
		return log_survival_forever_at(s, a, x)

	def _w(self, x):
		s, d = self.source, self.a - x
		if self.code == K.SRC_BM_NEG:
			return s.mu * coth(-s.mu * d)
		if self.code == K.SRC_TANH:
			return -s.alpha * coth(s.alpha * d)
		return -1.0 / d

	def log_terms(self, x, t):
		x = np.asarray(x, dtype=float)
		t = np.asarray(t, dtype=float)
		lgn = self.source.log_girsanov(x)
		log_t1 = self.log_g_t + self.lgn0 - lgn + self.dlam * (t - self.t0) - (self.a - x) * self.c
		log_t2 = self.log_s_t + self._hx(x, t) - self.h0
		return log_t1, log_t2

	def q(self, x, t):
		with np.errstate(divide="ignore", over="ignore"):
			return np.logaddexp(*self.log_terms(x, t))

	def drift(self, x, t):
		x = np.asarray(x, dtype=float)
		with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
			log_t1, log_t2 = self.log_terms(x, t)
			dd = log_t1 - log_t2
			sig = special.expit(dd)
			rest = special.expit(-dd)
			w = np.where(rest > 0, self._w(x), 0.0)
		return sig * self.c + rest * w

	def kernel(self):
		s = self.source
		p1 = {K.SRC_BM_POS: getattr(s, "mu", 0.0), K.SRC_BM_NEG: getattr(s, "mu", 0.0),
			K.SRC_TANH: getattr(s, "alpha", 0.0), K.SRC_TABOO: getattr(s, "b", 0.0)}[self.code]
		p2 = s.beta if self.code == K.SRC_TANH else 0.0
		return K.MIXTURE, (float(self.code), p1, p2, self.a, self.C0, self.dlam, self.c)


def _forever_mixture(source, setup):
	m = _Mixture(source, None, setup)
	if not (m.code == K.SRC_BM_POS or math.isfinite(float(log_survival_forever(source, setup)))):
		raise DomainError("source never survives forever")
	return m


# -- branch builders --------------------------------------------------------

def _bridge_q(source, setup, t_star):
	a, x0, t0 = setup.a, setup.x0, setup.t0
	g0 = float(source.log_girsanov(x0))

	def q(x, t):
		x = np.asarray(x, dtype=float)
		t = np.asarray(t, dtype=float)
		u, u0 = t_star - t, t_star - t0
		lr = (g0 - source.log_girsanov(x) + source.decay * (t - t0) + np.log((a - x) / (a - x0))
			- 1.5 * np.log(u / u0) - 0.5 * (a - x) ** 2 / u + 0.5 * (a - x0) ** 2 / u0)
		return np.exp(lr)

	return q


def bridge_drift(a, t_star, x, t):
	d = a - np.asarray(x, dtype=float)
	return -1.0 / d + d / (t_star - np.asarray(t, dtype=float))


def conditioned_drift(source, setup: BarrierSetup, scheme) -> ConditionedDrift:
	"""Build the conditioned drift of ``source`` for ``scheme``.

	Raises :class:`UnsupportedPairError` for pairs outside the dispatch table.
	"""
	label, form, _ = branch_for(source, scheme)
	setup.check_model(source)
	a = setup.a

	if form == "bridge":
		ts = scheme.t_star
		if not ts > setup.t0:
			raise DomainError("DiracTime needs t_star after the start time")

		def ev(x, t):
			if np.any(t >= ts):
				raise DomainError("bridge drift evaluated at or after t_star")
			return bridge_drift(a, ts, x, t)

		q = QFunction(_bridge_q(source, setup, ts), True, "FPT density ratio at t_star")
		return ConditionedDrift(source, scheme, ev, label, q, a, (K.BRIDGE, (a, ts)), True, ts)

	if form == "finite-horizon":
		fh = _FiniteHorizonQ(source, setup, scheme)
		q = QFunction(np.vectorize(fh.q, otypes=[float]), False, "finite-horizon quadrature")
		return ConditionedDrift(source, scheme, np.vectorize(fh.drift, otypes=[float]), label, q, a)

	if isinstance(scheme, ForeverSurvival):
		m = _forever_mixture(source, setup)
		q = QFunction(lambda x, t: np.exp(m.log_terms(x, t)[1]), True, "forever-survival ratio")
		if form == "taboo(a)":
			return ConditionedDrift(source, scheme, lambda x, t: -1.0 / (a - x) + 0.0 * t,
				label, q, a, (K.INVERSE, (a,)), True)
		k = source.alpha if isinstance(source, TanhDrift) else -source.mu
		return ConditionedDrift(source, scheme, lambda x, t: -k * coth(k * (a - x)) + 0.0 * t,
			label, q, a, (K.COTH, (k, a)), True)

	target = _target_model(scheme)
	m = _Mixture(source, target, setup)
	q = QFunction(lambda x, t: np.exp(m.q(x, t)), True, "FPT ratio integral plus survival ratio")
	if form == "constant":
		mu = scheme.mu
		return ConditionedDrift(source, scheme, lambda x, t: mu + 0.0 * (x + t), label, q,
			kernel=(K.CONST, (mu,)))
	if form == "tanh":
		g, dl = scheme.gamma, scheme.delta
		return ConditionedDrift(source, scheme, lambda x, t: g * np.tanh(g * x + dl) + 0.0 * t,
			label, q, kernel=(K.TANH, (g, dl)))
	if form == "taboo(b)":
		b = scheme.b
		return ConditionedDrift(source, scheme, lambda x, t: -1.0 / (b - x) + 0.0 * t,
			label, q, b, (K.TABOO, (b,)))
	return ConditionedDrift(source, scheme, m.drift, label, q, a, m.kernel())


def q_function(source, setup: BarrierSetup, scheme) -> QFunction:
	return conditioned_drift(source, setup, scheme).q


# -- finite horizon ---------------------------------------------------------

class _FiniteHorizonQ:
	"""Quadrature evaluation of the finite-horizon Q and of its log-derivative.

	The x-derivative is taken under the integral sign. The source drift then
	cancels between ``mu(x)`` and the derivative of the source density ratio,
	so the returned drift does not depend on the source family.
	"""

	def __init__(self, source, setup: BarrierSetup, scheme: FiniteHorizon):
		if scheme.a != setup.a or scheme.t0 != setup.t0:
			raise DomainError("FiniteHorizon target was built for a different barrier or start time")
		setup.check_model(source)
		self.s, self.setup, self.scheme = source, setup, scheme
		self.a, self.x0, self.t0, self.T = setup.a, setup.x0, setup.t0, scheme.T

	def _common(self, x, t):
		s = self.s
		return float(s.log_girsanov(self.x0) - s.log_girsanov(x)) + s.decay * (t - self.t0)

	def _fpt_terms(self, x, t, ta):
		# log of FPT(ta|x,t)/FPT(ta|x0,t0) and its x-derivative plus mu_S(x)
		a, x0, t0 = self.a, self.x0, self.t0
		u, u0 = ta - t, ta - t0
		lr = (self._common(x, t) + math.log((a - x) / (a - x0)) - 1.5 * math.log(u / u0)
			- 0.5 * (a - x) ** 2 / u + 0.5 * (a - x0) ** 2 / u0)
		return lr, -1.0 / (a - x) + (a - x) / u

	def _prop_terms(self, x, t, y):
		a, x0 = self.a, self.x0
		s, s0 = self.T - t, self.T - self.t0
		k = 2.0 * (a - x) * (a - y) / s
		k0 = 2.0 * (a - x0) * (a - y) / s0
		lr = (self._common(x, t) - 0.5 * (y - x) ** 2 / s + 0.5 * (y - x0) ** 2 / s0
			- 0.5 * math.log(s / s0) + math.log(-math.expm1(-k)) - math.log(-math.expm1(-k0)))
		return lr, (y - x) / s - 2.0 * (a - y) / s * math.exp(-k) / -math.expm1(-k)

	def _check(self, x, t):
		if not x < self.a - BARRIER_GUARD:
			raise DomainError("finite-horizon Q needs x < a")
		if not t < self.T:
			raise DomainError("finite-horizon Q needs t < T")

	def _integrals(self, x, t, with_drift):
		self._check(x, t)
		sch = self.scheme
		eps = 1e-11

		def fa(ta):
			lr, dv = self._fpt_terms(x, t, ta)
			v = float(sch.gamma_star(ta)) * math.exp(lr)
			return v * dv if with_drift else v

		total = integrate_after(fa, t, self.T, split=0.5 * (self.T - t), epsrel=eps,
			what="finite-horizon FPT integral")
		if sch.p_star is not None:
			def fb(y):
				if y >= self.a:
					return 0.0
				lr, dv = self._prop_terms(x, t, y)
				v = float(sch.p_star(y)) * math.exp(lr)
				return v * dv if with_drift else v

			lo = min(x, self.x0) - 1.0
			total += quad(fb, -math.inf, lo, epsrel=eps, what="finite-horizon position integral")[0]
			total += quad(fb, lo, self.a, epsrel=eps, what="finite-horizon position integral")[0]
		return total

	def q(self, x, t):
		return self._integrals(float(x), float(t), False)

	def drift(self, x, t):
		x, t = float(x), float(t)
		return self._integrals(x, t, True) / self._integrals(x, t, False)


# -- named operations --------------------------------------------------------

def _pt(p):
	return p.x, p.t


def q_finite_horizon(source, setup: BarrierSetup, scheme, p: SpaceTimePoint) -> float:
	"""Finite-horizon Q at ``p``; a :class:`DiracTime` scheme uses its closed form."""
	if isinstance(scheme, DiracTime):
		if not p.t < scheme.t_star:
			raise DomainError("Q needs t < t_star")
		return as_output(_bridge_q(source, setup, scheme.t_star)(p.x, p.t))
	return _FiniteHorizonQ(source, setup, scheme).q(*_pt(p))


def drift_finite_horizon(source, setup: BarrierSetup, scheme, p: SpaceTimePoint) -> float:
	if isinstance(scheme, DiracTime):
		return conditioned_drift(source, setup, scheme)(*_pt(p))
	return _FiniteHorizonQ(source, setup, scheme).drift(*_pt(p))


def drift_forever_survival(source, setup: BarrierSetup, p: SpaceTimePoint):
	return conditioned_drift(source, setup, ForeverSurvival())(*_pt(p))


def drift_tanh_on_bm_fpt(source: TanhDrift, setup: BarrierSetup, mu: float, p: SpaceTimePoint):
	return conditioned_drift(source, setup, FptOfBM(mu))(*_pt(p))


def drift_tanh_on_tanh_fpt(source: TanhDrift, setup: BarrierSetup, target, p: SpaceTimePoint):
	return conditioned_drift(source, setup, FptOfTanh(*target))(*_pt(p))


def drift_bm_on_tanh_fpt(source: BM, setup: BarrierSetup, target, p: SpaceTimePoint):
	return conditioned_drift(source, setup, FptOfTanh(*target))(*_pt(p))


def drift_bm_on_taboo_fpt(source: BM, setup: BarrierSetup, b_target: float, p: SpaceTimePoint):
	return conditioned_drift(source, setup, FptOfTaboo(b_target))(*_pt(p))


def drift_taboo_on_bm_fpt(source: Taboo, setup: BarrierSetup, mu: float, p: SpaceTimePoint):
	return conditioned_drift(source, setup, FptOfBM(mu))(*_pt(p))


def q_forever_and_partial(source, setup: BarrierSetup, scheme, p: SpaceTimePoint):
	"""Closed-form Q for forever survival and for the FPT-law schemes."""
	if isinstance(scheme, (DiracTime, FiniteHorizon)):
		raise UnsupportedPairError("use q_finite_horizon for finite-horizon schemes")
	return as_output(q_function(source, setup, scheme)(*_pt(p)))


def _require_origin(setup):
	if setup.x0 != 0.0 or setup.t0 != 0.0:
		raise DomainError("this closed form is only available for a start at the origin")


def conditioned_propagator_tanh_on_tanh(source: TanhDrift, setup: BarrierSetup, target, p: SpaceTimePoint):
	"""Density of the tanh process conditioned on the tanh(gamma, delta) FPT law."""
	from .analytics import log_propagator_absorbed

	_require_origin(setup)
	if not p.t > 0:
		raise DomainError("conditioned propagator needs t > 0")
	m = _Mixture(source, TanhDrift(*target), setup)
	x = np.asarray(p.x, dtype=float)
	inside = x < setup.a
	xs = np.where(inside, x, setup.a - 1.0)
	with np.errstate(divide="ignore"):
		lp = log_propagator_absorbed(source, setup, setup.start, xs, p.t) + m.q(xs, p.t)
	return as_output(np.where(inside, np.exp(lp), 0.0))


def conditioned_survival_tanh_on_tanh(target, setup: BarrierSetup, t):
	"""Survival of the conditioned process; it equals that of tanh(gamma, delta)."""
	_require_origin(setup)
	if np.any(np.asarray(t) <= 0):
		raise DomainError("conditioned survival needs t > 0")
	return survival_to_T(TanhDrift(*target), setup, t)


def reciprocity_check(q_forward, q_backward, grid) -> float:
	"""max over ``grid`` of ``|Q_forward * Q_backward - 1|``."""
	xs = np.array([p[0] for p in grid], dtype=float)
	ts = np.array([p[1] for p in grid], dtype=float)
	return float(np.max(np.abs(np.asarray(q_forward(xs, ts)) * np.asarray(q_backward(xs, ts)) - 1.0)))
