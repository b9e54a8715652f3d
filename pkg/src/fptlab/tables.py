"""Hand-written reference formulas for the closed-form conditioned drifts.

Each formula is written out directly (start at the origin, expanded
exponentials) and shares no code with :mod:`fptlab.conditioning`. The sweep in
:mod:`fptlab.verify` compares the two on a grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy import cosh, exp, sinh, tanh

from .conditioning import DiracTime, ForeverSurvival, FptOfBM, FptOfTaboo, FptOfTanh
from .models import BM, BarrierSetup, Taboo, TanhDrift

# parameter set used by the sweep
A = 1.0
ALPHA, BETA = 0.8, 0.4
MU_POS, MU_NEG = 0.3, -0.5
GAMMA, DELTA = 0.5, 0.3
B = 2.0
T_STAR = 4.0


def coth(z):
	return 1.0 / tanh(z)


@dataclass(frozen=True)
class TableRow:
	row_id: str
	source: object
	scheme: object
	formula: Callable
	t_max: float = 3.0


def _bridge(x, t, a=A, ts=T_STAR):
	return -1.0 / (a - x) + (a - x) / (ts - t)


def _type2(x, t, a=A, al=ALPHA, mu=MU_NEG):
	e = exp(2 * a * mu - mu * x - al * x + 0.5 * (al**2 - mu**2) * t)
	r = (1 - exp(2 * a * mu)) / (1 - exp(2 * a * al))
	return al + (-(mu + al) * e + 2 * al * r * exp(2 * al * (a - x))) / (e + r * (1 - exp(2 * al * (a - x))))


def _tanh_tanh(x, t, a=A, al=ALPHA, g=GAMMA, d=DELTA):
	e = exp(0.5 * (al**2 - g**2) * t + g * x)
	k = (exp(2 * a * g) - 1) * exp(al * x) / (exp(2 * a * al) - 1)
	num = g * (exp(2 * (a * g + d)) + 1) * e - al * k * (exp(2 * al * (a - x)) + 1)
	den = (exp(2 * (a * g + d)) + 1) * e + k * (exp(2 * al * (a - x)) - 1)
	return num / den


def _bm_pos_tanh(x, t, a=A, al=ALPHA, be=BETA):
	c = a * exp(al * x + be) * cosh(a * al + be)
	s = sinh(a * al) * exp(0.5 * al**2 * t)
	return (al * c - s) / (c + s * (a - x))


def _bm_neg_tanh(x, t, a=A, al=ALPHA, be=BETA, mu=MU_NEG):
	f = 2 * a * exp(a * al + be) * cosh(a * al + be) * exp(-0.5 * (al**2 - mu**2) * t) * exp(al * x) / (a - x)
	r = 2 * exp(a * al) * sinh(a * al) / sinh(a * mu)
	return (f * (al + 1 / (a - x)) - mu * r * cosh(mu * (a - x))) / (f + r * sinh(mu * (a - x)))


def _bm_neg_taboo(x, t, a=A, mu=MU_NEG, b=B):
	e = (b - a) * exp(0.5 * mu**2 * t - mu * x)
	num = -mu * e + 2 * a * mu * exp(2 * mu * (a - x)) / (1 - exp(2 * a * mu))
	den = e + a * (1 - exp(2 * mu * (a - x))) / (1 - exp(2 * a * mu))
	return mu + num / den


def _taboo_bm_neg(x, t, a=A, mu=MU_NEG):
	e = 2 * sinh(a * mu) * exp(0.5 * mu**2 * t + mu * (x - a))
	return (e - a * mu) / (a - (a - x) * e)


def _const(v):
	return lambda x, t: v + 0 * x


ROWS = (
	TableRow("I.1", BM(MU_POS), DiracTime(T_STAR), _bridge),
	TableRow("I.2", BM(MU_POS), ForeverSurvival(), lambda x, t: -1.0 / (A - x)),
	TableRow("I.3", BM(MU_NEG), ForeverSurvival(), lambda x, t: -MU_NEG * coth(MU_NEG * (A - x))),
	TableRow("I.4", TanhDrift(ALPHA, BETA), DiracTime(T_STAR), _bridge),
	TableRow("I.5", TanhDrift(ALPHA, BETA), ForeverSurvival(), lambda x, t: -ALPHA * coth(ALPHA * (A - x))),
	TableRow("I.6", Taboo(B), DiracTime(T_STAR), _bridge),
	TableRow("I.7", Taboo(B), ForeverSurvival(), lambda x, t: -1.0 / (A - x)),
	TableRow("II.1", TanhDrift(ALPHA, BETA), FptOfBM(MU_POS), _const(MU_POS)),
	TableRow("II.2", TanhDrift(ALPHA, BETA), FptOfBM(MU_NEG), _type2),
	TableRow("II.3", TanhDrift(ALPHA, BETA), FptOfTanh(GAMMA, DELTA), _tanh_tanh),
	TableRow("II.4", TanhDrift(ALPHA, BETA), FptOfTanh(ALPHA, DELTA), lambda x, t: ALPHA * tanh(ALPHA * x + DELTA)),
	TableRow("II.5", BM(MU_POS), FptOfTanh(ALPHA, BETA), _bm_pos_tanh),
	TableRow("II.6", BM(MU_POS), FptOfTaboo(B), lambda x, t: -1.0 / (B - x)),
	TableRow("II.7", BM(MU_NEG), FptOfTanh(ALPHA, BETA), _bm_neg_tanh),
	TableRow("II.8", BM(MU_NEG), FptOfTaboo(B), _bm_neg_taboo),
	TableRow("II.9", Taboo(B), FptOfBM(MU_POS), _const(MU_POS)),
	TableRow("II.10", Taboo(B), FptOfBM(MU_NEG), _taboo_bm_neg),
)

SETUP = BarrierSetup(A)


def fig1_closed_form(x, a=5.0, mu=-1.0):
	"""Reference closed form for the drift of BM(mu) on the tanh(-mu, 0) law."""
	x = np.asarray(x, dtype=float)
	num = a + a * mu * (x - a) + mu * (a - x) ** 2 * exp(2 * mu * x) + (a + mu * x**2 - a * mu * x) * exp(2 * a * mu)
	den = (a - x) * (a + (a - x) * exp(2 * mu * x) + x * exp(2 * a * mu))
	return num / den
