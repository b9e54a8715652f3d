"""Compiled drift kernels and the Euler path engine.

Random numbers: every path owns a xoshiro256** stream whose state is derived
from ``(seed, path_index)`` through splitmix64, so results do not depend on
how paths are split across threads. Normals come from a 256-layer ziggurat.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

# drift kernel kinds
CONST, TANH, TABOO, BRIDGE, COTH, INVERSE, MIXTURE = range(7)
# mixture source codes
SRC_BM_POS, SRC_BM_NEG, SRC_TANH, SRC_TABOO = range(4)
# path status codes
ALIVE, ABSORBED, FAILED = 0, 1, 2

_U = nb.uint64
_GOLDEN = 0x9E3779B97F4A7C15
_ZIG_R = 3.6541528853610088


def _ziggurat_tables():
	m52 = 2.0**52
	dn = _ZIG_R
	tn = dn
	vn = 4.92867323399e-3
	ki = np.zeros(256, np.int64)
	wi = np.zeros(256)
	fi = np.zeros(256)
	q = vn / math.exp(-0.5 * dn * dn)
	ki[0] = int((dn / q) * m52)
	ki[1] = 0
	wi[0] = q / m52
	wi[255] = dn / m52
	fi[0] = 1.0
	fi[255] = math.exp(-0.5 * dn * dn)
	for i in range(254, 0, -1):
		dn = math.sqrt(-2.0 * math.log(vn / dn + math.exp(-0.5 * dn * dn)))
		ki[i + 1] = int((dn / tn) * m52)
		tn = dn
		fi[i] = math.exp(-0.5 * dn * dn)
		wi[i] = dn / m52
	return ki, wi, fi


ZIG_K, ZIG_W, ZIG_F = _ziggurat_tables()


@nb.njit(inline="always")
def _rotl(x, k):
	return (x << _U(k)) | (x >> _U(64 - k))


@nb.njit(inline="always")
def _splitmix(z):
	z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
	z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
	return z ^ (z >> _U(31))


@nb.njit(inline="always")
def seed_stream(s, seed, path):
	z = _splitmix(_U(seed) + _U(_GOLDEN)) ^ _splitmix(_U(path) * _U(0xD1B54A32D192ED03) + _U(1))
	for j in range(4):
		z += _U(_GOLDEN)
		s[j] = _splitmix(z)


@nb.njit(inline="always")
def next_u64(s):
	res = _rotl(s[1] * _U(5), 7) * _U(9)
	t = s[1] << _U(17)
	s[2] ^= s[0]
	s[3] ^= s[1]
	s[1] ^= s[2]
	s[0] ^= s[3]
	s[2] ^= t
	s[3] = _rotl(s[3], 45)
	return res


@nb.njit(inline="always")
def next_uniform(s):
	return (next_u64(s) >> _U(11)) * (1.0 / 9007199254740992.0)


@nb.njit(inline="always")
def next_normal(s, ki, wi, fi):
	while True:
		r = next_u64(s)
		idx = np.int64(r & _U(0xFF))
		sign = (r >> _U(8)) & _U(1)
		rabs = np.int64((r >> _U(9)) & _U(0x000FFFFFFFFFFFFF))
		x = rabs * wi[idx]
		if sign != 0:
			x = -x
		if rabs < ki[idx]:
			break
		if idx == 0:
			# tail beyond R by exponential rejection
			xx = -math.log1p(-next_uniform(s)) / _ZIG_R
			yy = -math.log1p(-next_uniform(s))
			if yy + yy > xx * xx:
				x = -(_ZIG_R + xx) if sign != 0 else _ZIG_R + xx
				break
		elif (fi[idx - 1] - fi[idx]) * next_uniform(s) + fi[idx] < math.exp(-0.5 * x * x):
			break
	return x


@nb.njit(cache=True)
def normals(seed, path, n):
	"""First ``n`` normals of one path stream (for testing the generator)."""
	s = np.empty(4, np.uint64)
	seed_stream(s, seed, path)
	out = np.empty(n)
	for i in range(n):
		out[i] = next_normal(s, ZIG_K, ZIG_W, ZIG_F)
	return out


@nb.njit(inline="always")
def _tanh(y):
	# tanh(20) is 1 in double precision
	if y > 20.0:
		return 1.0
	if y < -20.0:
		return -1.0
	return math.tanh(y)


@nb.njit(inline="always")
def _mixture(x, t, p):
	# drift = sig*c_T + (1 - sig)*w_S(x) with sig = expit(D(x, t)); see conditioning._Mixture.
	# D = C0 - g_S(x) + dlam*t + c*x - hx(x, t); r collects -g_S - hx after cancellation.
	code = np.int64(p[0])
	a = p[3]
	d = a - x
	if code == 0:
		mu = p[1]
		r = -math.log(d) - 0.5 * mu * mu * t
		w = -1.0 / d
	elif code == 1:
		k = -p[1]
		em = math.expm1(-2.0 * k * d)
		r = -p[1] * x - math.log(-em)
		w = -k * (2.0 + em) / -em
	elif code == 2:
		al = p[1]
		em = math.expm1(-2.0 * al * d)
		# hx = -(al*a + be) + log sinh(al*d) - g_S
		r = al * a + p[2] - (al * d + math.log(-em) - 0.6931471805599453)
		w = -al * (2.0 + em) / -em
	else:
		r = -math.log(d)
		w = -1.0 / d
	c = p[6]
	D = p[4] + r + p[5] * t + c * x
	if D >= 0.0:
		e = math.exp(-D)
		sig = 1.0 / (1.0 + e)
		rest = e / (1.0 + e)
	else:
		e = math.exp(D)
		sig = e / (1.0 + e)
		rest = 1.0 / (1.0 + e)
	return sig * c + rest * w


@nb.njit(inline="always")
def eval_drift(kind, p, x, t):
	if kind == 0:
		return p[0]
	if kind == 1:
		return p[0] * _tanh(p[0] * x + p[1])
	if kind == 2:
		return -1.0 / (p[0] - x)
	if kind == 3:
		d = p[0] - x
		return -1.0 / d + d / (p[1] - t)
	if kind == 4:
		return -p[0] / _tanh(p[0] * (p[1] - x))
	if kind == 5:
		return -1.0 / (p[0] - x)
	return _mixture(x, t, p)


@nb.njit(cache=True)
def drift_grid(kind, p, xs, ts):
	out = np.empty(xs.shape[0])
	for i in range(xs.shape[0]):
		out[i] = eval_drift(kind, p, xs[i], ts[i])
	return out


LANES = 8


@nb.njit(cache=True, nogil=True)
def _run_serial(kind, p, seed, first, n, x0, t0, dt, a, bridge, singular, cap, stop,
		terminal_steps, t_terminal, status, tau, xend, steps):
	s = np.empty(4, np.uint64)
	sq = math.sqrt(dt)
	two_over_dt = 2.0 / dt
	ki = ZIG_K
	wi = ZIG_W
	fi = ZIG_F
	for j in range(n):
		seed_stream(s, seed, first + j)
		x = x0
		st = ALIVE
		tt = 0.0
		k = 0
		while k < stop:
			t = t0 + k * dt
			mu = eval_drift(kind, p, x, t)
			if not math.isfinite(mu):
				st = FAILED
				break
			xn = x + mu * dt + sq * next_normal(s, ki, wi, fi)
			k += 1
			if xn > cap:
				xn = cap
			if not singular:
				if xn >= a:
					st = ABSORBED
					tt = t + 0.5 * dt
					break
				if bridge:
					q = two_over_dt * (a - x) * (a - xn)
					if q < 40.0 and next_uniform(s) < math.exp(-q):
						st = ABSORBED
						tt = t + 0.5 * dt
						x = xn
						break
			x = xn
		if st == ALIVE and terminal_steps >= 0:
			st = ABSORBED
			tt = t_terminal
		status[j] = st
		tau[j] = tt
		xend[j] = x
		steps[j] = k


@nb.njit(cache=True, nogil=True)
def _run_lanes(kind, p, seed, first, n, x0, t0, dt, a, bridge, singular, cap, stop,
		terminal_steps, t_terminal, status, tau, xend, steps):
	sq = math.sqrt(dt)
	two_over_dt = 2.0 / dt
	ki = ZIG_K
	wi = ZIG_W
	fi = ZIG_F
	S = np.empty((LANES, 4), np.uint64)
	X = np.empty(LANES)
	KS = np.zeros(LANES, np.int64)
	J = np.full(LANES, -1, np.int64)
	nxt = 0
	active = 0
	for l in range(LANES):
		if nxt < n:
			seed_stream(S[l], seed, first + nxt)
			X[l] = x0
			J[l] = nxt
			nxt += 1
			active += 1
	while active > 0:
		for l in range(LANES):
			j = J[l]
			if j < 0:
				continue
			x = X[l]
			k = KS[l]
			st = ALIVE
			tt = 0.0
			done = k >= stop
			if not done:
				s = S[l]
				t = t0 + k * dt
				mu = eval_drift(kind, p, x, t)
				if not math.isfinite(mu):
					st = FAILED
					done = True
				else:
					xn = x + mu * dt + sq * next_normal(s, ki, wi, fi)
					k += 1
					if xn > cap:
						xn = cap
					if not singular:
						if xn >= a:
							st = ABSORBED
							tt = t + 0.5 * dt
							done = True
						elif bridge:
							q = two_over_dt * (a - x) * (a - xn)
							if q < 40.0 and next_uniform(s) < math.exp(-q):
								st = ABSORBED
								tt = t + 0.5 * dt
								done = True
								x = xn
					if not done:
						x = xn
			if not done:
				X[l] = x
				KS[l] = k
				continue
			if st == ALIVE and terminal_steps >= 0:
				st = ABSORBED
				tt = t_terminal
			status[j] = st
			tau[j] = tt
			xend[j] = x
			steps[j] = k
			if nxt < n:
				seed_stream(S[l], seed, first + nxt)
				X[l] = x0
				KS[l] = 0
				J[l] = nxt
				nxt += 1
			else:
				J[l] = -1
				active -= 1


@nb.njit(cache=True, nogil=True)
def run_block(kind, p, seed, first, n, x0, t0, dt, nsteps, a, bridge, singular, upper, guard,
		terminal_steps, t_terminal, status, tau, xend, steps):
	"""Advance paths ``first .. first+n-1`` and write their outcomes.

	``singular``: the drift repels from ``a`` and absorption is never tested,
	positions are clamped to ``a - guard``. ``upper``: a repelling level
	(taboo state) that positions are clamped below. ``terminal_steps >= 0``
	stops each path after that many steps and records absorption at
	``t_terminal``.

	Drifts built from transcendental functions advance ``LANES`` paths in
	interleaved slots so that their evaluations overlap. Each path draws from
	its own stream either way, so outcomes do not depend on the interleaving.
	"""
	stop = nsteps if terminal_steps < 0 else terminal_steps
	cap = min(upper, a) - guard if singular else upper - guard
	if kind == TANH or kind == MIXTURE or kind == COTH:
		_run_lanes(kind, p, seed, first, n, x0, t0, dt, a, bridge, singular, cap, stop,
			terminal_steps, t_terminal, status, tau, xend, steps)
	else:
		_run_serial(kind, p, seed, first, n, x0, t0, dt, a, bridge, singular, cap, stop,
			terminal_steps, t_terminal, status, tau, xend, steps)
