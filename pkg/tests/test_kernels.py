import numpy as np
from scipy import stats

from fptlab import _kernels as K
from fptlab.conditioning import DiracTime, ForeverSurvival, FptOfBM, FptOfTaboo, FptOfTanh, conditioned_drift
from fptlab.models import BM, BarrierSetup, Taboo, TanhDrift


def test_normals_are_standard_normal():
	z = K.normals(np.uint64(12345), 0, 200_000)
	assert abs(z.mean()) < 5 / np.sqrt(z.size)
	assert abs(z.var() - 1) < 0.01
	assert stats.kstest(z, "norm").pvalue > 1e-3
	# tails come from the ziggurat's exponential fallback
	assert np.mean(np.abs(z) > 3.6541528853610088) > 0


def test_streams_are_deterministic_and_distinct():
	a = K.normals(np.uint64(7), 3, 1000)
	assert np.array_equal(a, K.normals(np.uint64(7), 3, 1000))
	b = K.normals(np.uint64(7), 4, 1000)
	c = K.normals(np.uint64(8), 3, 1000)
	assert abs(np.corrcoef(a, b)[0, 1]) < 0.15
	assert abs(np.corrcoef(a, c)[0, 1]) < 0.15
	assert not np.array_equal(a, b)


def test_compiled_drifts_match_python():
	s = BarrierSetup(1.0, -0.3, 0.2)
	rng = np.random.default_rng(3)
	x = 1.0 - np.exp(rng.uniform(np.log(1e-4), np.log(6.0), 500))
	t = rng.uniform(0.2, 30.0, 500)
	cases = [
		(TanhDrift(0.8, 0.4), FptOfBM(-0.5)), (TanhDrift(0.8, 0.4), FptOfTanh(0.5, 0.3)),
		(TanhDrift(0.8, 0.4), FptOfTanh(1.3, -0.2)), (BM(0.3), FptOfTanh(0.5, 0.3)),
		(BM(-0.5), FptOfTanh(0.5, 0.3)), (BM(-0.5), FptOfTaboo(2.0)), (Taboo(2.0), FptOfBM(-0.5)),
		(TanhDrift(0.8, 0.4), ForeverSurvival()), (BM(0.2), ForeverSurvival()), (BM(-0.2), ForeverSurvival()),
		(TanhDrift(1.0, 0.4), FptOfTanh(1.0, 0.3)), (TanhDrift(1.0, 0.4), FptOfBM(0.3)), (BM(0.3), FptOfTaboo(2.0)),
	]
	for src, scheme in cases:
		d = conditioned_drift(src, s, scheme)
		kind, p = d.kernel
		got = K.drift_grid(kind, np.asarray(p, float), x, t)
		assert np.allclose(got, d(x, t), rtol=1e-12, atol=1e-12), d.label
	d = conditioned_drift(BM(0.0), s, DiracTime(40.0))
	kind, p = d.kernel
	assert np.allclose(K.drift_grid(kind, np.asarray(p, float), x, t), d(x, t), rtol=1e-13)


def test_base_family_kernels():
	x = np.linspace(-30, 0.99, 50)
	t = np.zeros_like(x)
	assert np.allclose(K.drift_grid(K.TANH, np.array([0.7, -0.2]), x, t), TanhDrift(0.7, -0.2).drift(x), rtol=1e-14)
	assert np.allclose(K.drift_grid(K.TABOO, np.array([2.0]), x, t), Taboo(2.0).drift(x), rtol=1e-15)
	assert np.all(K.drift_grid(K.CONST, np.array([0.3]), x, t) == 0.3)
