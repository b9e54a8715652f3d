"""First-passage analytics, conditioned drifts and their Monte Carlo checks."""
from .analytics import (absorbed_by, absorption_probability, drift_value, fpt_density,
	girsanov_weight, propagator_absorbed, propagator_free, survival_forever, survival_to_T)
from .conditioning import (ConditionedDrift, DiracTime, FiniteHorizon, ForeverSurvival, FptOfBM,
	FptOfTaboo, FptOfTanh, QFunction, UnsupportedPairError, conditioned_drift, q_function,
	reciprocity_check)
from .models import BM, BarrierSetup, DomainError, SpaceTimePoint, Taboo, TanhDrift
from .sim import PathEnsemble, PathOutcome, SimConfig, simulate_ensemble, simulate_reweighted_expectation
from .verify import GoodnessReport, ks_against_fpt, survival_curve_compare, table_identity_sweep

__version__ = "0.1.0"

__all__ = [
	"BM", "TanhDrift", "Taboo", "BarrierSetup", "SpaceTimePoint", "DomainError",
	"drift_value", "girsanov_weight", "propagator_free", "propagator_absorbed", "fpt_density",
	"absorption_probability", "absorbed_by", "survival_to_T", "survival_forever",
	"DiracTime", "ForeverSurvival", "FptOfBM", "FptOfTanh", "FptOfTaboo", "FiniteHorizon",
	"ConditionedDrift", "QFunction", "UnsupportedPairError", "conditioned_drift", "q_function",
	"reciprocity_check",
	"SimConfig", "PathOutcome", "PathEnsemble", "simulate_ensemble", "simulate_reweighted_expectation",
	"GoodnessReport", "ks_against_fpt", "survival_curve_compare", "table_identity_sweep",
]
