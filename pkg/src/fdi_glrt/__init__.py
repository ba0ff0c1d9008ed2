"""False data injection detection for linear state estimation under white
and autoregressive (colored) Gaussian meter noise."""

from .arnoise import (ArNoiseModel, WhiteningOperator, build_whitening, fit_ar_yule_walker,
                      simulate_ar, simulate_block, whitening_stats)
from .attacks import AttackVector, IcaModel, fastica, ica_attack, sparse_attack, unobservable_attack
from .detection import (ArDetector, DetectionStatistic, GaussianDetector, NuisanceEstimates, decide,
                        glrt_ar, glrt_gaussian, glrt_gaussian_sequential, glrt_white, threshold_for_pfa)
from .estimation import StateEstimate, ar_mle_estimate, wls_estimate, wls_estimate_sequential
from .experiment import (AttackSpec, RocCurve, Scenario, ScoreTable, mse_eval, perturb_states,
                         robustness_study, roc_from_scores, run_experiment, run_trial)
from .grid import (GridCase, MeasurementMatrix, MeterPlan, bundled_matrix, build_dc_jacobian,
                   decompose_attack, load_matrix, orthogonal_complement, parse_case)

__version__ = "0.1.0"
