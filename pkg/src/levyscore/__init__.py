"""Monte Carlo transition density, score, and Fisher information for
jump-driven SDEs dX = a(theta, X) dt + dZ, plus simulated-likelihood
estimation with information-bound diagnostics."""

from .config import Config, load_config, validate_config
from .drifts import DRIFT_REGISTRY, DriftModel, make_drift, validate_drift
from .estimators import (Engine, MCEstimate, estimate_cdf, estimate_density,
                         estimate_fisher_onestep, estimate_score, kde_density,
                         normalization_integral, pool_weights, sample_pool,
                         silverman_bandwidth)
from .inference import (MLEReport, ObservationSet, TransitionLikelihood,
                        cramer_rao_report, crlb_experiment,
                        fisher_info_experiment, log_likelihood, mle,
                        simulate_observations, transition_densities)
from .levy import (JumpRecord, JumpSampler, LevyModel, MODEL_REGISTRY,
                   build_sampler, check_assumption_h, chi, chi_d1,
                   compensator_integrals, default_eps_trunc,
                   girsanov_log_density, make_model, require_assumption_h,
                   tempered_stable)
from .oracles import (duality_check, fd_variation_check, fisher_fd_quadrature,
                      girsanov_mc_check, integral_formula_check, perturb_jumps,
                      score_duality_check, solve_batch_integral)
from .paths import (PathRealization, VariationState, engine_coeffs, flow_step,
                    jump_update, solve_batch, solve_path)
from .perturbation import PerturbationSpec, q_flow, q_flow_with_jacobian, rho, rho_d1, rho_d2
from .rng import substream
from .weights import DX_FLOOR, WeightSet, compute_weights, xi1_weight, xi2_weight, xi_weight

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Config", "load_config", "validate_config",
    "DriftModel", "DRIFT_REGISTRY", "make_drift", "validate_drift",
    "Engine", "MCEstimate", "sample_pool", "pool_weights",
    "estimate_density", "estimate_cdf", "estimate_score",
    "estimate_fisher_onestep", "kde_density", "normalization_integral",
    "silverman_bandwidth",
    "ObservationSet", "TransitionLikelihood", "MLEReport",
    "simulate_observations", "transition_densities", "log_likelihood",
    "mle", "fisher_info_experiment", "cramer_rao_report", "crlb_experiment",
    "LevyModel", "MODEL_REGISTRY", "JumpRecord", "JumpSampler",
    "tempered_stable", "make_model", "chi", "chi_d1",
    "compensator_integrals", "default_eps_trunc", "build_sampler",
    "girsanov_log_density", "check_assumption_h", "require_assumption_h",
    "perturb_jumps", "fd_variation_check", "integral_formula_check",
    "solve_batch_integral", "duality_check", "score_duality_check",
    "girsanov_mc_check", "fisher_fd_quadrature",
    "VariationState", "PathRealization", "engine_coeffs", "flow_step",
    "jump_update", "solve_path", "solve_batch",
    "PerturbationSpec", "rho", "rho_d1", "rho_d2", "q_flow",
    "q_flow_with_jacobian",
    "WeightSet", "compute_weights", "xi_weight", "xi1_weight", "xi2_weight",
    "DX_FLOOR",
    "substream",
]
