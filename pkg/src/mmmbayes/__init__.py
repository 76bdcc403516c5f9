"""Bayesian bounds on classical-trajectory modifications of quantum
mechanics from matter-wave interference data.

The package models four experiment classes (mask-scan interferometers,
condensate and nested Mach-Zehnder interferometers, binned single-atom
interference), forms objective posteriors over the classicalization
time, and reduces them to macroscopicity values and two-parameter
exclusion maps.
"""
from .combine import (
    CslPoint,
    Map2D,
    combine_maps,
    csl_params,
    loglik_map,
    map_peak,
    map_posterior,
    marginal_length,
    marginal_tau,
)
from .config import ExperimentConfig, load_experiment, parse_quantity
from .errors import (
    ConfigError,
    DataInconsistencyError,
    DegeneratePriorError,
    MmmBayesError,
    NumericError,
)
from .inference import (
    ConvergenceReport,
    FisherProfile,
    HellingerFit,
    MacroscopicityResult,
    Posterior,
    SigmaPoint,
    TauGrid,
    convergence_report,
    default_sigma_q_values,
    fisher_curve,
    fisher_information,
    flat_prior,
    fwhm,
    hellinger,
    jeffreys_prior,
    jeffreys_single_atom,
    macroscopicity,
    min_hellinger,
    odds_ratio,
    posterior_update,
    quantile,
)
from .likelihood import (
    BecMziConfig,
    CompositeModel,
    CountBin,
    NestedMziConfig,
    ParticleSpec,
    SingleAtomBin,
    SingleAtomConfig,
    TalbotLauRun,
    VelocityBin,
    admissible_length_window,
    bec_count_pdf,
    bec_density_grid,
    binomial_count_pmf,
    branch_phase_pdf,
    dephased_count_pmf,
    effective_dephasing_scale,
    infer_blocked_pulsed,
    infer_blocked_stationary,
    log_likelihood,
    log_likelihood_profile,
    loglik_bec,
    loglik_nested,
    loglik_single_atom,
    loglik_talbot_lau,
    n_observations,
    phase_diff_pdf,
    tl_signal,
)
from .mmm import (
    MmmParams,
    arm_separation,
    dephasing_knee_length,
    dephasing_rate,
    scaled_dephasing_rate,
    single_atom_port_prob,
    talbot_time,
    visibility_ratio,
)
from .special import erf, log_gamma, theta3
from .synth import (
    RNG_KIND,
    sample_bec,
    sample_nested,
    sample_single_atom,
    sample_talbot_lau,
)

__version__ = "0.1.0"

__all__ = [
    "BecMziConfig",
    "CompositeModel",
    "ConfigError",
    "ConvergenceReport",
    "CountBin",
    "CslPoint",
    "DataInconsistencyError",
    "DegeneratePriorError",
    "ExperimentConfig",
    "FisherProfile",
    "HellingerFit",
    "MacroscopicityResult",
    "Map2D",
    "MmmBayesError",
    "MmmParams",
    "NestedMziConfig",
    "NumericError",
    "ParticleSpec",
    "Posterior",
    "RNG_KIND",
    "SigmaPoint",
    "SingleAtomBin",
    "SingleAtomConfig",
    "TalbotLauRun",
    "TauGrid",
    "VelocityBin",
    "admissible_length_window",
    "arm_separation",
    "bec_count_pdf",
    "bec_density_grid",
    "binomial_count_pmf",
    "branch_phase_pdf",
    "combine_maps",
    "convergence_report",
    "csl_params",
    "default_sigma_q_values",
    "dephased_count_pmf",
    "dephasing_knee_length",
    "dephasing_rate",
    "effective_dephasing_scale",
    "erf",
    "fisher_curve",
    "fisher_information",
    "flat_prior",
    "fwhm",
    "hellinger",
    "infer_blocked_pulsed",
    "infer_blocked_stationary",
    "jeffreys_prior",
    "jeffreys_single_atom",
    "load_experiment",
    "log_gamma",
    "log_likelihood",
    "log_likelihood_profile",
    "loglik_bec",
    "loglik_map",
    "loglik_nested",
    "loglik_single_atom",
    "loglik_talbot_lau",
    "macroscopicity",
    "map_peak",
    "map_posterior",
    "marginal_length",
    "marginal_tau",
    "min_hellinger",
    "n_observations",
    "odds_ratio",
    "parse_quantity",
    "phase_diff_pdf",
    "posterior_update",
    "quantile",
    "sample_bec",
    "sample_nested",
    "sample_single_atom",
    "sample_talbot_lau",
    "scaled_dephasing_rate",
    "single_atom_port_prob",
    "talbot_time",
    "theta3",
    "tl_signal",
    "visibility_ratio",
]
