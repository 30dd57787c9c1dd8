"""Weighted Gaussian-process bandits for non-stationary rewards.

The package provides discounted-weight GP-UCB policies and their stationary,
restarting, and sliding-window baselines; quadrature Fourier features for the
squared-exponential kernel; empirical weighted information gains with their
analytic bounds; synthetic and price-data environments; and a seeded
experiment harness with a CSV-emitting command line.
"""

from .envs import (
    BudgetLedger,
    ChangeSchedule,
    Environment,
    NoiseModel,
    RkhsFunction,
    abrupt_schedule,
    function_distance,
    load_price_environment,
    make_abrupt_environment,
    make_slow_environment,
    make_stationary_environment,
    observe,
    realized_budget,
    reward_at,
    sample_rkhs_function,
    slow_schedule,
)
from .errors import (
    ConfigurationError,
    IngestionError,
    InputError,
    NumericalError,
    ProtocolError,
)
from .harness import (
    EpisodeRecord,
    ExperimentConfig,
    ExperimentResult,
    aggregate_records,
    cli,
    default_config_text,
    load_config,
    parse_config_text,
    run_episode,
    run_experiment,
)
from .kernels import (
    DomainGrid,
    KernelFamily,
    KernelSpec,
    grid_kernel_matrix,
    kernel_matrix,
    kernel_vector,
    se_kernel,
)
from .mig import (
    EigendecayKind,
    EigendecayParams,
    default_se_eigendecay,
    eigendecay_projection,
    empirical_double_weighted_mig,
    empirical_qff_mig,
    mig_eigendecay_bound,
    mig_universal_bound,
    mig_weight_bound,
)
from .policies import (
    BetaMode,
    GPParams,
    PolicyConfig,
    PolicyKind,
    TuningOutput,
    beta_t,
    new_policy_state,
    order_wise_baselines,
    policy_step,
    select_action,
    tune_parameters,
)
from .qff import QffMap, build_qff, hermite_roots, qff_error_bound, qff_features
from .wgp import (
    BanditHistory,
    WeightedPosterior,
    WeightScheme,
    fit_qff_posterior,
    fit_weighted_posterior,
    posterior_scale_invariance_check,
)

__version__ = "0.1.0"

__all__ = [
    "BanditHistory",
    "BetaMode",
    "BudgetLedger",
    "ChangeSchedule",
    "ConfigurationError",
    "DomainGrid",
    "EigendecayKind",
    "EigendecayParams",
    "Environment",
    "EpisodeRecord",
    "ExperimentConfig",
    "ExperimentResult",
    "GPParams",
    "IngestionError",
    "InputError",
    "KernelFamily",
    "KernelSpec",
    "NoiseModel",
    "NumericalError",
    "PolicyConfig",
    "PolicyKind",
    "ProtocolError",
    "QffMap",
    "RkhsFunction",
    "TuningOutput",
    "WeightScheme",
    "WeightedPosterior",
    "abrupt_schedule",
    "aggregate_records",
    "beta_t",
    "build_qff",
    "cli",
    "default_config_text",
    "default_se_eigendecay",
    "eigendecay_projection",
    "empirical_double_weighted_mig",
    "empirical_qff_mig",
    "fit_qff_posterior",
    "fit_weighted_posterior",
    "function_distance",
    "grid_kernel_matrix",
    "hermite_roots",
    "kernel_matrix",
    "kernel_vector",
    "load_config",
    "load_price_environment",
    "make_abrupt_environment",
    "make_slow_environment",
    "make_stationary_environment",
    "mig_eigendecay_bound",
    "mig_universal_bound",
    "mig_weight_bound",
    "new_policy_state",
    "observe",
    "order_wise_baselines",
    "parse_config_text",
    "policy_step",
    "posterior_scale_invariance_check",
    "qff_error_bound",
    "qff_features",
    "realized_budget",
    "reward_at",
    "run_episode",
    "run_experiment",
    "sample_rkhs_function",
    "se_kernel",
    "select_action",
    "slow_schedule",
    "tune_parameters",
]
