"""Resampled median-of-means upper confidence bounds for heavy-tailed bandits."""

from .estimators import (
    BlockPartition,
    empirical_mean,
    lower_median,
    mom,
    partition_blocks,
    truncated_mean,
)
from .exceptions import ConfigurationError, InvalidParameterError, MomentDoesNotExistError
from .rmm import (
    ConfidenceSpec,
    RmmContext,
    alternative_sample,
    build_context,
    rank,
    reference_stat,
    rmm_test,
    rmm_ucb,
    rmm_ucb_oracle,
)

from .bandit import ArmSpec, EnvironmentSpec, run_trajectory
from .policies import POLICY_NAMES, make_policy, rmm_ucb_index
from .harness import ExperimentConfig, run_experiment, write_outputs

__version__ = "0.1.0"
