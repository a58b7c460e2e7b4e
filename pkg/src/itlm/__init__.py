"""Iterative trimmed loss minimization for generalized linear models."""

__version__ = "0.1.0"

from .datagen import CorruptionModel, GenConfig, generate, generate_mixture, load_dataset, save_dataset
from .driver import EstimationTrace, ItlmConfig, run_itlm, stopping_check
from .estimator import ITLMRegressor
from .exceptions import ConfigError, EnumerationLimitError, ITLMError, RankDeficiencyError
from .glm import Dataset, LinkFunction, Truth, loss_gradient, predict, sample_loss, trimmed_loss
from .oracle import contamination_profile, exact_trimmed_loss, regularity_constants
from .selection import select_k_smallest, selection_stats
from .update import UpdatePolicy, batch_sgd_update, closed_form_ls, full_gradient_step

__all__ = [
    "CorruptionModel",
    "ConfigError",
    "Dataset",
    "EnumerationLimitError",
    "EstimationTrace",
    "GenConfig",
    "ITLMError",
    "ITLMRegressor",
    "ItlmConfig",
    "LinkFunction",
    "RankDeficiencyError",
    "Truth",
    "UpdatePolicy",
    "batch_sgd_update",
    "closed_form_ls",
    "contamination_profile",
    "exact_trimmed_loss",
    "full_gradient_step",
    "generate",
    "generate_mixture",
    "load_dataset",
    "loss_gradient",
    "predict",
    "regularity_constants",
    "run_itlm",
    "sample_loss",
    "save_dataset",
    "select_k_smallest",
    "selection_stats",
    "stopping_check",
    "trimmed_loss",
]
