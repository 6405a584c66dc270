"""Learned truncated additive noise for differential privacy."""

__version__ = "0.1.0"

from .buckets import BucketConfig, BucketedLoss, bucketize, compose, delta_adp, delta_pdp
from .curves import DeltaCurve, delta_curve, reference_config, reference_delta
from .errors import BracketError, InvalidArgument, ResourceLimitError, SchemaError, TrainingError
from .grid import (Grid, NoisePmf, check_structure, make_grid, sample_noise, sample_radial, staircase_pmf,
                   truncated_gaussian_pmf)
from .learner import TrainConfig, TrainResult, train
from .model import SigmoidStackParams, model_forward, utility_loss, utility_weight
from .moments import delta_ma, distinguishing_mass, gamma_divergence
from .oracle import exact_delta, exact_deltas, exact_pdp_delta
from .worst_case import WorstCasePair, sensitivity_pair, shift_invariance_check, subsampled_pair

__all__ = [
    "BucketConfig", "BucketedLoss", "bucketize", "compose", "delta_adp", "delta_pdp",
    "DeltaCurve", "delta_curve", "reference_config", "reference_delta",
    "BracketError", "InvalidArgument", "ResourceLimitError", "SchemaError", "TrainingError",
    "Grid", "NoisePmf", "check_structure", "make_grid", "sample_noise", "sample_radial", "staircase_pmf",
    "truncated_gaussian_pmf", "TrainConfig", "TrainResult", "train",
    "SigmoidStackParams", "model_forward", "utility_loss", "utility_weight",
    "delta_ma", "distinguishing_mass", "gamma_divergence",
    "exact_delta", "exact_deltas", "exact_pdp_delta",
    "WorstCasePair", "sensitivity_pair", "shift_invariance_check", "subsampled_pair",
]
