"""Gradient tree-boosted Tobit (Grabit) models, baselines, and evaluation tools."""
from .boosting import (BoostConfig, BoostedEnsemble, bernoulli_config, fit_boosted, grabit_config,
                       load_model, predict_default_prob, predict_latent, save_model, staged_predictions)
from .data import Dataset, read_csv
from .evaluation import (TemporalCvConfig, aggregate_roc, delong_test, roc_auroc, temporal_cv)
from .linear import LinearModel, fit_linear_tobit, fit_logit, predict_linear
from .losses import BernoulliLogitLoss, CensoringBounds, SquaredLoss, TobitLoss
from .sigma import SigmaSearchConfig, profile_loglik, select_sigma, select_sigma_cv
from .tree import RegressionTree, TreeConfig, fit_least_squares

__version__ = "0.1.0"
