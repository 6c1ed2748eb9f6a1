"""
Heteroscedastic GP inference: special functions, kernels, datasets and the
importance-sampled posterior.
"""

from src.inference.dataset import ReplicatedDataset, build_dataset, simulate_observations
from src.inference.hgp import (
    HgpModel,
    ImportanceEnsemble,
    PointPosterior,
    PosteriorSummary,
    cdf,
    delta,
    draw_ensemble,
    fit,
    posterior_mean,
    posterior_variance,
    predict,
    quantile,
    solve_delta,
)


__all__ = [
    "ReplicatedDataset",
    "build_dataset",
    "simulate_observations",
    "HgpModel",
    "ImportanceEnsemble",
    "PointPosterior",
    "PosteriorSummary",
    "cdf",
    "delta",
    "draw_ensemble",
    "fit",
    "posterior_mean",
    "posterior_variance",
    "predict",
    "quantile",
    "solve_delta",
]
