"""
Replicated training observations and their sufficient statistics.

Each of the D distinct inputs carries S noisy outputs. From them we keep the
sample means, the unbiased sample variances and the log-variance statistic

    z_d = ln V_d + ln(S-1) - ln 2 - digamma((S-1)/2)

whose conditional mean given h_d is h_d and whose variance is
omega^2 = trigamma((S-1)/2) (the log of a scaled chi-square variable).
"""

import math
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.errors import DatasetError, KernelError
from src.inference.kernels import check_distinct
from src.inference.specfun import digamma, trigamma
from src.interfaces.truth import TruthFunctionProtocol
from src.utils.csv_io import read_rows, write_rows
from src.utils.logger import get_logger


logger = get_logger(__name__)

# Floor applied to simulated noise variances so h -> -inf stays finite.
MIN_NOISE_VARIANCE = 1e-30


def log_chi2_mean_offset(S: int) -> float:
    """Constant ``ln(S-1) - ln 2 - digamma((S-1)/2)`` added to ln V to form z."""
    if S < 2:
        raise DatasetError(f"log-variance statistic needs S >= 2, got S={S}")
    return math.log(S - 1) - math.log(2.0) - digamma((S - 1) / 2.0)


def log_chi2_std(S: int) -> float:
    """``omega = sqrt(trigamma((S-1)/2))``, the std of z around h."""
    if S < 2:
        raise DatasetError(f"log-variance statistic needs S >= 2, got S={S}")
    return math.sqrt(trigamma((S - 1) / 2.0))


def log_variance_statistic(sample_variance: np.ndarray, S: int) -> np.ndarray:
    """
    Map unbiased sample variances to z statistics.

    Raises:
        DatasetError: If any variance is zero (z would be -inf)
    """
    v = np.asarray(sample_variance, dtype=float)
    zero = np.flatnonzero(v <= 0.0)
    if zero.size:
        raise DatasetError(
            f"sample variance is zero at rows {zero[:10].tolist()}; "
            "replicates are identical and ln V is undefined"
        )
    return np.log(v) + log_chi2_mean_offset(S)


class ReplicatedDataset(BaseModel):
    """
    D inputs with S replicate outputs each plus derived statistics.

    ``sample_variance``, ``z`` and ``omega`` are ``None`` when S == 1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    X: np.ndarray
    Y: np.ndarray
    y_mean: np.ndarray
    sample_variance: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    omega: Optional[float] = None

    @property
    def num_inputs(self) -> int:
        """D."""
        return self.X.shape[0]

    @property
    def input_dim(self) -> int:
        """n."""
        return self.X.shape[1]

    @property
    def replicates(self) -> int:
        """S."""
        return self.Y.shape[1]

    @property
    def supports_proposal(self) -> bool:
        """Whether the log-variance statistics exist (S >= 2)."""
        return self.z is not None


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def build_dataset(X, Y, require_proposal: bool = True) -> ReplicatedDataset:
    """
    Build a dataset and compute its statistics.

    Args:
        X: ``(D, n)`` distinct inputs
        Y: ``(D, S)`` replicate outputs
        require_proposal: Demand S >= 2 and nonzero variances

    Raises:
        DatasetError: On shape mismatch, duplicate inputs, S < 2 with a
            proposal requested, or a zero sample variance
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or Y.ndim != 2:
        raise DatasetError("X and Y must be two-dimensional")
    if X.shape[0] != Y.shape[0]:
        raise DatasetError(
            f"X has {X.shape[0]} rows but Y has {Y.shape[0]}"
        )
    if X.shape[0] == 0 or Y.shape[1] == 0:
        raise DatasetError("dataset must contain at least one input and one replicate")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DatasetError("inputs and outputs must be finite")
    try:
        check_distinct(X)
    except KernelError as e:
        raise DatasetError(str(e)) from e

    S = Y.shape[1]
    # fsum is exactly rounded, so statistics do not depend on replicate order
    y_mean = np.array([math.fsum(row) for row in Y]) / S

    sample_variance = z = omega = None
    if S >= 2:
        sample_variance = np.array(
            [math.fsum(row) for row in (Y - y_mean[:, None]) ** 2]
        ) / (S - 1)
        if require_proposal or np.all(sample_variance > 0.0):
            z = log_variance_statistic(sample_variance, S)
            omega = log_chi2_std(S)
    elif require_proposal:
        raise DatasetError("proposal requires S >= 2 replicates per input")

    logger.debug(
        "Dataset built",
        num_inputs=X.shape[0],
        replicates=S,
        has_proposal_statistics=z is not None,
    )

    return ReplicatedDataset(
        X=_readonly(X),
        Y=_readonly(Y),
        y_mean=_readonly(y_mean),
        sample_variance=None if sample_variance is None else _readonly(sample_variance),
        z=None if z is None else _readonly(z),
        omega=omega,
    )


def simulate_observations(
    truth_mean: TruthFunctionProtocol,
    truth_logvar: TruthFunctionProtocol,
    X,
    S: int,
    seed: int,
    require_proposal: bool = True,
) -> ReplicatedDataset:
    """
    Draw ``y_{d,s} = f(x_d) + w_{d,s}`` with ``w_{d,s} ~ N(0, exp h(x_d))``.

    The noise comes from a single generator seeded with ``seed``; rows are
    filled in input order, replicates in column order.

    Raises:
        DatasetError: If S < 1 or the log-variance is not finite, plus
            every error of :func:`build_dataset`
    """
    if S < 1:
        raise DatasetError(f"S must be >= 1, got {S}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mean = np.asarray(truth_mean(X), dtype=float).reshape(-1)
    logvar = np.asarray(truth_logvar(X), dtype=float).reshape(-1)
    if np.any(np.isnan(logvar)) or np.any(logvar == np.inf):
        raise DatasetError("truth log-variance must be finite (or -inf) on all inputs")

    variance = np.maximum(np.exp(logvar), MIN_NOISE_VARIANCE)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    noise = rng.standard_normal((X.shape[0], S)) * np.sqrt(variance)[:, None]
    return build_dataset(X, mean[:, None] + noise, require_proposal=require_proposal)


def regular_grid(lower: float, upper: float, points_per_axis: int, dims: int = 2) -> np.ndarray:
    """
    Tensor grid with equal spacing including both endpoints.

    Rows are ordered with the first coordinate varying slowest.
    """
    if points_per_axis < 1:
        raise DatasetError("points_per_axis must be >= 1")
    if points_per_axis > 1 and not upper > lower:
        raise DatasetError("grid upper bound must exceed lower bound")
    axis = np.linspace(lower, upper, points_per_axis)
    mesh = np.meshgrid(*([axis] * dims), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


# ============================================
# Truth functions
# ============================================

def sinusoid_mean(X: np.ndarray) -> np.ndarray:
    """``f(x) = -10 sin(pi x1) - 10 sin(2 pi x2)``."""
    X = np.atleast_2d(X)
    return -10.0 * np.sin(np.pi * X[:, 0]) - 10.0 * np.sin(2.0 * np.pi * X[:, 1])


def sigmoid_log_variance(X: np.ndarray) -> np.ndarray:
    """``h(x) = ln(0.1 + 1.5 / (1 + exp(-10 x2)))``."""
    X = np.atleast_2d(X)
    return np.log(0.1 + 1.5 / (1.0 + np.exp(-10.0 * X[:, 1])))


def zero_mean(X: np.ndarray) -> np.ndarray:
    """``f(x) = 0``."""
    return np.zeros(np.atleast_2d(X).shape[0])


def zero_log_variance(X: np.ndarray) -> np.ndarray:
    """Constant noise variance 0.01."""
    return np.full(np.atleast_2d(X).shape[0], math.log(0.01))


TRUTH_FUNCTIONS: Dict[str, Tuple[Callable, Callable]] = {
    "sinusoid": (sinusoid_mean, sigmoid_log_variance),
    "zero": (zero_mean, zero_log_variance),
}


def get_truth(name: str) -> Tuple[Callable, Callable]:
    """
    Look up a (mean, log-variance) pair by name.

    Raises:
        DatasetError: If the name is unknown
    """
    try:
        return TRUTH_FUNCTIONS[name]
    except KeyError:
        raise DatasetError(
            f"unknown truth '{name}'. Available: {', '.join(sorted(TRUTH_FUNCTIONS))}"
        ) from None


# ============================================
# CSV import / export
# ============================================

def write_dataset_csv(dataset: ReplicatedDataset, path: Union[str, Path]) -> int:
    """Write ``x1..xn, y1..yS`` columns, one row per input."""
    header = [f"x{i + 1}" for i in range(dataset.input_dim)]
    header += [f"y{s + 1}" for s in range(dataset.replicates)]
    rows = (
        [float(v) for v in x] + [float(v) for v in y]
        for x, y in zip(dataset.X, dataset.Y)
    )
    return write_rows(path, header, rows)


def read_dataset_csv(path: Union[str, Path], require_proposal: bool = True) -> ReplicatedDataset:
    """
    Read a dataset written by :func:`write_dataset_csv`.

    Raises:
        DatasetError: If the header lacks x/y columns
    """
    header, rows = read_rows(path)
    x_cols = [i for i, name in enumerate(header) if name.startswith("x")]
    y_cols = [i for i, name in enumerate(header) if name.startswith("y")]
    if not x_cols or not y_cols:
        raise DatasetError(f"{path}: header must contain x* and y* columns, got {header}")
    data = np.asarray(rows, dtype=float)
    return build_dataset(data[:, x_cols], data[:, y_cols], require_proposal=require_proposal)
