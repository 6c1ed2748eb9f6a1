"""
Heteroscedastic GP posterior by autonormalized importance sampling.

The latent function f and the noise log-variance h = ln g^2 carry independent
GP priors with Gram matrices K_D and L_D. Given h at the training inputs the
posterior of f(x) is Gaussian with

    mean_m = k(x)^T Kt(h)^-1 ybar
    var_m  = k(x,x) - k(x)^T Kt(h)^-1 k(x),    Kt(h) = K_D + diag(exp h) / S,

so every posterior quantity of f is an expectation over p(h | X, ybar). That
expectation is estimated with samples from the Gaussian proposal
q(h) = N(mu_h, Sigma_h), obtained by treating the log-variance statistics z
as Gaussian observations of h with variance omega^2, and weights

    N(ybar | 0, Kt(h)) N(h | 0, L_D) / N(h | mu_h, Sigma_h)

normalized to sum to one. The ensemble is drawn once per model and every
query reuses its cached per-sample factorizations.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import solve_triangular

from src.config.settings import get_settings
from src.errors import (
    BracketingError,
    ConsistencyError,
    DatasetError,
    InferenceError,
    NotPositiveDefiniteError,
)
from src.inference.dataset import ReplicatedDataset
from src.inference.kernels import GramFactor, chol_jitter, cross_matrix, cross_vector, gram
from src.inference.specfun import SQRT_2, erfc
from src.models.kernel import SeKernelParams
from src.utils.logger import RequestLogger, get_logger, log_function_call


logger = get_logger(__name__)

DEFAULT_JITTER = 1e-12

# exp(h) is clamped to this range before entering Kt(h)
NOISE_CLAMP = (1e-300, 1e300)

NEGATIVE_VARIANCE_TOL = 1e-9
CONSISTENCY_RTOL = 1e-6

DELTA_ATOL = 1e-10
MAX_BRACKET_DOUBLINGS = 200
MAX_BISECTIONS = 200

_LOG_2PI = float(np.log(2.0 * np.pi))

Seed = Union[int, Sequence[int]]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class PosteriorSummary(BaseModel):
    """Posterior mean and variance of f at one input."""

    model_config = ConfigDict(frozen=True)

    x: List[float] = Field(description="Query input")
    mean: float = Field(description="E[f(x) | D]")
    variance: float = Field(ge=0.0, description="V[f(x) | D], floored at 0")


# ============================================
# Model
# ============================================

class HgpModel(BaseModel):
    """
    Fitted model: Gram matrices and the Gaussian proposal over h.

    ``proposal_cov.matrix`` holds the symmetrized Sigma_h; its factor includes
    the jitter. ``gram_h`` factors L_D + jitter I.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dataset: ReplicatedDataset
    kernel_f: SeKernelParams
    kernel_h: SeKernelParams
    jitter: float
    omega_sq: float
    gram_f: np.ndarray
    gram_h: GramFactor
    proposal_mean: np.ndarray
    proposal_cov: GramFactor

    @property
    def num_inputs(self) -> int:
        return self.dataset.num_inputs

    def noisy_gram(self, h: np.ndarray) -> np.ndarray:
        """Kt(h) = K_D + diag(exp h) / S, with exp h clamped."""
        noise = np.clip(np.exp(np.asarray(h, dtype=float)), *NOISE_CLAMP)
        return self.gram_f + np.diag(noise / self.dataset.replicates)


@log_function_call
def fit(
    dataset: ReplicatedDataset,
    kernel_f: SeKernelParams,
    kernel_h: SeKernelParams,
    jitter: float = DEFAULT_JITTER,
    omega_sq: Optional[float] = None,
) -> HgpModel:
    """
    Compute the Gram matrices and the proposal parameters.

    Args:
        dataset: Replicated observations with S >= 2
        kernel_f: Kernel of the latent function
        kernel_h: Kernel of the noise log-variance
        jitter: Diagonal increment for L_D and Sigma_h
        omega_sq: Override of omega^2 (defaults to the dataset's value)

    Raises:
        DatasetError: If the dataset has no log-variance statistics
        KernelError: On kernel/input mismatch or a failed factorization
    """
    if not dataset.supports_proposal:
        raise DatasetError("fitting the proposal requires S >= 2 and nonzero variances")
    if omega_sq is None:
        omega_sq = dataset.omega ** 2

    with RequestLogger("fit", num_inputs=dataset.num_inputs, replicates=dataset.replicates):
        K_D = gram(kernel_f, dataset.X)
        L_D = gram(kernel_h, dataset.X)

        shifted = chol_jitter(L_D, omega_sq)
        proposal_mean = L_D @ shifted.solve(dataset.z)
        sigma = L_D - L_D.T @ shifted.solve(L_D)
        sigma = 0.5 * (sigma + sigma.T)

        gram_h = chol_jitter(L_D, jitter)
        proposal_cov = chol_jitter(sigma, jitter)

    logger.info(
        "Proposal fitted",
        num_inputs=dataset.num_inputs,
        omega_sq=omega_sq,
        proposal_mean_range=[float(proposal_mean.min()), float(proposal_mean.max())],
    )

    return HgpModel(
        dataset=dataset,
        kernel_f=kernel_f,
        kernel_h=kernel_h,
        jitter=float(jitter),
        omega_sq=float(omega_sq),
        gram_f=_readonly(K_D),
        gram_h=gram_h,
        proposal_mean=_readonly(proposal_mean),
        proposal_cov=proposal_cov,
    )


def _gaussian_logpdf_rows(factor: GramFactor, H: np.ndarray, mean: np.ndarray) -> np.ndarray:
    R = solve_triangular(factor.lower, (H - mean).T, lower=True, check_finite=False)
    return -0.5 * np.sum(R * R, axis=0) - factor.half_logdet() - 0.5 * factor.size * _LOG_2PI


def log_unnormalized_weight(model: HgpModel, h) -> float:
    """
    Log importance weight of a single h vector (up to a common constant).

    ``log N(ybar|0,Kt(h)) + log N(h|0,L_D+eps I) - log N(h|mu_h,Sigma_h+eps I)``

    Raises:
        InferenceError: If h is not finite
        NotPositiveDefiniteError: If Kt(h) cannot be factored
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.shape[0] != model.num_inputs or not np.all(np.isfinite(h)):
        raise InferenceError("h must be a finite vector with one entry per input")
    likelihood = chol_jitter(model.noisy_gram(h), 0.0)
    zeros = np.zeros(model.num_inputs)
    return (
        likelihood.log_density(model.dataset.y_mean, zeros)
        + model.gram_h.log_density(h, zeros)
        - model.proposal_cov.log_density(h, model.proposal_mean)
    )


def normalize_log_weights(log_weights: np.ndarray) -> np.ndarray:
    """
    Max-subtract, exponentiate and divide by the sum.

    Raises:
        InferenceError: If the log-weights are not all finite
    """
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0 or not np.all(np.isfinite(lw)):
        raise InferenceError("log-weights must be finite")
    w = np.exp(lw - lw.max())
    total = w.sum()
    # the maximum contributes exp(0) = 1, so total >= 1
    assert total >= 1.0
    return w / total


# ============================================
# Ensemble
# ============================================

class _ChunkResult(NamedTuple):
    factors: np.ndarray
    inverse_factors: np.ndarray
    alpha: np.ndarray
    log_likelihood: np.ndarray


def _factorize_chunk(model: HgpModel, H: np.ndarray, offset: int) -> _ChunkResult:
    D = model.num_inputs
    noise = np.clip(np.exp(H), *NOISE_CLAMP) / model.dataset.replicates
    K = np.broadcast_to(model.gram_f, (H.shape[0], D, D)).copy()
    idx = np.arange(D)
    K[:, idx, idx] += noise

    try:
        factors = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        for i, Ki in enumerate(K):
            try:
                chol_jitter(Ki, 0.0)
            except NotPositiveDefiniteError as e:
                raise InferenceError(
                    f"Kt(h) of sample {offset + i} is not positive definite (pivot {e.pivot})"
                ) from e
        raise

    eye = np.eye(D)
    inverse = np.stack([
        solve_triangular(L, eye, lower=True, check_finite=False) for L in factors
    ])
    r = np.einsum("mij,j->mi", inverse, model.dataset.y_mean)
    alpha = np.einsum("mji,mj->mi", inverse, r)
    log_diag = np.log(np.diagonal(factors, axis1=1, axis2=2)).sum(axis=1)
    log_likelihood = -0.5 * np.sum(r * r, axis=1) - log_diag - 0.5 * D * _LOG_2PI

    return _ChunkResult(
        factors=factors,
        inverse_factors=inverse,
        alpha=alpha,
        log_likelihood=log_likelihood,
    )


class ImportanceEnsemble(BaseModel):
    """
    Weighted h-samples with cached per-sample factorizations of Kt(h).

    ``inverse_factors[m]`` is the inverse of the lower Cholesky factor of
    Kt(h^(m)); ``alpha[m] = Kt(h^(m))^-1 ybar``. The ``expected_*`` fields
    are weighted averages used by the quadratic-form variance.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: HgpModel
    samples: np.ndarray
    factors: np.ndarray
    inverse_factors: np.ndarray
    alpha: np.ndarray
    log_weights: np.ndarray
    weights: np.ndarray
    ess: float
    expected_alpha: np.ndarray
    expected_alpha_outer: np.ndarray
    expected_inverse: np.ndarray

    @property
    def size(self) -> int:
        """M."""
        return self.samples.shape[0]

    @classmethod
    def from_samples(
        cls,
        model: HgpModel,
        samples: np.ndarray,
        workers: Optional[int] = None,
        chunk_size: Optional[int] = None,
    ) -> "ImportanceEnsemble":
        """
        Weight and factorize externally supplied h-samples.

        Chunks may be factorized on several threads; results are assembled
        in sample order, so the output does not depend on ``workers``.

        Raises:
            InferenceError: On non-finite samples or a failed factorization
        """
        H = np.atleast_2d(np.asarray(samples, dtype=float))
        if H.shape[1] != model.num_inputs:
            raise InferenceError(
                f"samples have {H.shape[1]} columns, expected {model.num_inputs}"
            )
        if H.shape[0] < 1:
            raise InferenceError("at least one sample is required")
        if not np.all(np.isfinite(H)):
            raise InferenceError("samples must be finite")

        settings = get_settings()
        workers = workers or settings.workers
        chunk_size = chunk_size or settings.ensemble_chunk_size
        starts = list(range(0, H.shape[0], chunk_size))

        def run(start: int) -> _ChunkResult:
            return _factorize_chunk(model, H[start:start + chunk_size], start)

        if workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(run, starts))
        else:
            chunks = [run(s) for s in starts]

        factors = np.concatenate([c.factors for c in chunks])
        inverse = np.concatenate([c.inverse_factors for c in chunks])
        alpha = np.concatenate([c.alpha for c in chunks])
        log_likelihood = np.concatenate([c.log_likelihood for c in chunks])

        zeros = np.zeros(model.num_inputs)
        log_weights = (
            log_likelihood
            + _gaussian_logpdf_rows(model.gram_h, H, zeros)
            - _gaussian_logpdf_rows(model.proposal_cov, H, model.proposal_mean)
        )
        weights = normalize_log_weights(log_weights)

        root = np.sqrt(weights)
        scaled_alpha = alpha * root[:, None]
        scaled_inverse = (inverse * root[:, None, None]).reshape(-1, model.num_inputs)

        return cls(
            model=model,
            samples=_readonly(H),
            factors=_readonly(factors),
            inverse_factors=_readonly(inverse),
            alpha=_readonly(alpha),
            log_weights=_readonly(log_weights),
            weights=_readonly(weights),
            ess=float(1.0 / np.sum(weights * weights)),
            expected_alpha=_readonly(weights @ alpha),
            expected_alpha_outer=_readonly(scaled_alpha.T @ scaled_alpha),
            expected_inverse=_readonly(scaled_inverse.T @ scaled_inverse),
        )

    def at(self, x) -> "PointPosterior":
        """Per-sample conditional moments at ``x``."""
        return PointPosterior.build(self, x)


@log_function_call
def draw_ensemble(
    model: HgpModel,
    M: int,
    seed: Seed,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> ImportanceEnsemble:
    """
    Draw M samples from the proposal and build the weighted ensemble.

    ``h^(m) = mu_h + chol(Sigma_h + eps I) xi^(m)``, with all xi drawn up front
    from one generator seeded by ``seed`` (an int or a sequence of ints).

    Raises:
        InferenceError: If M < 1 or a factorization fails
    """
    if M < 1:
        raise InferenceError(f"M must be >= 1, got {M}")
    with RequestLogger("draw_ensemble", samples=M):
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        xi = rng.standard_normal((M, model.num_inputs))
        H = model.proposal_mean + xi @ model.proposal_cov.lower.T
        ensemble = ImportanceEnsemble.from_samples(model, H, workers=workers, chunk_size=chunk_size)

    logger.info(
        "Ensemble drawn",
        samples=M,
        ess=round(ensemble.ess, 3),
        max_weight=float(ensemble.weights.max()),
    )
    return ensemble


# ============================================
# Per-input posterior
# ============================================

def _erfc_terms(means: np.ndarray, stds: np.ndarray, gamma: float) -> np.ndarray:
    positive = stds > 0.0
    scale = np.where(positive, stds, 1.0)
    smooth = erfc((gamma - means) / (SQRT_2 * scale))
    step = np.where(gamma < means, 2.0, np.where(gamma > means, 0.0, 1.0))
    return np.where(positive, smooth, step)


class PointPosterior(BaseModel):
    """
    Mixture of Gaussians describing f(x) | D at one input.

    Component m has mean ``means[m]``, std ``stds[m]`` and weight
    ``weights[m]``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x: np.ndarray
    kernel_vector: np.ndarray
    prior_variance: float
    means: np.ndarray
    variances: np.ndarray
    stds: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(
        cls,
        ensemble: ImportanceEnsemble,
        x,
        kernel_vector: Optional[np.ndarray] = None,
    ) -> "PointPosterior":
        """
        ``kernel_vector`` may carry a precomputed column of ``cross_matrix``.

        Raises:
            InferenceError: If some conditional variance is below -1e-9
        """
        model = ensemble.model
        x = np.asarray(x, dtype=float).reshape(-1)
        if kernel_vector is None:
            k = cross_vector(model.kernel_f, model.dataset.X, x)
        else:
            k = np.asarray(kernel_vector, dtype=float)
        prior = model.kernel_f.amplitude
        means = ensemble.alpha @ k
        v = np.einsum("mij,j->mi", ensemble.inverse_factors, k)
        variances = prior - np.sum(v * v, axis=1)
        worst = float(variances.min())
        if worst < -NEGATIVE_VARIANCE_TOL:
            raise InferenceError(
                f"conditional variance {worst:.3e} at x={x.tolist()} is negative"
            )
        return cls(
            x=_readonly(x),
            kernel_vector=_readonly(k),
            prior_variance=float(prior),
            means=_readonly(means),
            variances=_readonly(variances),
            stds=_readonly(np.sqrt(np.maximum(variances, 0.0))),
            weights=ensemble.weights,
        )

    def mean(self) -> float:
        return float(self.weights @ self.means)

    def mixture_variance(self) -> float:
        """Unfloored ``sum w (var + mean^2) - (sum w mean)^2``."""
        mean = self.mean()
        return float(self.weights @ (self.variances + self.means * self.means) - mean * mean)

    def delta(self, gamma: float) -> float:
        """``0.5 * sum_m w_m erfc((gamma - mean_m) / (sqrt2 std_m))``, in [0, 1]."""
        value = 0.5 * float(self.weights @ _erfc_terms(self.means, self.stds, gamma))
        return min(max(value, 0.0), 1.0)

    def solve(self, target: float) -> float:
        """
        Bisection for gamma with ``delta(gamma) = target``.

        Stops once ``|delta - target| <= 1e-10`` or the bracket can no longer
        be split.

        Raises:
            InferenceError: If target is outside (0, 1)
            BracketingError: If no bracket is found after 200 doublings
        """
        if not 0.0 < target < 1.0:
            raise InferenceError(f"target must lie in (0, 1), got {target}")

        center = self.mean()
        width = 1.0 + float(self.stds.max()) + float(np.abs(self.means - center).max())
        lo, hi = center - width, center + width
        for _ in range(MAX_BRACKET_DOUBLINGS):
            if self.delta(lo) >= target and self.delta(hi) <= target:
                break
            width *= 2.0
            lo, hi = center - width, center + width
        else:
            raise BracketingError(
                f"could not bracket delta = {target} at x={self.x.tolist()}"
            )

        for _ in range(MAX_BISECTIONS):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                # bracket collapsed to adjacent doubles
                return mid
            value = self.delta(mid)
            if abs(value - target) <= DELTA_ATOL:
                return mid
            if value > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


# ============================================
# Posterior operations
# ============================================

def conditional_moments(ensemble: ImportanceEnsemble, m: int, x) -> tuple[float, float]:
    """
    Mean and standard deviation of f(x) given h = h^(m).

    Raises:
        InferenceError: On an invalid index or a negative variance
    """
    if not 0 <= m < ensemble.size:
        raise InferenceError(f"sample index {m} outside [0, {ensemble.size})")
    point = ensemble.at(x)
    return float(point.means[m]), float(point.stds[m])


def posterior_mean(ensemble: ImportanceEnsemble, x) -> float:
    """E[f(x) | D]."""
    return ensemble.at(x).mean()


def quadratic_variance(ensemble: ImportanceEnsemble, k: np.ndarray, prior_variance: float) -> tuple[float, float]:
    """
    ``k(x,x) + k^T K(D) k`` from weighted expectations, plus a rounding scale.

    ``K(D) = E[a a^T] - E[a] E[a]^T - E[Kt^-1]`` with ``a = Kt^-1 ybar``.
    The second value bounds the floating-point error of the quadratic form.
    """
    ea = ensemble.expected_alpha
    value = (
        prior_variance
        + k @ ensemble.expected_alpha_outer @ k
        - (k @ ea) ** 2
        - k @ ensemble.expected_inverse @ k
    )
    ak = np.abs(k)
    magnitude = (
        prior_variance
        + ak @ np.abs(ensemble.expected_alpha_outer) @ ak
        + (ak @ np.abs(ea)) ** 2
        + ak @ np.abs(ensemble.expected_inverse) @ ak
    )
    return float(value), float(k.shape[0] * np.finfo(float).eps * magnitude)


def posterior_variance(ensemble: ImportanceEnsemble, x) -> float:
    """
    V[f(x) | D] from the mixture identity, cross-checked against the
    quadratic form with K(D).

    Raises:
        ConsistencyError: If the two forms disagree beyond 1e-6 relative
            (after allowing for the rounding error of the quadratic form)
    """
    return _checked_variance(ensemble, ensemble.at(x))


def _checked_variance(ensemble: ImportanceEnsemble, point: PointPosterior) -> float:
    mixture = point.mixture_variance()
    quadratic, rounding = quadratic_variance(ensemble, point.kernel_vector, point.prior_variance)
    gap = abs(mixture - quadratic)
    if gap > CONSISTENCY_RTOL * max(abs(mixture), abs(quadratic)) + rounding:
        raise ConsistencyError(
            f"variance forms disagree at x={point.x.tolist()}: "
            f"mixture={mixture!r}, quadratic={quadratic!r}"
        )
    return max(mixture, 0.0)


def delta(ensemble: ImportanceEnsemble, x, gamma: float) -> float:
    """``delta(gamma, x, D)``; ``Pr(f(x) <= gamma | D) = 1 - delta``."""
    return ensemble.at(x).delta(gamma)


def cdf(ensemble: ImportanceEnsemble, x, gamma: float) -> float:
    """Pr(f(x) <= gamma | D)."""
    return 1.0 - delta(ensemble, x, gamma)


def interval_probability(ensemble: ImportanceEnsemble, x, gamma_l: float, gamma_u: float) -> float:
    """
    Pr(gamma_l < f(x) <= gamma_u | D).

    Raises:
        InferenceError: Unless gamma_l < gamma_u
    """
    if not gamma_l < gamma_u:
        raise InferenceError(f"interval requires gamma_l < gamma_u, got ({gamma_l}, {gamma_u})")
    point = ensemble.at(x)
    return max(point.delta(gamma_l) - point.delta(gamma_u), 0.0)


def solve_delta(ensemble: ImportanceEnsemble, x, target: float) -> float:
    """Level gamma with ``delta(gamma) = target`` by bisection."""
    return ensemble.at(x).solve(target)


def quantile(ensemble: ImportanceEnsemble, x, p: float) -> float:
    """gamma with Pr(f(x) <= gamma | D) = p."""
    return solve_delta(ensemble, x, 1.0 - p)


def predict(ensemble: ImportanceEnsemble, Xs) -> List[PosteriorSummary]:
    """Posterior mean and variance at each row of ``Xs``."""
    model = ensemble.model
    Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
    K = cross_matrix(model.kernel_f, model.dataset.X, Xs)
    summaries = []
    for j, x in enumerate(Xs):
        point = PointPosterior.build(ensemble, x, kernel_vector=K[:, j])
        summaries.append(
            PosteriorSummary(
                x=[float(v) for v in x],
                mean=point.mean(),
                variance=_checked_variance(ensemble, point),
            )
        )
    return summaries


def weights_table(ensemble: ImportanceEnsemble) -> List[tuple]:
    """Rows ``(m, log_weight, weight, ess)`` for diagnostics."""
    return [
        (m, float(lw), float(w), ensemble.ess)
        for m, (lw, w) in enumerate(zip(ensemble.log_weights, ensemble.weights))
    ]


# ============================================
# Reference computations
# ============================================

def homoscedastic_posterior(
    kernel_f: SeKernelParams,
    X: np.ndarray,
    y_mean: np.ndarray,
    noise_variance: float,
    x,
) -> tuple[float, float]:
    """
    Closed-form GP posterior (mean, variance) with a fixed noise variance on
    the averaged outputs.
    """
    K = gram(kernel_f, X) + noise_variance * np.eye(len(y_mean))
    factor = chol_jitter(K, 0.0)
    k = cross_vector(kernel_f, X, x)
    mean = float(k @ factor.solve(np.asarray(y_mean, dtype=float)))
    v = factor.whiten(k)
    return mean, float(kernel_f.amplitude - v @ v)


def quadrature_expectations(
    model: HgpModel,
    x,
    gammas: Sequence[float] = (),
    points: int = 401,
    width: float = 8.0,
) -> Dict[str, object]:
    """
    Tensor trapezoid quadrature of the posterior over h (D <= 3).

    The grid spans ``mu_h,i +- width * sqrt(Sigma_h,ii)`` per dimension and
    the integrand is the unnormalized target N(ybar|0,Kt(h)) N(h|0,L_D+eps I).
    Uses dense inverses and determinants only, so it shares no code path with
    the importance sampler.

    Returns:
        Dict with ``mean``, ``variance`` and ``delta`` (list aligned with gammas)

    Raises:
        InferenceError: If D > 3
    """
    D = model.num_inputs
    if D > 3:
        raise InferenceError("quadrature oracle supports at most 3 inputs")

    sd = np.sqrt(np.diag(model.proposal_cov.matrix) + model.jitter)
    axes = [
        np.linspace(mu - width * s, mu + width * s, points)
        for mu, s in zip(model.proposal_mean, sd)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    H = np.stack([m.reshape(-1) for m in mesh], axis=1)

    trap = np.ones(points)
    trap[[0, -1]] = 0.5
    node_weight = trap
    for _ in range(D - 1):
        node_weight = np.multiply.outer(node_weight, trap)
    node_weight = node_weight.reshape(-1)

    S = model.dataset.replicates
    ybar = model.dataset.y_mean
    K = np.broadcast_to(model.gram_f, (H.shape[0], D, D)).copy()
    idx = np.arange(D)
    K[:, idx, idx] += np.clip(np.exp(H), *NOISE_CLAMP) / S
    K_inv = np.linalg.inv(K)
    _, logdet = np.linalg.slogdet(K)

    prior = model.gram_h.matrix + model.jitter * np.eye(D)
    prior_inv = np.linalg.inv(prior)
    _, prior_logdet = np.linalg.slogdet(prior)

    log_target = (
        -0.5 * np.einsum("i,nij,j->n", ybar, K_inv, ybar)
        - 0.5 * logdet
        - 0.5 * np.einsum("ni,ij,nj->n", H, prior_inv, H)
        - 0.5 * prior_logdet
    )
    mass = node_weight * np.exp(log_target - log_target.max())
    mass = mass / mass.sum()

    k = cross_vector(model.kernel_f, model.dataset.X, x)
    means = np.einsum("i,nij,j->n", k, K_inv, ybar)
    variances = model.kernel_f.amplitude - np.einsum("i,nij,j->n", k, K_inv, k)
    stds = np.sqrt(np.maximum(variances, 0.0))

    mean = float(mass @ means)
    variance = float(mass @ (variances + means * means) - mean * mean)
    deltas = [0.5 * float(mass @ _erfc_terms(means, stds, g)) for g in gammas]
    return {"mean": mean, "variance": variance, "delta": deltas}
