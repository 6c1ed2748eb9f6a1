"""
Squared-exponential kernel evaluation, Gram assembly and jittered Cholesky.

Inputs are numpy arrays of shape ``(D, n)`` (one row per input). Gram
matrices are exactly symmetric because ``(a-b)^2`` and ``(b-a)^2`` round
identically and every entry is reduced in the same order.
"""

from typing import Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import cho_solve, lapack, solve_triangular

from src.errors import KernelError, NotPositiveDefiniteError
from src.models.kernel import SeKernelParams


Inputs = Union[np.ndarray, Sequence[Sequence[float]]]


def _as_inputs(X: Inputs, params: SeKernelParams) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(X, dtype=float))
    if arr.ndim != 2 or arr.shape[1] != params.input_dim:
        raise KernelError(
            f"inputs have shape {arr.shape}, expected (*, {params.input_dim})"
        )
    return arr


def _as_point(x, params: SeKernelParams) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape[0] != params.input_dim:
        raise KernelError(
            f"input has dimension {arr.shape[0]}, expected {params.input_dim}"
        )
    return arr


def _weighted_sqdist(A: np.ndarray, B: np.ndarray, rho: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,k->ij", diff * diff, rho)


def se_eval(params: SeKernelParams, a, b) -> float:
    """
    Evaluate the kernel at a single pair of inputs.

    Raises:
        KernelError: On dimension mismatch
    """
    a = _as_point(a, params)
    b = _as_point(b, params)
    rho = np.asarray(params.precision, dtype=float)
    q = _weighted_sqdist(a[None, :], b[None, :], rho)[0, 0]
    return float(params.amplitude * np.exp(-0.5 * q))


def check_distinct(X: np.ndarray) -> None:
    """
    Reject inputs containing two identical rows (exact coordinate equality).

    Raises:
        KernelError: If a duplicate row exists
    """
    if X.shape[0] < 2:
        return
    unique, inverse, counts = np.unique(X, axis=0, return_inverse=True, return_counts=True)
    if unique.shape[0] < X.shape[0]:
        dup = int(np.argmax(counts > 1))
        rows = np.flatnonzero(np.asarray(inverse).reshape(-1) == dup).tolist()
        raise KernelError(f"duplicate inputs at rows {rows}")


def gram(params: SeKernelParams, X: Inputs) -> np.ndarray:
    """
    Gram matrix over pairwise-distinct inputs.

    Returns:
        np.ndarray: ``(D, D)`` symmetric matrix with ``amplitude`` on the diagonal

    Raises:
        KernelError: On duplicate inputs or dimension mismatch
    """
    X = _as_inputs(X, params)
    check_distinct(X)
    rho = np.asarray(params.precision, dtype=float)
    return params.amplitude * np.exp(-0.5 * _weighted_sqdist(X, X, rho))


def cross_vector(params: SeKernelParams, X: Inputs, x) -> np.ndarray:
    """Vector of kernel values ``k(x, x_d)`` for every training input."""
    X = _as_inputs(X, params)
    x = _as_point(x, params)
    rho = np.asarray(params.precision, dtype=float)
    return params.amplitude * np.exp(-0.5 * _weighted_sqdist(X, x[None, :], rho)[:, 0])


def cross_matrix(params: SeKernelParams, X: Inputs, Xs: Inputs) -> np.ndarray:
    """``(D, N)`` cross-covariance; column j equals ``cross_vector(params, X, Xs[j])``."""
    X = _as_inputs(X, params)
    Xs = _as_inputs(Xs, params)
    rho = np.asarray(params.precision, dtype=float)
    return params.amplitude * np.exp(-0.5 * _weighted_sqdist(X, Xs, rho))


class GramFactor(BaseModel):
    """
    A symmetric matrix together with the lower Cholesky factor of
    ``matrix + jitter * I``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    lower: np.ndarray
    jitter: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def half_logdet(self) -> float:
        """Half the log-determinant of the factored matrix."""
        return float(np.sum(np.log(np.diag(self.lower))))

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve ``(matrix + jitter I) z = b``."""
        return cho_solve((self.lower, True), b, check_finite=False)

    def whiten(self, b: np.ndarray) -> np.ndarray:
        """Solve ``L z = b`` with the lower factor."""
        return solve_triangular(self.lower, b, lower=True, check_finite=False)

    def log_density(self, value: np.ndarray, mean: np.ndarray) -> float:
        """Log of N(value | mean, matrix + jitter I)."""
        r = self.whiten(np.asarray(value, dtype=float) - mean)
        return float(
            -0.5 * np.dot(r, r) - self.half_logdet() - 0.5 * self.size * np.log(2.0 * np.pi)
        )


def chol_jitter(A: np.ndarray, jitter: float = 0.0) -> GramFactor:
    """
    Cholesky factor of ``A + jitter * I``.

    No jitter escalation is attempted: a breakdown is reported, not hidden.

    Args:
        A: Symmetric square matrix
        jitter: Nonnegative diagonal increment

    Raises:
        KernelError: If A is not square/symmetric or jitter is negative
        NotPositiveDefiniteError: If the factorization breaks down (carries the
            zero-based pivot index)
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise KernelError(f"expected a square matrix, got shape {A.shape}")
    if jitter < 0.0:
        raise KernelError(f"jitter must be nonnegative, got {jitter}")
    scale = max(float(np.max(np.abs(A))), 1.0) if A.size else 1.0
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * scale):
        raise KernelError("matrix is not symmetric")

    shifted = A + jitter * np.eye(A.shape[0])
    lower, info = lapack.dpotrf(shifted, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(pivot=info - 1)
    if info < 0:
        raise KernelError(f"invalid argument {-info} passed to dpotrf")

    matrix = A.copy()
    matrix.setflags(write=False)
    lower.setflags(write=False)
    return GramFactor(matrix=matrix, lower=lower, jitter=float(jitter))
