"""
Protocol interface for the ground-truth functions used by simulations.

The simulator and the plant depend on this interface, not on the concrete
functions, so tests can plug in any callable.
"""

from typing import Protocol

import numpy as np


class TruthFunctionProtocol(Protocol):
    """A function evaluated row-wise on an ``(N, n)`` input array."""

    def __call__(self, X: np.ndarray) -> np.ndarray:
        """
        Evaluate the function.

        Args:
            X: Inputs, one per row

        Returns:
            np.ndarray: ``(N,)`` values
        """
        ...
