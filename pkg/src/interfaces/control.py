"""
Protocol interface for tracking controllers.

The episode runner depends on this interface, not on the concrete
controllers, so a baseline and the chance-constrained controller run
through the same loop.
"""

from typing import Protocol

from src.models.episode import ControlDecision, StepContext


class ControlStrategyProtocol(Protocol):
    """Maps the state of one step to an additional control input."""

    @property
    def name(self) -> str:
        """Label used in summaries and artifact file names."""
        ...

    def decide(self, step: StepContext) -> ControlDecision:
        """
        Compute the additional input u(t).

        Args:
            step: State, reference and feedforward input at step t

        Returns:
            ControlDecision: u(t) plus optional diagnostics
        """
        ...
