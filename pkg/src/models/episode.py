"""
Pydantic models for closed-loop episode records.
"""

import math
from typing import List

from pydantic import BaseModel, ConfigDict, Field


class StepContext(BaseModel):
    """What a controller sees at step t."""

    model_config = ConfigDict(frozen=True)

    t: int = Field(ge=0)
    xi1: float = Field(description="Position")
    xi2: float = Field(description="Velocity")
    r1: float
    r2: float
    r2_next: float = Field(description="Reference velocity at t+1")
    v: float = Field(description="Reference input v(t)")
    u_ff: float = Field(description="Feedforward-feedback input u_hat")
    time_step: float = Field(gt=0.0)

    @property
    def state(self) -> List[float]:
        return [self.xi1, self.xi2]


class ControlDecision(BaseModel):
    """
    Additional input chosen by a controller.

    Feedback baselines leave the chance-constraint diagnostics at NaN.
    """

    model_config = ConfigDict(frozen=True)

    u: float
    u_l: float = math.nan
    u_u: float = math.nan
    gamma_u: float = math.nan
    gamma_l: float = math.nan
    infeasible: bool = False


class EpisodeRow(BaseModel):
    """
    One control step.

    ``r*``/``xi*`` are the values at step t; ``r2_next``/``xi2_next`` are the
    velocities at t+1 on which the violation flag is evaluated. Bounds and
    levels are NaN for controllers that do not compute them.
    """

    model_config = ConfigDict(frozen=True)

    t: int = Field(ge=0)
    r1: float
    r2: float
    xi1: float
    xi2: float
    u_ff: float = Field(description="Feedforward-feedback input u_hat")
    u: float = Field(description="Additional control input")
    u_l: float = math.nan
    u_u: float = math.nan
    gamma_u: float = math.nan
    gamma_l: float = math.nan
    infeasible: bool = False
    violation: bool = False
    r2_next: float
    xi2_next: float

    @classmethod
    def columns(cls) -> List[str]:
        """CSV column order."""
        return list(cls.model_fields)

    def values(self) -> list:
        """Row values in column order."""
        return [getattr(self, name) for name in self.columns()]


class EpisodeSummary(BaseModel):
    """Table-style metrics of one episode."""

    model_config = ConfigDict(frozen=True)

    controller: str
    cost: float = Field(ge=0.0, description="sum_t |u(t)|")
    violations: int = Field(ge=0, description="Steps with |xi2(t+1) - r2(t+1)| > r_bar")
    infeasible_steps: int = Field(ge=0, description="Steps with u_l > u_u")

    @classmethod
    def columns(cls) -> List[str]:
        return list(cls.model_fields)

    def values(self) -> list:
        return [getattr(self, name) for name in self.columns()]


class EpisodeRecord(BaseModel):
    """Trajectory and summary of one controller run."""

    model_config = ConfigDict(frozen=True)

    controller: str
    rows: List[EpisodeRow]
    summary: EpisodeSummary
