"""
Pydantic models for the experiment configuration file.

The file has four named blocks (dataset, kernels, inference, control) plus
the output directory. Seeds have no defaults: every run is reproducible from
its config alone.
"""

import math
from pathlib import Path
from typing import List, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.kernel import SeKernelParams


class GridSpec(BaseModel):
    """Regular tensor grid of training inputs on [lower, upper]^2."""

    model_config = ConfigDict(extra="forbid")

    lower: float = Field(default=-1.0, description="Lower bound of every axis")
    upper: float = Field(default=1.0, description="Upper bound of every axis")
    points_per_axis: int = Field(default=10, ge=1, description="Points per axis (D = points^2)")

    @model_validator(mode="after")
    def validate_bounds(self) -> "GridSpec":
        """A grid with more than one point per axis needs upper > lower."""
        if self.points_per_axis > 1 and not self.upper > self.lower:
            raise ValueError("grid upper must exceed lower")
        return self


class DatasetBlock(BaseModel):
    """Training data generation."""

    model_config = ConfigDict(extra="forbid")

    grid: GridSpec = Field(default_factory=GridSpec)
    replicates: int = Field(ge=1, description="Outputs S observed at every input")
    truth: Literal["sinusoid", "zero"] = Field(
        default="sinusoid",
        description="Ground-truth (mean, log-variance) pair"
    )
    seed: int = Field(ge=0, description="Seed of the observation noise")


class KernelBlock(BaseModel):
    """Hyperparameters of the two GPs."""

    model_config = ConfigDict(extra="forbid")

    f: SeKernelParams = Field(description="Kernel of the latent function")
    h: SeKernelParams = Field(description="Kernel of the noise log-variance")


class InferenceBlock(BaseModel):
    """Importance-sampling settings."""

    model_config = ConfigDict(extra="forbid")

    samples: int = Field(ge=1, description="Ensemble size M")
    jitter: float = Field(default=1e-12, ge=0.0, description="Diagonal jitter eps")
    seed: int = Field(ge=0, description="Seed of the proposal draws")
    redraw_per_step: bool = Field(
        default=False,
        description="Draw a fresh ensemble at every control step"
    )
    posterior_grid_points: int = Field(
        default=0,
        ge=0,
        description="Points per axis of the optional posterior.csv grid (0 disables it)"
    )


def baseline_name(kappa: float) -> str:
    """Controller name of the feedback baseline with gain kappa."""
    return f"kappa_{kappa:g}"


class ControlConfig(BaseModel):
    """Closed-loop tracking experiment."""

    model_config = ConfigDict(extra="forbid")

    time_step: float = Field(gt=0.0, description="Discrete time period tau")
    margin: float = Field(gt=0.0, description="Tracking margin r_bar")
    violation_budget: float = Field(
        gt=0.0,
        lt=1.0,
        description="Per-step violation probability delta*"
    )
    horizon: int = Field(ge=1, description="Number of steps T")
    gains: List[float] = Field(
        default_factory=lambda: [1.0, 0.5, 0.1],
        description="Baseline feedback gains kappa"
    )
    proposed: bool = Field(default=True, description="Run the chance-constrained controller")
    reference_amplitude: float = Field(default=3.0, description="Amplitude of v(t)")
    reference_angular_frequency: float = Field(
        default=math.pi,
        description="v(t) = amplitude * cos(angular_frequency * tau * t)"
    )

    @field_validator("gains")
    @classmethod
    def validate_gains(cls, v: List[float]) -> List[float]:
        """Gains must be finite and give distinct controller names."""
        if any(not math.isfinite(k) for k in v):
            raise ValueError("gains must be finite")
        names = [baseline_name(k) for k in v]
        clashes = sorted({n for n in names if names.count(n) > 1})
        if clashes:
            raise ValueError(f"gains must be distinct, got repeated names {clashes}")
        return v


class ExperimentConfig(BaseModel):
    """Complete experiment description."""

    model_config = ConfigDict(extra="forbid")

    dataset: DatasetBlock
    kernels: KernelBlock
    inference: InferenceBlock
    control: ControlConfig
    output_dir: Path = Field(description="Directory receiving all artifacts")

    def cross_block_issues(self) -> List[str]:
        """Invariants spanning several blocks."""
        issues = []
        if self.control.proposed and self.dataset.replicates < 2:
            issues.append(
                "dataset.replicates: the proposed controller needs S >= 2 "
                f"replicates per input, got {self.dataset.replicates}"
            )
        for name in ("f", "h"):
            dim = getattr(self.kernels, name).input_dim
            if dim != 2:
                issues.append(
                    f"kernels.{name}.precision: the plant state is 2-dimensional, got {dim} weights"
                )
        if not self.control.proposed and not self.control.gains:
            issues.append("control: no controller selected (proposed is false and gains is empty)")
        return issues

    @model_validator(mode="after")
    def validate_blocks(self) -> "ExperimentConfig":
        """Reject configs violating a cross-block invariant."""
        issues = self.cross_block_issues()
        if issues:
            raise ValueError("\n".join(issues))
        return self
