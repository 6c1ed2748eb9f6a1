"""
Pydantic models for configuration, kernel hyperparameters and episode records.
"""

from src.models.episode import (
    ControlDecision,
    EpisodeRecord,
    EpisodeRow,
    EpisodeSummary,
    StepContext,
)

from src.models.experiment import (
    ControlConfig,
    DatasetBlock,
    ExperimentConfig,
    GridSpec,
    InferenceBlock,
    KernelBlock,
)

from src.models.kernel import SeKernelParams


__all__ = [
    # Episode Models
    "ControlDecision",
    "EpisodeRecord",
    "EpisodeRow",
    "EpisodeSummary",
    "StepContext",
    # Config Models
    "ControlConfig",
    "DatasetBlock",
    "ExperimentConfig",
    "GridSpec",
    "InferenceBlock",
    "KernelBlock",
    # Kernel Models
    "SeKernelParams",
]
