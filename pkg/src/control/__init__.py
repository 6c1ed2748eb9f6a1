"""
Reference generation, plant simulation and tracking controllers.
"""

from src.control.controller import (
    ChanceConstrainedSparseController,
    FeedbackController,
    TrackingController,
    run_episode,
    sparse_control,
)


__all__ = [
    "ChanceConstrainedSparseController",
    "FeedbackController",
    "TrackingController",
    "run_episode",
    "sparse_control",
]
