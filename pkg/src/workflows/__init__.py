"""
Experiment workflows.
"""

from src.workflows.experiment import ExperimentResult, ExperimentRunner, run_experiment


__all__ = [
    "ExperimentResult",
    "ExperimentRunner",
    "run_experiment",
]
