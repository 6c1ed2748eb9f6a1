"""
Protocol interfaces for hgpcc.

Simulation code depends on these protocols, not on concrete truth functions
or controllers.
"""

from src.interfaces.control import ControlStrategyProtocol
from src.interfaces.truth import TruthFunctionProtocol


__all__ = [
    "ControlStrategyProtocol",
    "TruthFunctionProtocol",
]
