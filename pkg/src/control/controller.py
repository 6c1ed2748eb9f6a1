"""
Tracking control of a partially unknown double integrator.

    xi1(t+1) = xi1(t) + tau xi2(t)
    xi2(t+1) = xi2(t) + tau (f(xi(t)) + u_hat(t) + u(t))

The reference follows r(t+1) = r(t) + tau (r2(t), v(t)). The feedforward term
u_hat cancels the position error; the additional input u keeps the velocity
error |xi2 - r2| within r_bar. The chance-constrained controller picks the
smallest |u| such that the constraint holds with probability 1 - delta* under
the posterior of f at the current state, which makes u exactly zero whenever
the constraint is already satisfied without it.
"""

import math
from abc import ABC, abstractmethod
from typing import Callable, List, Optional

import numpy as np

from src.inference.hgp import ImportanceEnsemble
from src.interfaces.control import ControlStrategyProtocol
from src.interfaces.truth import TruthFunctionProtocol
from src.models.episode import (
    ControlDecision,
    EpisodeRecord,
    EpisodeRow,
    EpisodeSummary,
    StepContext,
)
from src.models.experiment import ControlConfig, baseline_name
from src.utils.logger import LoggerMixin, RequestLogger


# ============================================
# Dynamics
# ============================================

def reference_input(t: int, config: ControlConfig) -> float:
    """``v(t) = A cos(w tau t)``."""
    return config.reference_amplitude * math.cos(
        config.reference_angular_frequency * config.time_step * t
    )


def reference_step(r, v: float, tau: float) -> np.ndarray:
    """``r+ = r + tau (r2, v)``."""
    r = np.asarray(r, dtype=float)
    return np.array([r[0] + tau * r[1], r[1] + tau * v])


def plant_step(xi, u_ff: float, u: float, true_f: TruthFunctionProtocol, tau: float) -> np.ndarray:
    """``xi+ = xi + tau (xi2, f(xi) + u_ff + u)``; noise-free."""
    xi = np.asarray(xi, dtype=float)
    f = float(np.asarray(true_f(xi[None, :]), dtype=float).reshape(-1)[0])
    return np.array([xi[0] + tau * xi[1], xi[1] + tau * (f + u_ff + u)])


def feedforward(xi, r, v: float, tau: float) -> float:
    """``u_hat = v - (xi1 - r1) / tau``."""
    return v - (float(xi[0]) - float(r[0])) / tau


# ============================================
# Control laws
# ============================================

def sparse_control(
    ensemble: ImportanceEnsemble,
    xi,
    r_next2: float,
    u_ff: float,
    config: ControlConfig,
) -> ControlDecision:
    """
    Chance-constrained sparse input.

    With ``eta = -u_ff + (r2(t+1) - xi2) / tau`` and the posterior levels
    ``gamma_u`` (upper tail delta*/2) and ``gamma_l`` (lower tail delta*/2),
    any u in ``[u_l, u_u]`` keeps ``|xi2(t+1) - r2(t+1)| <= r_bar`` with
    probability at least 1 - delta*. The minimum-magnitude element of that
    interval is returned. An empty interval gets its midpoint and the
    ``infeasible`` flag.

    Raises:
        InferenceError: Propagated from the level computation
    """
    tau = config.time_step
    reach = config.margin / tau
    eta = -u_ff + (r_next2 - float(xi[1])) / tau

    point = ensemble.at(np.asarray(xi, dtype=float))
    gamma_u = point.solve(config.violation_budget / 2.0)
    gamma_l = point.solve(1.0 - config.violation_budget / 2.0)

    u_u = -gamma_u + reach + eta
    u_l = -gamma_l - reach + eta

    infeasible = u_l > u_u
    if infeasible:
        u = 0.5 * (u_l + u_u)
    elif u_u < 0.0:
        u = u_u
    elif u_l > 0.0:
        u = u_l
    else:
        u = 0.0

    return ControlDecision(
        u=u,
        u_l=u_l,
        u_u=u_u,
        gamma_u=gamma_u,
        gamma_l=gamma_l,
        infeasible=infeasible,
    )


def baseline_control(kappa: float, xi, r, tau: float) -> float:
    """``u = -kappa (xi2 - r2) / tau``."""
    return -kappa * (float(xi[1]) - float(r[1])) / tau


# ============================================
# Strategies
# ============================================

class TrackingController(ABC, LoggerMixin):
    """
    Base class for controllers run by :func:`run_episode`.

    Subclasses provide ``name`` and :meth:`decide`.
    """

    name: str = "controller"

    def reset(self) -> None:
        """Called before every episode."""

    @abstractmethod
    def decide(self, step: StepContext) -> ControlDecision:
        """Return u(t) for the given step."""


class ChanceConstrainedSparseController(TrackingController):
    """
    Sparse controller driven by the importance-sampled posterior of f.

    By default one ensemble serves every step. When ``redraw`` is given it is
    called with the step index and must return the ensemble for that step.
    """

    name = "proposed"

    def __init__(
        self,
        ensemble: ImportanceEnsemble,
        config: ControlConfig,
        redraw: Optional[Callable[[int], ImportanceEnsemble]] = None,
    ):
        self.ensemble = ensemble
        self.config = config
        self.redraw = redraw

    def decide(self, step: StepContext) -> ControlDecision:
        ensemble = self.ensemble if self.redraw is None else self.redraw(step.t)
        decision = sparse_control(ensemble, step.state, step.r2_next, step.u_ff, self.config)
        if decision.infeasible:
            self.logger.warning(
                "Empty admissible input interval",
                t=step.t,
                u_l=decision.u_l,
                u_u=decision.u_u,
            )
        return decision


class FeedbackController(TrackingController):
    """Proportional velocity feedback with gain kappa."""

    def __init__(self, kappa: float):
        self.kappa = kappa
        self.name = baseline_name(kappa)

    def decide(self, step: StepContext) -> ControlDecision:
        return ControlDecision(
            u=baseline_control(self.kappa, step.state, [step.r1, step.r2], step.time_step)
        )


# ============================================
# Episodes
# ============================================

def summarize(name: str, rows: List[EpisodeRow]) -> EpisodeSummary:
    """Cost, violation and infeasible-step counts recomputed from rows."""
    return EpisodeSummary(
        controller=name,
        cost=math.fsum(abs(row.u) for row in rows),
        violations=sum(1 for row in rows if row.violation),
        infeasible_steps=sum(1 for row in rows if row.infeasible),
    )


def run_episode(
    controller: ControlStrategyProtocol,
    true_f: TruthFunctionProtocol,
    config: ControlConfig,
) -> EpisodeRecord:
    """
    Simulate T steps from ``xi(0) = r(0) = (0, 0)``.

    Per step: v(t), the next reference, u_hat, the controller's u, then the
    plant. The violation flag compares the velocities at t+1.
    """
    tau = config.time_step
    xi = np.zeros(2)
    r = np.zeros(2)
    rows: List[EpisodeRow] = []

    if hasattr(controller, "reset"):
        controller.reset()

    with RequestLogger("run_episode", controller=controller.name, horizon=config.horizon):
        for t in range(config.horizon):
            v = reference_input(t, config)
            r_next = reference_step(r, v, tau)
            u_ff = feedforward(xi, r, v, tau)
            step = StepContext(
                t=t,
                xi1=float(xi[0]),
                xi2=float(xi[1]),
                r1=float(r[0]),
                r2=float(r[1]),
                r2_next=float(r_next[1]),
                v=v,
                u_ff=u_ff,
                time_step=tau,
            )
            decision = controller.decide(step)
            xi_next = plant_step(xi, u_ff, decision.u, true_f, tau)

            rows.append(EpisodeRow(
                t=t,
                r1=step.r1,
                r2=step.r2,
                xi1=step.xi1,
                xi2=step.xi2,
                u_ff=u_ff,
                u=decision.u,
                u_l=decision.u_l,
                u_u=decision.u_u,
                gamma_u=decision.gamma_u,
                gamma_l=decision.gamma_l,
                infeasible=decision.infeasible,
                violation=abs(float(xi_next[1]) - float(r_next[1])) > config.margin,
                r2_next=float(r_next[1]),
                xi2_next=float(xi_next[1]),
            ))
            xi, r = xi_next, r_next

    summary = summarize(controller.name, rows)
    return EpisodeRecord(controller=controller.name, rows=rows, summary=summary)
