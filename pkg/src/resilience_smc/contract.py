"""Restartable-simulator abstraction shared by every estimator.

A simulator is any object with ``grid``, ``initial_state``, ``step`` and
``reaction``. Estimators never look inside ``SimulatorState.model_state``.
Simulators may additionally provide a fast ``propagate`` method; it must be
draw-for-draw equivalent to repeated ``step`` calls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional, Protocol, runtime_checkable

from .rng import RandomStream


class ConfigError(ValueError):
    """Invalid model, budget or experiment configuration."""


class HorizonExhausted(RuntimeError):
    """Raised when stepping a state that is already at the horizon."""


@dataclass(frozen=True)
class TimeGrid:
    delta: float
    horizon: float

    def __post_init__(self):
        if not (self.delta > 0 and self.horizon > 0):
            raise ConfigError("delta and horizon must be positive")
        steps = round(self.horizon / self.delta)
        if steps < 1 or not math.isclose(steps * self.delta, self.horizon, rel_tol=1e-9):
            raise ConfigError(
                f"horizon {self.horizon} is not an integer multiple of delta {self.delta}")

    @property
    def steps(self) -> int:
        """Step count J."""
        return round(self.horizon / self.delta)


@dataclass(frozen=True)
class SimulatorState:
    model_state: Any
    time_index: int = 0


@dataclass(frozen=True)
class Propagation:
    """Outcome of running one attempt toward a threshold.

    ``prev_reaction`` is the reaction of the state one step before ``state``,
    or ``None`` when no step was taken.
    """

    state: SimulatorState
    steps: int
    hit: bool
    prev_reaction: Optional[float]


@runtime_checkable
class Simulator(Protocol):
    grid: TimeGrid

    def initial_state(self, stream: RandomStream) -> SimulatorState: ...

    def step(self, state: SimulatorState, stream: RandomStream) -> SimulatorState: ...

    def reaction(self, state: SimulatorState) -> float: ...


def step_loop(simulator, state: SimulatorState, stream: RandomStream,
              threshold: float) -> Propagation:
    """Reference propagation: call ``step`` until the threshold or the horizon."""
    J = simulator.grid.steps
    steps = 0
    prev = None
    g = simulator.reaction(state)
    while g < threshold:
        if state.time_index >= J:
            return Propagation(state, steps, False, prev)
        prev = g
        state = simulator.step(state, stream)
        steps += 1
        g = simulator.reaction(state)
    return Propagation(state, steps, True, prev)


def propagate(simulator, state: SimulatorState, stream: RandomStream,
              threshold: float) -> Propagation:
    """Advance ``state`` until ``reaction >= threshold`` or the horizon.

    Uses the simulator's own ``propagate`` when it has one.
    """
    fast = getattr(simulator, "propagate", None)
    if fast is not None:
        return fast(state, stream, threshold)
    return step_loop(simulator, state, stream, threshold)
