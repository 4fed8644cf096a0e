"""Synthetic counting chain with a closed-form hitting probability.

The state is an integer count that advances by one with probability ``q`` on
each step. With ``K`` levels at counts ``1..K`` and a horizon of ``K`` steps,
reaching count ``K`` requires advancing on every step, so ``p = q**K``.
"""
from __future__ import annotations

from typing import Optional

from .contract import ConfigError, HorizonExhausted, SimulatorState, TimeGrid
from .estimators import LevelSchedule


class ToyChain:
    def __init__(self, q: float, K: int, horizon_steps: Optional[int] = None):
        if not 0.0 < q <= 1.0:
            raise ConfigError(f"q must lie in (0, 1], got {q}")
        if K < 1:
            raise ConfigError(f"K must be >= 1, got {K}")
        self.q = q
        self.K = K
        self.grid = TimeGrid(1.0, float(horizon_steps if horizon_steps is not None else K))

    @property
    def exact_probability(self) -> float:
        """Closed form, valid when the horizon equals ``K`` steps."""
        return self.q ** self.K

    def default_levels(self) -> LevelSchedule:
        return LevelSchedule(tuple(float(c) for c in range(self.K + 1)))

    def initial_state(self, stream=None) -> SimulatorState:
        return SimulatorState(0, 0)

    def step(self, state: SimulatorState, stream) -> SimulatorState:
        if state.time_index >= self.grid.steps:
            raise HorizonExhausted("toy chain stepped past its horizon")
        advance = stream.uniform() < self.q
        return SimulatorState(state.model_state + advance, state.time_index + 1)

    def reaction(self, state: SimulatorState) -> float:
        return float(state.model_state)
