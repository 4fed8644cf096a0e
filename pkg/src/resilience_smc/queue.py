"""Delay-critical wireless queue under stress and recovery dynamics.

State per step is ``(B, eta, F, rho_count)`` plus the active policy index.
Capacity is the logistic of the latent health ``eta``; delay follows Little's
law; ``rho_count`` counts consecutive steps with delay at or above the
critical threshold. Within one step ``j -> j+1`` the counter is updated from
``D[j]`` before ``B``, ``eta`` and ``F`` advance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .contract import (ConfigError, HorizonExhausted, Propagation,
                       SimulatorState, TimeGrid)
from .estimators import LevelSchedule
from .rng import CHUNK, RandomStream

EXP_CLAMP = _kernels._pykernel.EXP_CLAMP
_NO_DRAWS = np.empty(0)


def capacity(eta: float) -> float:
    """Logistic service capacity in (0, 1)."""
    x = -eta
    if x > EXP_CLAMP:
        x = EXP_CLAMP
    return 1.0 / (1.0 + math.exp(x))


def step_backlog(B: float, C: float, params: "QueueParams") -> float:
    B = B + (params.Lambda - C) * params.grid.delta
    return B if B > 0.0 else 0.0


def step_health(eta: float, C: float, F: float, params: "QueueParams",
                nu: Optional[float] = None) -> float:
    if nu is None:
        nu = params.nu
    slack = 1.0 - C
    # same branch as the kernels so every path stays bit-identical
    if params.phi == 2.0:
        return eta + nu * (slack * slack) - math.exp(F)
    return eta + nu * slack ** params.phi - math.exp(F)


def step_stress(F: float, gamma_draw: float, params: "QueueParams") -> float:
    """One AR(1) update of the latent log-stress."""
    return params.rho * F + (1.0 - params.rho) * params.mu_F + gamma_draw * params.sigma_F


def delay(B: float, C: float) -> float:
    return B / C


def step_persistence(rho_count: int, D: float, params: "QueueParams") -> int:
    H = params.H
    if D >= params.delta_crit:
        return rho_count + 1 if rho_count < H else H
    return 0


def grace_steps(params) -> int:
    """Grace period ``ceil(t_tar / delta)`` in steps."""
    ratio = params.t_tar / params.grid.delta
    # guard against ratios like 100.00000000000001 from float division
    return max(1, math.ceil(ratio - 1e-9 * ratio))


def default_levels() -> LevelSchedule:
    return LevelSchedule((0.0, 0.1, 1.0, 1.5, 2.0))


@dataclass(frozen=True)
class QueueParams:
    """Model parameters; defaults are the baseline operating point."""

    Lambda: float = 0.7
    eta0: float = 0.95
    nu: float = 0.2
    phi: float = 2.0
    rho: float = 0.75
    mu_F: float = -5.0
    sigma_F: float = 0.55
    delta_crit: float = 0.1
    t_tar: float = 5.0
    grid: TimeGrid = field(default_factory=lambda: TimeGrid(0.05, 60.0))
    B0: float = 0.0
    F0: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.Lambda <= 1.0:
            raise ConfigError(f"lambda must lie in (0, 1], got {self.Lambda}")
        if not self.phi > 1.0:
            raise ConfigError(f"phi must exceed 1, got {self.phi}")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"rho must lie in [0, 1), got {self.rho}")
        if not self.sigma_F >= 0.0:
            raise ConfigError(f"sigma_f must be non-negative, got {self.sigma_F}")
        if not self.delta_crit > 0.0:
            raise ConfigError(f"delta_crit must be positive, got {self.delta_crit}")
        if not self.t_tar > 0.0:
            raise ConfigError(f"t_tar must be positive, got {self.t_tar}")
        if not self.nu >= 0.0:
            raise ConfigError(f"nu must be non-negative, got {self.nu}")
        if self.nu * self.grid.delta > 1.0:
            raise ConfigError(f"nu * dt must not exceed 1, got {self.nu * self.grid.delta}")
        if not self.B0 >= 0.0:
            raise ConfigError(f"b0 must be non-negative, got {self.B0}")

    @property
    def H(self) -> int:
        return grace_steps(self)

    @property
    def initial_stress(self) -> float:
        return self.mu_F if self.F0 is None else self.F0


@dataclass(frozen=True)
class QueueState:
    B: float
    eta: float
    F: float
    rho_count: int = 0
    policy: int = 0

    @property
    def C(self) -> float:
        return capacity(self.eta)

    @property
    def D(self) -> float:
        return delay(self.B, self.C)


class QueueModel:
    """Restartable simulator for the queue.

    Parameters
    ----------
    params : QueueParams
    policy_rates : sequence of float, optional
        Recovery rate for each policy index; index 0 is the baseline. Defaults
        to ``(params.nu,)``.
    backend : {"auto", "python", "cython"}
        Kernel used by :meth:`propagate`.
    """

    def __init__(self, params: QueueParams = QueueParams(),
                 policy_rates: Optional[Sequence[float]] = None,
                 backend: str = "auto"):
        self.params = params
        self.grid = params.grid
        self.H = params.H
        rates = tuple(float(v) for v in (policy_rates if policy_rates is not None
                                         else (params.nu,)))
        if not rates:
            raise ConfigError("at least one policy rate is required")
        for v in rates:
            if v * self.grid.delta > 1.0:
                raise ConfigError(f"policy rate {v} violates nu * dt <= 1")
        self.policy_rates = rates
        found = _kernels.backends()
        if backend == "auto":
            backend = _kernels.BACKEND
        if backend not in found:
            raise ConfigError(f"kernel backend {backend!r} unavailable; have {sorted(found)}")
        self.backend = backend
        self._kernel = found[backend]

    def __repr__(self) -> str:
        return f"QueueModel({self.params!r}, policies={len(self.policy_rates)})"

    def default_levels(self) -> LevelSchedule:
        return default_levels()

    def initial_state(self, stream: Optional[RandomStream] = None) -> SimulatorState:
        p = self.params
        return SimulatorState(QueueState(p.B0, p.eta0, p.initial_stress, 0, 0), 0)

    def with_policy(self, state: SimulatorState, index: int) -> SimulatorState:
        if not 0 <= index < len(self.policy_rates):
            raise IndexError(f"policy index {index} out of range")
        return SimulatorState(replace(state.model_state, policy=index), state.time_index)

    def reaction(self, state: SimulatorState) -> float:
        s = state.model_state
        return self._kernel.queue_reaction(s.B, s.eta, s.rho_count,
                                           self.params.delta_crit, self.H)

    def is_failure(self, state: SimulatorState) -> bool:
        return self.reaction(state) >= 2.0

    def step(self, state: SimulatorState, stream: RandomStream) -> SimulatorState:
        if state.time_index >= self.grid.steps:
            raise HorizonExhausted(f"state already at horizon J={self.grid.steps}")
        p = self.params
        s = state.model_state
        C = capacity(s.eta)
        D = delay(s.B, C)
        r = step_persistence(s.rho_count, D, p)
        B = step_backlog(s.B, C, p)
        eta = step_health(s.eta, C, s.F, p, nu=self.policy_rates[s.policy])
        F = step_stress(s.F, stream.normal(), p)
        return SimulatorState(QueueState(B, eta, F, r, s.policy), state.time_index + 1)

    def propagate(self, state: SimulatorState, stream: RandomStream,
                  threshold: float) -> Propagation:
        p = self.params
        s = state.model_state
        kernel = self._kernel.propagate_queue
        J = self.grid.steps
        nu = self.policy_rates[s.policy]
        B, eta, F, r, j = s.B, s.eta, s.F, s.rho_count, state.time_index
        steps = 0
        prev = math.nan
        while True:
            remaining = J - j
            if remaining > 0:
                draws = stream.peek_normals(min(remaining, CHUNK))
                n = min(len(draws), remaining)
            else:
                draws = _NO_DRAWS
                n = 0
            status, B, eta, F, r, j, used, prev_g = kernel(
                B, eta, F, r, j, J, draws, n, p.Lambda, nu, p.phi, p.rho, p.mu_F,
                p.sigma_F, self.grid.delta, p.delta_crit, self.H, threshold)
            if used:
                stream.consume_normals(used)
                steps += used
                prev = prev_g
            if status != _kernels.NEED_DRAWS:
                break
        out = SimulatorState(QueueState(B, eta, F, r, s.policy), j)
        return Propagation(out, steps, status == _kernels.HIT,
                           None if steps == 0 else prev)

