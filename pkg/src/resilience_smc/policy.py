"""Recovery policies, checkpoint branching and myopic lookahead selection.

Policy ``u_i`` scales the recovery rate to ``nu0 * (1 + i * rho_prime)`` and
costs ``kappa * i * rho_prime``. At the hosted level each fresh checkpoint is
branched ``n_prime`` times under every policy; the policy minimising
``ln p_hat + cost`` governs the continuation from that checkpoint onward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .contract import ConfigError, SimulatorState, propagate
from .estimators import Checkpoint, LevelSchedule
from .rng import RandomStream

TIE_TOL = 1e-12


@dataclass(frozen=True)
class PolicySet:
    nu0: float = 0.2
    rho_prime: float = 0.5
    size: int = 1
    kappa: float = 0.5
    hosted_level: int = 2
    dt: float = 0.05

    def __post_init__(self):
        if self.size < 1:
            raise ConfigError(f"policy_count must be >= 1, got {self.size}")
        if not 0.0 < self.rho_prime <= 1.0:
            raise ConfigError(f"rho_prime must lie in (0, 1], got {self.rho_prime}")
        if self.kappa < 0.0:
            raise ConfigError(f"kappa must be non-negative, got {self.kappa}")
        if not self.nu0 > 0.0:
            raise ConfigError(f"nu0 must be positive, got {self.nu0}")
        fastest = self.rate(self.size - 1)
        if fastest * self.dt > 1.0:
            raise ConfigError(
                f"fastest policy rate {fastest} violates nu * dt <= 1 (dt={self.dt})")

    def rate(self, i: int) -> float:
        return policy_rate(i, self)

    def cost(self, i: int) -> float:
        return policy_cost(i, self)

    @property
    def rates(self) -> tuple:
        return tuple(self.rate(i) for i in range(self.size))


def policy_rate(i: int, policies: PolicySet) -> float:
    if not 0 <= i < policies.size:
        raise IndexError(f"policy index {i} outside [0, {policies.size})")
    return policies.nu0 * (1.0 + i * policies.rho_prime)


def policy_cost(i: int, policies: PolicySet) -> float:
    """Cost proportional to the relative acceleration of recovery."""
    nu = policy_rate(i, policies)
    return policies.kappa * (nu - policies.nu0) / policies.nu0


@dataclass(frozen=True)
class PolicyEvaluation:
    policy: int
    successes: int
    trials: int
    cost_term: float
    objective: float

    @property
    def p_hat_branch(self) -> float:
        return self.successes / self.trials


@dataclass
class PolicyDecision:
    checkpoint: SimulatorState
    evaluations: list
    selected: int
    informative: bool = True
    cost: int = 0
    levels: Optional[LevelSchedule] = field(default=None, repr=False, compare=False)


def smoothed_log(p_hat: float, n_prime: int) -> float:
    """``ln p_hat`` with zero replaced by ``1 / (2 n_prime)``."""
    return math.log(p_hat if p_hat > 0.0 else 0.5 / n_prime)


def argmin_objective(objectives: Sequence[float]) -> int:
    """Index of the smallest objective; near-ties resolve to the lowest index."""
    best = 0
    for i in range(1, len(objectives)):
        if objectives[i] < objectives[best] - TIE_TOL * max(1.0, abs(objectives[best])):
            best = i
    return best


def branch_estimate(state: SimulatorState, policy: int, n_prime: int,
                    next_level: float, simulator, stream: RandomStream) -> tuple:
    """Branch ``state`` ``n_prime`` times under ``policy``.

    Returns ``(p_hat, successes, steps)``: the fraction of continuations that
    reach ``next_level`` before the horizon and the steps spent.
    """
    if n_prime < 1:
        raise ConfigError(f"n_prime must be >= 1, got {n_prime}")
    start = simulator.with_policy(state, policy)
    successes = 0
    steps = 0
    for n in range(n_prime):
        res = propagate(simulator, start, stream.child("branch", policy, n), next_level)
        successes += res.hit
        steps += res.steps
    return successes / n_prime, successes, steps


def select_policy(state: SimulatorState, policies: PolicySet, n_prime: int,
                  simulator, levels: LevelSchedule, stream: RandomStream,
                  lookahead_level: Optional[int] = None,
                  skip_trivial: bool = True) -> PolicyDecision:
    """Myopic lookahead at the hosted level.

    ``lookahead_level`` must satisfy ``hosted <= K' <= K - 1``; only the
    myopic ``K' = hosted`` rollout is available.
    """
    k = policies.hosted_level
    if lookahead_level is None:
        lookahead_level = k
    if not k <= lookahead_level <= levels.K - 1:
        raise ConfigError(f"lookahead level {lookahead_level} outside [{k}, {levels.K - 1}]")
    if lookahead_level != k:
        raise NotImplementedError("only myopic lookahead (K' = hosted level) is implemented")
    if policies.size == 1 and skip_trivial:
        return PolicyDecision(state, [], 0, informative=False, cost=0, levels=levels)

    next_level = levels.thresholds[k + 1]
    evaluations = []
    spent = 0
    for i in range(policies.size):
        p_hat, succ, steps = branch_estimate(state, i, n_prime, next_level, simulator, stream)
        spent += steps
        c = policy_cost(i, policies)
        evaluations.append(PolicyEvaluation(i, succ, n_prime, c, smoothed_log(p_hat, n_prime) + c))
    if all(e.successes == 0 for e in evaluations):
        return PolicyDecision(state, evaluations, 0, informative=False, cost=spent, levels=levels)
    selected = argmin_objective([e.objective for e in evaluations])
    return PolicyDecision(state, evaluations, selected, cost=spent, levels=levels)


class PolicyController:
    """Hook for :func:`run_smc` that selects a policy at the hosted level.

    Parameters
    ----------
    policies : PolicySet
    n_prime : int
        Continuations per policy and checkpoint.
    charge_lookahead : bool
        Whether branch steps count against the run's budget.
    """

    def __init__(self, policies: PolicySet, n_prime: int = 25,
                 charge_lookahead: bool = True, lookahead_level: Optional[int] = None):
        self.policies = policies
        self.n_prime = n_prime
        self.charge_lookahead = charge_lookahead
        self.lookahead_level = lookahead_level

    @property
    def hosted_level(self) -> int:
        return self.policies.hosted_level

    def decide(self, simulator, state: SimulatorState, levels: LevelSchedule,
               stream: RandomStream) -> PolicyDecision:
        return select_policy(state, self.policies, self.n_prime, simulator, levels,
                             stream, lookahead_level=self.lookahead_level)


def selection_frequencies(decisions: Sequence[PolicyDecision], size: int) -> list:
    """Relative frequency of each selected policy index."""
    counts = [0] * size
    for d in decisions:
        counts[d.selected] += 1
    n = len(decisions)
    return [c / n if n else 0.0 for c in counts]


@dataclass(frozen=True)
class PolicyComparison:
    policy: int
    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    cost_term: float


def compare_policies(checkpoints: Sequence, policies: PolicySet, n_prime: int,
                     simulator, next_level: float, stream: RandomStream,
                     z: float = 1.96) -> list:
    """Branch every checkpoint under every policy and pool the successes.

    Returns one :class:`PolicyComparison` row per policy with a binomial
    normal-approximation interval.
    """
    if not checkpoints:
        raise ConfigError("policy comparison needs a nonempty checkpoint pool")
    rows = []
    for i in range(policies.size):
        succ = 0
        trials = 0
        for c, cp in enumerate(checkpoints):
            state = cp.state if isinstance(cp, Checkpoint) else cp
            _, s, _ = branch_estimate(state, i, n_prime, next_level, simulator,
                                      stream.child("compare", c))
            succ += s
            trials += n_prime
        p = succ / trials
        half = z * math.sqrt(p * (1.0 - p) / trials)
        rows.append(PolicyComparison(i, succ, trials, p, max(0.0, p - half),
                                     min(1.0, p + half), policy_cost(i, policies)))
    return rows


def format_comparison(rows: Sequence[PolicyComparison]) -> str:
    lines = [f"{'policy':>6} {'p_hat':>10} {'ci_low':>10} {'ci_high':>10} {'cost':>8} {'n':>8}"]
    for r in rows:
        lines.append(f"{r.policy:>6d} {r.p_hat:>10.4g} {r.ci_low:>10.4g} "
                     f"{r.ci_high:>10.4g} {r.cost_term:>8.3g} {r.trials:>8d}")
    return "\n".join(lines)
