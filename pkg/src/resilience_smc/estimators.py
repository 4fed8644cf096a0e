"""Crude Monte Carlo and fixed-level splitting estimators.

The splitting estimator runs levels ``k = 0 .. K-1``. At each level attempts
are issued one at a time, each propagated until the reaction coordinate
reaches the next threshold (a success, stored as a checkpoint at its
first-hitting state) or the horizon. A level stops once it holds at least
``s_tar`` successes and ``a_tar`` attempts, or when its share of the budget is
spent. Start states for level ``k > 0`` are drawn uniformly with replacement
from the level ``k-1`` checkpoints, in pools of size ``ceil(s_tar / p_k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .contract import ConfigError, SimulatorState, propagate
from .rng import RandomStream


@dataclass(frozen=True)
class LevelSchedule:
    """Strictly increasing thresholds ``l_0 < ... < l_K``.

    ``l_0`` is never tested: every state belongs to the first level set.
    """

    thresholds: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.thresholds)
        object.__setattr__(self, "thresholds", t)
        if len(t) < 2:
            raise ConfigError("a level schedule needs at least two thresholds")
        if any(not b > a for a, b in zip(t, t[1:])):
            raise ConfigError(f"thresholds must be strictly increasing, got {t}")

    @property
    def K(self) -> int:
        return len(self.thresholds) - 1

    @property
    def final(self) -> float:
        return self.thresholds[-1]

    def __len__(self) -> int:
        return len(self.thresholds)


@dataclass(frozen=True)
class BudgetPolicy:
    """Global step budget and per-level stopping targets.

    ``allocation`` sets each level's spending cap. ``"fair"`` lets level ``k``
    spend at most ``1 / (K - k)`` of the budget still unspent when it starts,
    so unused shares roll forward. ``"greedy"`` only holds back one trajectory
    length per later level.
    """

    total_budget: int = 5_000_000
    s_tar: int = 200
    a_tar: int = 400
    allocation: str = "fair"

    def __post_init__(self):
        if self.allocation not in ("fair", "greedy"):
            raise ConfigError(f"allocation must be 'fair' or 'greedy', got {self.allocation!r}")
        for name in ("total_budget", "s_tar", "a_tar"):
            v = getattr(self, name)
            if int(v) != v or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        if self.s_tar > self.a_tar:
            raise ConfigError(f"s_tar ({self.s_tar}) must not exceed a_tar ({self.a_tar})")


@dataclass(frozen=True)
class Checkpoint:
    """First-hitting state of a level.

    ``prev_reaction`` is the reaction one step before ``state`` (``None`` for a
    state that was never stepped, i.e. an initial state). ``root`` is the
    level-0 attempt the checkpoint descends from.
    """

    state: SimulatorState
    origin: tuple
    prev_reaction: Optional[float] = None
    root: Optional[int] = None


@dataclass
class LevelRecord:
    level: int
    successes: int = 0
    attempts: int = 0
    cost: int = 0
    checkpoints: list = field(default_factory=list, repr=False)
    budget_exhausted: bool = False
    pool_sizes: list = field(default_factory=list)

    @property
    def p_hat(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


def next_pool_size(s_tar: int, p_hat_k: float, max_size: Optional[int] = None) -> int:
    """Pool size for the next level: ``ceil(s_tar / p_hat_k)``, clamped.

    The lower clamp is ``s_tar``; ``max_size`` (typically the remaining step
    budget) caps it from above but never below ``s_tar``.
    """
    if not 0.0 < p_hat_k <= 1.0:
        raise ValueError(f"p_hat_k must lie in (0, 1], got {p_hat_k}")
    n = max(s_tar, math.ceil(s_tar / p_hat_k))
    if max_size is not None:
        n = min(n, max(s_tar, int(max_size)))
    return n


def rel_var_proxy(per_level: Sequence[tuple]) -> float:
    """Relative-variance proxy ``sum_k (1 - p_k) / (p_k * M_k)``."""
    total = 0.0
    for p, m in per_level:
        if not p > 0.0:
            raise ZeroDivisionError("relative variance undefined under extinction")
        if m < 1:
            raise ValueError(f"population must be >= 1, got {m}")
        total += (1.0 - p) / (p * m)
    return total


def ancestral_rel_var(per_level: Sequence["LevelRecord"]) -> Optional[float]:
    """Relative variance of the splitting estimate from its genealogy.

    Final-level successes are grouped by the level-0 attempt they descend
    from. Writing ``p_hat`` as the mean over the ``A_0`` root attempts of
    ``Y_r = A_0 p_hat D_r / S_final`` (``D_r`` final successes under root
    ``r``), the roots are treated as independent and the sample variance of
    ``Y_r / p_hat`` gives the estimate. Unlike :func:`rel_var_proxy` this
    keeps the dependence that resampling introduces between levels.

    Returns ``None`` if the records carry no genealogy (or under extinction),
    0 when every level transition was certain, and ``inf`` with a single root.
    """
    if not per_level or any(r.successes == 0 for r in per_level):
        return None
    if all(r.successes == r.attempts for r in per_level):
        return 0.0
    final = per_level[-1].checkpoints
    if len(final) != per_level[-1].successes or any(c.root is None for c in final):
        return None
    a0 = per_level[0].attempts
    if a0 < 2:
        return math.inf
    s_final = len(final)
    counts: dict = {}
    for c in final:
        counts[c.root] = counts.get(c.root, 0) + 1
    total = sum((a0 * d / s_final - 1.0) ** 2 for d in counts.values())
    total += a0 - len(counts)
    return total / (a0 * (a0 - 1))


@dataclass
class McEstimate:
    p_hat: float
    n: int
    successes: int
    total_cost: int

    @property
    def rel_var_proxy(self) -> Optional[float]:
        if self.p_hat <= 0.0:
            return None
        return (1.0 - self.p_hat) / (self.p_hat * self.n)

    @property
    def std_error(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.n)

    def confidence_interval(self, z: float = 1.96) -> tuple:
        return confidence_interval(self, z)


@dataclass
class SmcEstimate:
    p_hat: float
    per_level: list
    total_cost: int
    extinct_at: Optional[int] = None
    lookahead_cost: int = 0
    decisions: list = field(default_factory=list, repr=False)

    @property
    def rel_var_proxy(self) -> Optional[float]:
        if self.extinct_at is not None or self.p_hat <= 0.0:
            return None
        return rel_var_proxy([(r.p_hat, r.attempts) for r in self.per_level])

    @property
    def rel_var(self) -> Optional[float]:
        """Relative variance behind :attr:`std_error` and the interval.

        The genealogy estimate when checkpoints carry their roots, otherwise
        the per-level proxy.
        """
        if self.extinct_at is not None or self.p_hat <= 0.0:
            return None
        rv = ancestral_rel_var(self.per_level)
        return self.rel_var_proxy if rv is None else rv

    @property
    def std_error(self) -> float:
        rv = self.rel_var
        return math.nan if rv is None else self.p_hat * math.sqrt(rv)

    @property
    def level_probabilities(self) -> list:
        return [r.p_hat for r in self.per_level]

    def confidence_interval(self, z: float = 1.96) -> tuple:
        return confidence_interval(self, z)


def confidence_interval(estimate, z: float = 1.96) -> tuple:
    """Normal-approximation interval clamped to [0, 1].

    MC uses the binomial standard error and the rule of three when no
    trajectory failed. SMC uses ``p (1 -+ z sqrt(rel_var))`` with the
    estimate's :attr:`SmcEstimate.rel_var`; under extinction the upper bound
    is unknown and returned as NaN.
    """
    p = estimate.p_hat
    if isinstance(estimate, McEstimate):
        if estimate.successes == 0:
            return 0.0, min(1.0, 3.0 / estimate.n)
        half = z * estimate.std_error
        return max(0.0, p - half), min(1.0, p + half)
    rv = estimate.rel_var
    if rv is None:
        return 0.0, math.nan
    half = z * math.sqrt(rv)
    return max(0.0, p * (1.0 - half)), min(1.0, p * (1.0 + half))


def _failure_level(simulator, failure_level):
    if failure_level is not None:
        return failure_level
    levels = getattr(simulator, "default_levels", None)
    if levels is None:
        raise ConfigError("simulator has no default levels; pass failure_level")
    return levels().final


def run_mc(simulator, budget: int, stream: RandomStream,
           failure_level: Optional[float] = None) -> McEstimate:
    """Crude Monte Carlo under a step budget.

    A trajectory is started only while a full-length one still fits in the
    budget; each stops at its first entry into the failure set.
    """
    J = simulator.grid.steps
    budget = int(budget)
    if budget < J:
        raise ConfigError(f"budget {budget} cannot afford one trajectory of {J} steps")
    threshold = _failure_level(simulator, failure_level)
    total = 0
    n = 0
    successes = 0
    while total + J <= budget:
        start = simulator.initial_state(stream.child("init", n))
        res = propagate(simulator, start, stream.child("mc", n), threshold)
        total += res.steps
        successes += res.hit
        n += 1
    return McEstimate(successes / n, n, successes, total)


def _level_cap(budget: BudgetPolicy, spent: int, k: int, K: int, J: int) -> int:
    remaining_levels = K - k
    if budget.allocation == "greedy":
        return budget.total_budget - J * (remaining_levels - 1)
    return spent + max(budget.total_budget - spent, 0) // remaining_levels


def run_smc(simulator, levels: LevelSchedule, budget: BudgetPolicy,
            stream: RandomStream, controller=None) -> SmcEstimate:
    """Fixed-level splitting with budget-adaptive population control.

    Parameters
    ----------
    simulator
        Any object satisfying the simulator contract.
    levels : LevelSchedule
    budget : BudgetPolicy
    stream : RandomStream
        Root stream; attempt ``a`` at level ``k`` uses ``stream.child(k, a)``.
    controller : optional
        Policy controller with ``hosted_level`` and ``decide``; invoked on
        every checkpoint that first hits the hosted level.

    Returns
    -------
    SmcEstimate
        ``p_hat`` is the product of ``S_k / A_k``; zero with ``extinct_at`` set
        if a level recorded no success.
    """
    J = simulator.grid.steps
    K = levels.K
    s_tar, a_tar = budget.s_tar, budget.a_tar
    hosted = controller.hosted_level if controller is not None else None
    if hosted is not None and not 1 <= hosted < K:
        raise ConfigError(f"hosted level must lie in [1, {K - 1}], got {hosted}")

    total = 0
    lookahead_cost = 0
    records = []
    decisions = []
    p_hat = 1.0
    parents: list = []

    for k in range(K):
        threshold = levels.thresholds[k + 1]
        cap = _level_cap(budget, total, k, K, J)
        rec = LevelRecord(k)
        pool: list = []
        pool_pos = 0
        batch = 0
        # parents parked at the horizon below the threshold fail at zero cost;
        # if every parent is such a dead end the level could never stop
        doomed = k > 0 and not any(
            c.state.time_index < J or simulator.reaction(c.state) >= threshold
            for c in parents)
        while True:
            if rec.successes >= s_tar and rec.attempts >= a_tar:
                break
            if doomed and rec.attempts >= a_tar:
                break
            if rec.attempts > 0 and total >= cap:
                rec.budget_exhausted = True
                break
            a = rec.attempts
            if k == 0:
                start = simulator.initial_state(stream.child("init", a))
                prev = None
                root = a
            else:
                if pool_pos == len(pool):
                    size = next_pool_size(s_tar, records[-1].p_hat, max(cap - total, 1))
                    idx = stream.child("resample", k, batch).integers(len(parents), size)
                    pool = [parents[i] for i in idx]
                    rec.pool_sizes.append(size)
                    pool_pos = 0
                    batch += 1
                parent = pool[pool_pos]
                pool_pos += 1
                start = parent.state
                prev = parent.prev_reaction
                root = parent.root
            res = propagate(simulator, start, stream.child(k, a), threshold)
            rec.attempts += 1
            rec.cost += res.steps
            total += res.steps
            if res.hit:
                rec.successes += 1
                state = res.state
                if res.steps:
                    prev = res.prev_reaction
                if hosted is not None and k + 1 == hosted:
                    decision = controller.decide(simulator, state, levels,
                                                 stream.child("lookahead", k, a))
                    decisions.append(decision)
                    lookahead_cost += decision.cost
                    if controller.charge_lookahead:
                        total += decision.cost
                    state = simulator.with_policy(state, decision.selected)
                rec.checkpoints.append(Checkpoint(state, (k, a), prev, root))
        records.append(rec)
        p_hat *= rec.successes / rec.attempts
        if rec.successes == 0:
            return SmcEstimate(0.0, records, total, k, lookahead_cost, decisions)
        parents = rec.checkpoints
    return SmcEstimate(p_hat, records, total, None, lookahead_cost, decisions)
