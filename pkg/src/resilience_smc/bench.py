"""Throughput benchmark: compiled kernel versus pure-Python fallback.

Reports raw propagation throughput and wall time of one splitting run per
backend, and checks that both backends produced identical estimates.
"""
from __future__ import annotations

import argparse
import sys
import time

from . import _kernels
from .estimators import BudgetPolicy, run_smc
from .queue import QueueModel, QueueParams
from .rng import RandomStream


def propagation_rate(backend: str, trajectories: int, seed: int = 0) -> tuple:
    """Steps per second over ``trajectories`` full-horizon rollouts."""
    model = QueueModel(QueueParams(), backend=backend)
    start = model.initial_state()
    steps = 0
    t0 = time.perf_counter()
    for i in range(trajectories):
        steps += model.propagate(start, RandomStream(seed, ("bench", i)), 2.0).steps
    dt = time.perf_counter() - t0
    return steps / dt, steps, dt


def smc_timing(backend: str, budget: int, seed: int = 0) -> tuple:
    model = QueueModel(QueueParams(), backend=backend)
    t0 = time.perf_counter()
    est = run_smc(model, model.default_levels(), BudgetPolicy(budget), RandomStream(seed))
    return time.perf_counter() - t0, est


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="resilience-smc-bench", description=__doc__)
    p.add_argument("--trajectories", type=int, default=300)
    p.add_argument("--budget", type=int, default=500_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    found = _kernels.backends()
    print(f"default backend: {_kernels.BACKEND}; available: {', '.join(sorted(found))}")
    print(f"{'backend':<8} {'Msteps/s':>10} {'smc wall (s)':>13} {'p_hat':>12}")
    estimates = {}
    rates = {}
    for name in sorted(found):
        rate, _, _ = propagation_rate(name, args.trajectories, args.seed)
        wall, est = smc_timing(name, args.budget, args.seed)
        rates[name] = rate
        estimates[name] = est
        print(f"{name:<8} {rate / 1e6:>10.2f} {wall:>13.2f} {est.p_hat:>12.5g}")
    if len(estimates) > 1:
        a, b = (estimates[k] for k in sorted(estimates))
        same = (a.p_hat == b.p_hat and a.total_cost == b.total_cost
                and [(r.successes, r.attempts) for r in a.per_level]
                == [(r.successes, r.attempts) for r in b.per_level])
        print(f"speedup: {rates['cython'] / rates['python']:.1f}x; "
              f"estimates identical: {same}")
        if not same:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
