"""Randomized invariant checks, 1000 cases each."""
import math

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from resilience_smc import (BudgetPolicy, LevelSchedule, PolicyController, PolicySet,
                            QueueModel, QueueParams, RandomStream, TimeGrid, ToyChain,
                            run_mc, run_smc)
from resilience_smc.policy import argmin_objective, smoothed_log

from conftest import CountingSimulator

CASES = settings(max_examples=1000, deadline=None, derandomize=True,
                 suppress_health_check=[HealthCheck.too_slow])

seeds = st.integers(0, 2**64 - 1)


@st.composite
def queue_models(draw, horizon=3.0):
    params = QueueParams(
        Lambda=draw(st.floats(0.2, 0.95)),
        eta0=draw(st.floats(-1.0, 4.0)),
        sigma_F=draw(st.floats(0.0, 1.5)),
        mu_F=draw(st.floats(-8.0, -2.5)),
        rho=draw(st.floats(0.0, 0.95)),
        delta_crit=draw(st.floats(0.02, 0.5)),
        t_tar=draw(st.sampled_from([0.05, 0.25, 0.5, 1.0])),
        B0=draw(st.floats(0.0, 0.05)),
        grid=TimeGrid(0.05, horizon),
    )
    return QueueModel(params)


def _trace(model, seed):
    """Full-horizon rollout with the reference step, ignoring absorption."""
    s = model.initial_state()
    stream = RandomStream(seed, ("trace",))
    states = [s]
    while s.time_index < model.grid.steps:
        s = model.step(s, stream)
        states.append(s)
    return states


@CASES
@given(queue_models(), seeds)
def test_persistence_counter_matches_window_oracle(model, seed):
    states = _trace(model, seed)
    delta, H = model.params.delta_crit, model.H
    over = [st_.model_state.D >= delta for st_ in states]
    for j, s in enumerate(states):
        run = 0
        while run < j and over[j - 1 - run]:
            run += 1
        assert s.model_state.rho_count == min(run, H)
    # failure iff some window of H + 1 consecutive delays all reach delta
    J = model.grid.steps
    window = next((jc for jc in range(J - H + 1) if all(over[jc:jc + H + 1])), None)
    first_fail = next((j for j, s in enumerate(states) if model.is_failure(s)), None)
    if window is None:
        assert first_fail is None
    else:
        assert first_fail == window + H
    res = model.propagate(model.initial_state(), RandomStream(seed, ("trace",)), 2.0)
    assert res.hit == (first_fail is not None)
    assert res.state.time_index == (first_fail if res.hit else J)
    assert res.state == states[res.state.time_index]


@CASES
@given(queue_models(), seeds)
def test_state_bounds(model, seed):
    for s in _trace(model, seed):
        q = s.model_state
        assert 0.0 < q.C < 1.0
        assert q.B >= 0.0
        assert 0.0 <= model.reaction(s) <= 2.0
        assert 0 <= q.rho_count <= model.H


@CASES
@given(queue_models(horizon=1.0), seeds, st.integers(0, 19))
def test_contract_purity(model, seed, n):
    s = model.initial_state()
    stream = RandomStream(seed)
    for _ in range(n):
        s = model.step(s, stream)
    assert model.reaction(s) == model.reaction(s)
    a = stream.clone()
    assert model.step(s, a) == model.step(s, stream)
    assert s.time_index == n


@st.composite
def toy_runs(draw):
    q = draw(st.floats(0.05, 1.0))
    K = draw(st.integers(1, 5))
    extra = draw(st.integers(0, 4))
    s_tar = draw(st.integers(1, 20))
    a_tar = s_tar + draw(st.integers(0, 20))
    budget = draw(st.integers(K + extra, 3000))
    alloc = draw(st.sampled_from(["fair", "greedy"]))
    return ToyChain(q, K, K + extra), BudgetPolicy(budget, s_tar, a_tar, alloc)


@CASES
@given(toy_runs(), seeds)
def test_budget_accounting_exact(run, seed):
    toy, budget = run
    sim = CountingSimulator(toy)
    est = run_smc(sim, toy.default_levels(), budget, RandomStream(seed))
    assert est.total_cost == sim.calls == sum(r.cost for r in est.per_level)
    assert est.total_cost <= budget.total_budget + toy.grid.steps
    p = 1.0
    for r in est.per_level:
        p *= r.successes / r.attempts
    assert math.isclose(est.p_hat, p, rel_tol=1e-12, abs_tol=0.0)
    sim.calls = 0
    mc = run_mc(sim, budget.total_budget, RandomStream(seed))
    assert mc.total_cost == sim.calls <= budget.total_budget


@CASES
@given(toy_runs(), seeds)
def test_checkpoint_validity(run, seed):
    toy, budget = run
    lv = toy.default_levels()
    est = run_smc(toy, lv, budget, RandomStream(seed))
    for rec in est.per_level:
        thr = lv.thresholds[rec.level + 1]
        assert len(rec.checkpoints) == rec.successes
        for cp in rec.checkpoints:
            assert toy.reaction(cp.state) >= thr
            assert cp.state.time_index <= toy.grid.steps
            if cp.prev_reaction is None:
                assert cp.state.time_index == 0
            else:
                assert cp.prev_reaction < thr


@CASES
@given(queue_models(horizon=2.0), seeds)
def test_queue_checkpoint_validity_and_determinism(model, seed):
    lv = model.default_levels()
    b = BudgetPolicy(1500, 4, 8)
    a = run_smc(model, lv, b, RandomStream(seed))
    c = run_smc(model, lv, b, RandomStream(seed))
    assert a.p_hat == c.p_hat and a.total_cost == c.total_cost
    for ra, rc in zip(a.per_level, c.per_level):
        assert (ra.successes, ra.attempts, ra.cost) == (rc.successes, rc.attempts, rc.cost)
        assert [x.state for x in ra.checkpoints] == [x.state for x in rc.checkpoints]
        thr = lv.thresholds[ra.level + 1]
        for cp in ra.checkpoints:
            assert model.reaction(cp.state) >= thr
            assert cp.prev_reaction is None or cp.prev_reaction < thr
    assert a.total_cost <= b.total_budget + model.grid.steps


@CASES
@given(st.floats(0.6, 1.0), st.floats(0.3, 1.5), st.integers(1, 4), seeds)
def test_level_schedule_policy_invariant(lam, sigma, size, seed):
    params = QueueParams(Lambda=lam, sigma_F=sigma, t_tar=0.1, delta_crit=0.05,
                         grid=TimeGrid(0.05, 1.0))
    ps = PolicySet(size=size, dt=0.05)
    model = QueueModel(params, policy_rates=ps.rates)
    lv = model.default_levels()
    before = lv.thresholds
    est = run_smc(model, lv, BudgetPolicy(600, 3, 5), RandomStream(seed),
                  PolicyController(ps, n_prime=2))
    assert all(d.levels is lv for d in est.decisions)
    assert lv.thresholds == before
    hosted_hits = est.per_level[1].successes if len(est.per_level) > 1 else 0
    assert len(est.decisions) == hosted_hits


objective_tables = st.lists(st.integers(-300, 300), min_size=1, max_size=8)


@CASES
@given(objective_tables, st.floats(-100.0, 100.0))
def test_argmin_stable_under_shift(ticks, shift):
    j = [0.01 * t for t in ticks]
    assert argmin_objective([x + shift for x in j]) == argmin_objective(j)


@CASES
@given(st.lists(st.integers(1, 25), min_size=1, max_size=6), st.floats(1e-3, 1e3),
       st.floats(0.0, 2.0), st.floats(0.05, 1.0))
def test_argmin_stable_under_rescaling(successes, scale, kappa, rho_prime):
    n_prime = 25
    ps = PolicySet(size=len(successes), kappa=kappa, rho_prime=rho_prime, dt=0.01)
    p = [s / n_prime for s in successes]
    base = [smoothed_log(x, n_prime) + ps.cost(i) for i, x in enumerate(p)]
    scaled = [math.log(scale * x) + ps.cost(i) for i, x in enumerate(p)]
    assert argmin_objective(scaled) == argmin_objective(base)
