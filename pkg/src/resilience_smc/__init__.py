"""Rare-event estimation of path-dependent resilience failures by fixed-level splitting."""
from ._kernels import BACKEND
from .contract import (ConfigError, HorizonExhausted, Propagation, Simulator,
                       SimulatorState, TimeGrid, propagate)
from .estimators import (BudgetPolicy, Checkpoint, LevelRecord, LevelSchedule,
                         McEstimate, SmcEstimate, ancestral_rel_var,
                         confidence_interval, next_pool_size, rel_var_proxy,
                         run_mc, run_smc)
from .policy import (PolicyController, PolicyDecision, PolicyEvaluation, PolicySet,
                     compare_policies, policy_cost, policy_rate, select_policy)
from .queue import QueueModel, QueueParams, QueueState
from .rng import RandomStream
from .toy import ToyChain

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetPolicy", "Checkpoint", "ConfigError", "HorizonExhausted",
    "LevelRecord", "LevelSchedule", "McEstimate", "PolicyController",
    "PolicyDecision", "PolicyEvaluation", "PolicySet", "Propagation",
    "QueueModel", "QueueParams", "QueueState", "RandomStream", "Simulator",
    "SimulatorState", "SmcEstimate", "TimeGrid", "ToyChain", "ancestral_rel_var",
    "compare_policies", "confidence_interval", "next_pool_size", "policy_cost",
    "policy_rate", "propagate", "rel_var_proxy", "run_mc", "run_smc", "select_policy",
]
