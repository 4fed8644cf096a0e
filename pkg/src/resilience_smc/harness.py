"""Experiment configuration, sweep execution and result persistence.

A config is a YAML mapping. Model, budget and run fields sit at the top
level; the optional ``policy`` block enables lookahead reconfiguration::

    method: smc
    seed: 7
    replications: 2
    lambda: 0.7
    sigma_f: 0.55
    c_t: 5000000
    sweep: {field: lambda, values: [0.6, 0.65, 0.7]}
    policy: {policy_count: 5, rho_prime: 0.5, kappa: 0.5, n_prime: 25}
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Optional, Sequence

import yaml

from .contract import ConfigError, TimeGrid
from .estimators import BudgetPolicy, LevelSchedule, run_mc, run_smc
from .policy import PolicyController, PolicySet, selection_frequencies
from .queue import QueueModel, QueueParams, default_levels
from .rng import RandomStream

log = logging.getLogger(__name__)

# config field name -> QueueParams attribute
MODEL_FIELDS = {
    "lambda": "Lambda",
    "eta0": "eta0",
    "nu": "nu",
    "phi": "phi",
    "rho": "rho",
    "mu_f": "mu_F",
    "sigma_f": "sigma_F",
    "delta_crit": "delta_crit",
    "t_tar": "t_tar",
    "b0": "B0",
}
GRID_FIELDS = ("dt", "horizon")
BUDGET_FIELDS = ("c_t", "s_tar", "a_tar")
POLICY_FIELDS = ("nu0", "rho_prime", "kappa", "policy_count", "n_prime",
                 "hosted_level", "charge_lookahead")
RUN_FIELDS = ("method", "seed", "replications", "z", "levels", "sweep",
              "policy", "allocation", "workers")
INT_FIELDS = {"c_t", "s_tar", "a_tar", "policy_count", "n_prime", "hosted_level",
              "seed", "replications", "workers"}


@dataclass(frozen=True)
class PolicyConfig:
    nu0: Optional[float] = None
    rho_prime: float = 0.5
    kappa: float = 0.5
    policy_count: int = 5
    n_prime: int = 25
    hosted_level: int = 2
    charge_lookahead: bool = True

    def policy_set(self, nu: float, dt: float) -> PolicySet:
        return PolicySet(nu0=self.nu0 if self.nu0 is not None else nu,
                         rho_prime=self.rho_prime, size=self.policy_count,
                         kappa=self.kappa, hosted_level=self.hosted_level, dt=dt)


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "smc"
    seed: int = 0
    replications: int = 1
    z: float = 1.96
    # model, baseline operating point
    lambda_: float = 0.7
    eta0: float = 0.95
    nu: float = 0.2
    phi: float = 2.0
    rho: float = 0.75
    mu_f: float = -5.0
    sigma_f: float = 0.55
    delta_crit: float = 0.1
    t_tar: float = 5.0
    dt: float = 0.05
    horizon: float = 60.0
    b0: float = 0.0
    # budget
    c_t: int = 5_000_000
    s_tar: int = 200
    a_tar: int = 400
    allocation: str = "fair"
    levels: Optional[tuple] = None
    sweep_field: Optional[str] = None
    sweep_values: tuple = ()
    policy: Optional[PolicyConfig] = None
    workers: int = 1

    def __post_init__(self):
        if self.method not in ("mc", "smc"):
            raise ConfigError(f"method: expected 'mc' or 'smc', got {self.method!r}")
        if self.replications < 1:
            raise ConfigError(f"replications: must be >= 1, got {self.replications}")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        if self.policy is not None and self.method != "smc":
            raise ConfigError("policy: a policy block requires method 'smc'")
        if self.sweep_field in POLICY_FIELDS and self.method != "smc":
            raise ConfigError(f"sweep.field: {self.sweep_field} requires method 'smc'")
        if self.sweep_field is not None:
            if _attr_for(self.sweep_field) is None:
                raise ConfigError(f"sweep.field: unknown config field {self.sweep_field!r}")
            if not self.sweep_values:
                raise ConfigError("sweep.values: must be a nonempty list")
        # building every point validates model, budget and policy invariants
        for i in range(max(1, len(self.sweep_values))):
            cfg = self.point(i)
            params = cfg.queue_params()
            cfg.budget_policy()
            if cfg.levels is not None:
                LevelSchedule(cfg.levels)
            if cfg.policy is not None:
                cfg.policy.policy_set(params.nu, params.grid.delta)

    def point(self, sweep_index: int) -> "ExperimentConfig":
        """Config for one sweep value (no sweep of its own)."""
        if self.sweep_field is None:
            return self
        name = self.sweep_field
        value = self.sweep_values[sweep_index]
        if name in POLICY_FIELDS:
            pol = self.policy or PolicyConfig()
            pol = replace(pol, **{name: _coerce(name, value)})
            return _replace_unchecked(self, policy=pol, sweep_field=None, sweep_values=())
        return _replace_unchecked(self, **{_attr_for(name): _coerce(name, value)},
                                  sweep_field=None, sweep_values=())

    def queue_params(self) -> QueueParams:
        try:
            grid = TimeGrid(float(self.dt), float(self.horizon))
        except ConfigError as exc:
            raise ConfigError(f"dt/horizon: {exc}") from None
        kwargs = {attr: float(getattr(self, _attr_for(name))) for name, attr in MODEL_FIELDS.items()}
        try:
            return QueueParams(grid=grid, **kwargs)
        except ConfigError as exc:
            raise ConfigError(f"model: {exc}") from None

    def budget_policy(self) -> BudgetPolicy:
        try:
            return BudgetPolicy(self.c_t, self.s_tar, self.a_tar, self.allocation)
        except ConfigError as exc:
            raise ConfigError(f"budget: {exc}") from None

    def level_schedule(self) -> LevelSchedule:
        return LevelSchedule(self.levels) if self.levels is not None else default_levels()


def _attr_for(name: str) -> Optional[str]:
    if name == "lambda":
        return "lambda_"
    if name in MODEL_FIELDS or name in GRID_FIELDS or name in BUDGET_FIELDS:
        return name
    if name in POLICY_FIELDS:
        return name
    if name in ("allocation",):
        return name
    return None


def _coerce(name: str, value):
    if name == "charge_lookahead":
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if name == "allocation":
        return str(value)
    if name in INT_FIELDS and not isinstance(value, bool):
        if isinstance(value, int):
            return value
        try:
            return int(str(value).strip())
        except ValueError:
            pass
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if name in INT_FIELDS:
        if x != int(x):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return int(x)
    return x


def _replace_unchecked(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    new = object.__new__(ExperimentConfig)
    for f in fields(cfg):
        object.__setattr__(new, f.name, changes.get(f.name, getattr(cfg, f.name)))
    return new


def config_from_mapping(data: dict) -> ExperimentConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    kwargs = {}
    for key, value in data.items():
        if key in ("sweep", "policy", "levels", "method"):
            continue
        attr = _attr_for(key)
        if attr is None or key in POLICY_FIELDS:
            if key not in RUN_FIELDS:
                raise ConfigError(f"{key}: unknown config field")
            attr = key
        kwargs[attr] = _coerce(key, value) if key != "z" else float(value)
    if "method" in data:
        kwargs["method"] = str(data["method"]).lower()
    if data.get("levels") is not None:
        try:
            kwargs["levels"] = tuple(float(x) for x in data["levels"])
        except (TypeError, ValueError):
            raise ConfigError("levels: expected a list of numbers") from None
    sweep = data.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or "field" not in sweep or "values" not in sweep:
            raise ConfigError("sweep: expected a mapping with 'field' and 'values'")
        name = str(sweep["field"])
        if _attr_for(name) is None:
            raise ConfigError(f"sweep.field: unknown config field {name!r}")
        values = sweep["values"]
        if not isinstance(values, (list, tuple)):
            raise ConfigError("sweep.values: expected a list")
        kwargs["sweep_field"] = name
        kwargs["sweep_values"] = tuple(_coerce(name, v) for v in values)
    pol = data.get("policy")
    if pol is not None:
        if not isinstance(pol, dict):
            raise ConfigError("policy: expected a mapping")
        unknown = set(pol) - set(POLICY_FIELDS)
        if unknown:
            raise ConfigError(f"policy.{sorted(unknown)[0]}: unknown policy field")
        kwargs["policy"] = PolicyConfig(**{k: _coerce(k, v) for k, v in pol.items()})
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    """Read a YAML experiment config; absent fields take baseline defaults."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from None
    return config_from_mapping(data)


def _same(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return a == b


@dataclass(eq=False)
class ResultRecord:
    sweep_value: float
    method: str
    p_hat: float
    std_error: float
    ci_low: float
    ci_high: float
    per_level: tuple
    total_cost: int
    extinct_at: Optional[int]
    policy_freq: Optional[tuple]
    seed: int
    replication: int

    def __eq__(self, other):
        if not isinstance(other, ResultRecord):
            return NotImplemented
        return all(_same(getattr(self, f.name), getattr(other, f.name))
                   for f in fields(ResultRecord))


def _run_point(cfg: ExperimentConfig, sweep_index: int, replication: int) -> ResultRecord:
    point = cfg.point(sweep_index)
    params = point.queue_params()
    stream = RandomStream(cfg.seed, (sweep_index, replication))
    sweep_value = (float(cfg.sweep_values[sweep_index]) if cfg.sweep_field is not None
                   else math.nan)
    if point.method == "mc":
        model = QueueModel(params)
        est = run_mc(model, point.c_t, stream, failure_level=point.level_schedule().final)
        lo, hi = est.confidence_interval(point.z)
        return ResultRecord(sweep_value, "mc", est.p_hat, est.std_error, lo, hi, (),
                            est.total_cost, None, None, cfg.seed, replication)
    controller = None
    rates = None
    if point.policy is not None:
        pset = point.policy.policy_set(params.nu, params.grid.delta)
        rates = pset.rates
        controller = PolicyController(pset, point.policy.n_prime,
                                      charge_lookahead=point.policy.charge_lookahead)
    model = QueueModel(params, policy_rates=rates)
    est = run_smc(model, point.level_schedule(), point.budget_policy(), stream, controller)
    lo, hi = est.confidence_interval(point.z)
    freq = None
    if controller is not None:
        freq = tuple(selection_frequencies(est.decisions, controller.policies.size))
    return ResultRecord(sweep_value, "smc", est.p_hat, est.std_error, lo, hi,
                        tuple(est.level_probabilities), est.total_cost, est.extinct_at,
                        freq, cfg.seed, replication)


def _run_point_args(args):
    return args[1], args[2], _run_point(*args)


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None,
                   progress: Optional[Callable[[int, int], None]] = None) -> list:
    """Run every sweep point and replication.

    Records come back ordered by ``(sweep_index, replication)`` whatever the
    worker count.
    """
    workers = workers or config.workers
    n_points = max(1, len(config.sweep_values))
    jobs = [(config, i, r) for i in range(n_points) for r in range(config.replications)]
    results = {}
    if workers == 1:
        for done, job in enumerate(jobs, 1):
            results[(job[1], job[2])] = _run_point(*job)
            if progress:
                progress(done, len(jobs))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for done, (i, r, rec) in enumerate(pool.map(_run_point_args, jobs), 1):
                results[(i, r)] = rec
                if progress:
                    progress(done, len(jobs))
    return [results[k] for k in sorted(results)]


# serialization ---------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _parse_float(s: str) -> float:
    return float(s)


def header_for(records: Sequence[ResultRecord]) -> list:
    n_pol = max((len(r.policy_freq) for r in records if r.policy_freq is not None), default=0)
    cols = []
    for f in fields(ResultRecord):
        if f.name == "policy_freq":
            cols.extend(f"policy_freq_{i}" for i in range(n_pol))
        else:
            cols.append(f.name)
    return cols


def _row(rec: ResultRecord) -> list:
    row = []
    for f in fields(ResultRecord):
        v = getattr(rec, f.name)
        if f.name == "per_level":
            row.append(";".join(_fmt(x) for x in v))
        elif f.name == "policy_freq":
            row.extend(_fmt(x) for x in (v or ()))
        else:
            row.append(_fmt(v))
    return row


def dumps_results(records: Sequence[ResultRecord], format: str = "csv") -> str:
    if not records:
        raise ValueError("no records to export")
    if format == "json":
        docs = []
        for r in records:
            d = asdict(r)
            d["per_level"] = list(r.per_level)
            d["policy_freq"] = list(r.policy_freq) if r.policy_freq is not None else None
            docs.append(d)
        return json.dumps(docs, indent=1) + "\n"
    if format != "csv":
        raise ValueError(f"unknown export format {format!r}")
    header = header_for(records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in records:
        w.writerow(_row(r))
    return buf.getvalue()


def export_results(records: Sequence[ResultRecord], path, format: Optional[str] = None) -> None:
    """Write records as CSV (header + one row each) or a JSON document."""
    if format is None:
        format = "json" if str(path).endswith(".json") else "csv"
    text = dumps_results(records, format)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def loads_results(text: str, format: str = "csv") -> list:
    if format == "json":
        out = []
        for d in json.loads(text):
            d["per_level"] = tuple(d["per_level"])
            if d["policy_freq"] is not None:
                d["policy_freq"] = tuple(d["policy_freq"])
            out.append(ResultRecord(**d))
        return out
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    pol_cols = [i for i, c in enumerate(header) if c.startswith("policy_freq_")]
    idx = {c: i for i, c in enumerate(header)}
    out = []
    for row in reader:
        per_level = row[idx["per_level"]]
        out.append(ResultRecord(
            sweep_value=_parse_float(row[idx["sweep_value"]]),
            method=row[idx["method"]],
            p_hat=_parse_float(row[idx["p_hat"]]),
            std_error=_parse_float(row[idx["std_error"]]),
            ci_low=_parse_float(row[idx["ci_low"]]),
            ci_high=_parse_float(row[idx["ci_high"]]),
            per_level=tuple(float(x) for x in per_level.split(";")) if per_level else (),
            total_cost=int(row[idx["total_cost"]]),
            extinct_at=int(row[idx["extinct_at"]]) if row[idx["extinct_at"]] else None,
            policy_freq=tuple(float(row[i]) for i in pol_cols) if pol_cols else None,
            seed=int(row[idx["seed"]]),
            replication=int(row[idx["replication"]]),
        ))
    return out


def import_results(path, format: Optional[str] = None) -> list:
    if format is None:
        format = "json" if str(path).endswith(".json") else "csv"
    with open(path) as fh:
        return loads_results(fh.read(), format)
