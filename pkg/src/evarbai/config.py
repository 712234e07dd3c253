"""JSON experiment configuration."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

from .measures import RiskLevel
from .oracle import DegenerateInstanceError
from .sim import BanditInstance, BetaQuantizedArm, arm_from_spec, arm_to_spec

TOLERANCE_KEYS = ("x_grid_points", "x_tol", "tie_tol")
RULES = ("tracking", "uniform")


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    instance: list
    alpha: float
    delta: float | list = 0.1
    trials: int = 100
    seed: int = 0
    horizon_cap: int = 1_000_000
    quantization_grid: float = 1e-3
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    jobs: int = 1
    rule: str = "tracking"
    strict_tracking: bool = False

    @property
    def deltas(self):
        return list(self.delta) if isinstance(self.delta, list) else [self.delta]

    def bandit(self):
        arms = []
        for spec in self.instance:
            arm = arm_from_spec(spec)
            if isinstance(arm, BetaQuantizedArm) and "grid" not in spec["beta_quantized"]:
                arm = BetaQuantizedArm(arm.a, arm.b, self.quantization_grid)
            arms.append(arm)
        return BanditInstance(arms)

    def to_dict(self):
        return asdict(self)


def _number(data, key, kind=float, lo=-math.inf, hi=math.inf, open_lo=False, open_hi=False):
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    value = kind(value)
    bad_lo = value <= lo if open_lo else value < lo
    bad_hi = value >= hi if open_hi else value > hi
    if bad_lo or bad_hi or (kind is float and math.isnan(value)):
        lb = "(" if open_lo else "["
        rb = ")" if open_hi else "]"
        raise ConfigError(key, f"{value!r} outside {lb}{lo}, {hi}{rb}")
    return value


def config_from_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in ("instance", "alpha"):
        if key not in data:
            raise ConfigError(key, "missing required key")

    out = {}
    out["alpha"] = _number(data, "alpha", lo=0.0, hi=1.0, open_lo=True, open_hi=True)
    instance = data["instance"]
    if not isinstance(instance, list) or len(instance) < 2:
        raise ConfigError("instance", "expected a list of at least two arm specs")
    out["instance"] = [dict(a) if isinstance(a, dict) else a for a in instance]

    if "delta" in data:
        delta = data["delta"]
        if isinstance(delta, list):
            if not delta:
                raise ConfigError("delta", "empty delta list")
            out["delta"] = [_number({"delta": d}, "delta", lo=0.0, hi=1.0, open_lo=True,
                                    open_hi=True) for d in delta]
        else:
            out["delta"] = _number(data, "delta", lo=0.0, hi=1.0, open_lo=True, open_hi=True)
    for key, lo in (("trials", 1), ("horizon_cap", 1), ("jobs", 1)):
        if key in data:
            out[key] = _number(data, key, int, lo=lo)
    if "seed" in data:
        out["seed"] = _number(data, "seed", int, lo=0, hi=2**64 - 1)
    if "quantization_grid" in data:
        out["quantization_grid"] = _number(data, "quantization_grid", lo=0.0, hi=0.5,
                                           open_lo=True)
    if "tolerances" in data:
        tol = data["tolerances"]
        if not isinstance(tol, dict):
            raise ConfigError("tolerances", "expected an object")
        for k in tol:
            if k not in TOLERANCE_KEYS:
                raise ConfigError(f"tolerances.{k}", "unknown key")
            _number(tol, k, lo=0.0, open_lo=True)
        out["tolerances"] = dict(tol)
    if "out" in data:
        if data["out"] is not None and not isinstance(data["out"], str):
            raise ConfigError("out", "expected a path string")
        out["out"] = data["out"]
    if "rule" in data:
        if data["rule"] not in RULES:
            raise ConfigError("rule", f"expected one of {RULES}")
        out["rule"] = data["rule"]
    if "strict_tracking" in data:
        if not isinstance(data["strict_tracking"], bool):
            raise ConfigError("strict_tracking", "expected true or false")
        out["strict_tracking"] = data["strict_tracking"]

    cfg = ExperimentConfig(**out)
    try:
        bandit = cfg.bandit()
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError("instance", str(exc)) from None
    cfg.instance = [arm_to_spec(a) if "beta_quantized" not in s else s
                    for a, s in zip(bandit.arms, cfg.instance)]
    try:
        bandit.best_arm(RiskLevel(cfg.alpha))
    except DegenerateInstanceError:
        warnings.warn("several arms share the smallest EVaR; oracle and run will reject this "
                      "instance", stacklevel=2)
    return cfg


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON: {exc}") from None
    return config_from_dict(data)


def serialize(cfg) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
