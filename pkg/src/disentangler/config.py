"""Run configuration: a nested YAML/JSON mapping with a fixed schema.

Sections and keys::

    env:     patterns (list of labels), max_budget, epsilon
    policy:  head (hybrid|mlp), encoder {kind, hidden_sizes, latent_dim,
             activation}, post_hidden, head_hidden, critic_hidden
    pqc:     qubits, layers, entangler (chain|ring)
    train:   every TrainConfig field

Dotted paths (``pqc.qubits``) address single keys.
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .env import EPSILON, MAX_BUDGET
from .pqc import CircuitConfig
from .policy import EncoderConfig, PolicyConfig
from .qsim import PatternError, parse_pattern
from .trainer import TrainConfig


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid config: " + "; ".join(problems))
        self.problems = problems


DEFAULTS = {
    "env": {"patterns": ["RRRR"], "max_budget": MAX_BUDGET, "epsilon": EPSILON},
    "policy": {
        "head": "hybrid",
        "encoder": {"kind": "mlp", "hidden_sizes": [128, 64], "latent_dim": 32, "activation": "tanh"},
        "post_hidden": [32],
        "head_hidden": [32],
        "critic_hidden": [128, 64],
    },
    "pqc": {"qubits": 4, "layers": 3, "entangler": "chain"},
    "train": {f.name: f.default for f in fields(TrainConfig)},
}


@dataclass
class RunConfig:
    patterns: list[str]
    max_budget: int
    epsilon: float
    policy: PolicyConfig
    train: TrainConfig
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return self.policy.num_qubits

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def _merge(base, override, path, problems):
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            problems.append(f"unknown key '{where}'")
        elif isinstance(base[key], dict):
            if not isinstance(value, dict):
                problems.append(f"'{where}' must be a mapping")
            else:
                out[key] = _merge(base[key], value, where, problems)
        else:
            out[key] = value
    return out


def get_path(d: dict, dotted: str):
    for part in dotted.split("."):
        d = d[part]
    return d


def set_path(d: dict, dotted: str, value) -> dict:
    out = copy.deepcopy(d)
    parts = dotted.split(".")
    node = out
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError([f"unknown key '{dotted}'"])
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError([f"unknown key '{dotted}'"])
    node[parts[-1]] = value
    return out


def config_from_dict(data: dict | None) -> RunConfig:
    problems: list[str] = []
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["top level must be a mapping"])
    raw = _merge(DEFAULTS, data, "", problems)
    if problems:
        raise ConfigError(problems)

    envd, pol, pq, tr = raw["env"], raw["policy"], raw["pqc"], raw["train"]
    patterns = envd["patterns"]
    if isinstance(patterns, str):
        patterns = [p for p in patterns.split(",") if p]
        raw["env"]["patterns"] = patterns
    sizes = set()
    for label in patterns if isinstance(patterns, list) else []:
        try:
            sizes.add(parse_pattern(str(label)).num_qubits)
        except PatternError as exc:
            problems.append(f"env.patterns: {exc}")
    if not isinstance(patterns, list) or not patterns:
        problems.append("env.patterns must be a non-empty list")
    elif len(sizes) > 1:
        problems.append(f"env.patterns mix qubit counts {sorted(sizes)}")
    for key, kind in (("max_budget", int), ("epsilon", (int, float))):
        if not isinstance(envd[key], kind) or isinstance(envd[key], bool) or envd[key] <= 0:
            problems.append(f"env.{key} must be a positive number")

    pqc_cfg = enc_cfg = policy_cfg = train_cfg = None
    try:
        pqc_cfg = CircuitConfig(int(pq["qubits"]), int(pq["layers"]), str(pq["entangler"]))
    except (TypeError, ValueError) as exc:
        problems.append(f"pqc: {exc}")
    try:
        enc_cfg = EncoderConfig(**pol["encoder"])
    except (TypeError, ValueError) as exc:
        problems.append(f"policy.encoder: {exc}")
    try:
        train_cfg = TrainConfig(**tr)
    except (TypeError, ValueError) as exc:
        problems.append(f"train: {exc}")
    if not problems and sizes:
        try:
            policy_cfg = PolicyConfig(
                num_qubits=sizes.pop(),
                head=pol["head"],
                encoder=enc_cfg,
                pqc=pqc_cfg if pol["head"] == "hybrid" else None,
                post_hidden=pol["post_hidden"],
                head_hidden=pol["head_hidden"],
                critic_hidden=pol["critic_hidden"],
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"policy: {exc}")
    if problems:
        raise ConfigError(problems)
    return RunConfig(list(patterns), int(envd["max_budget"]), float(envd["epsilon"]), policy_cfg, train_cfg, raw)


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError([f"cannot parse {path}: {exc}"]) from exc
    return config_from_dict(data)


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def train_config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
