"""Run configuration: one JSON document governs every subcommand.

Every field has a default, so an empty config (or none at all) is valid;
unknown keys are rejected rather than ignored; and the fully resolved
document -- defaults filled in, every seed explicit -- is echoed so any
run can be reproduced from its output alone.
"""

from __future__ import annotations

import json
from copy import deepcopy
from pathlib import Path

from .encoder import EncoderConfig
from .errors import ConfigError
from .train import TrainConfig
from .zeroshot import ZeroShotConfig

DEFAULTS: dict = {
    "seed": 0,
    "unified_dim": 64,
    "align_mode": "smoothness",
    "encoder": {
        "hops": 2,
        "hidden": 64,
        "mlp_depth": 2,
    },
    "train": {
        "epochs": 100,
        "learning_rate": 1e-3,
        "n_k": 10,
        "queries_per_class": 64,
        "epsilon": 0.0,
        "eval_every": 50,
    },
    "zero_shot": {
        "n_k": 10,
        "rounds": 3,
        "init_strategy": "feature_kmeans",
        "kmeans_max_iters": 100,
        "kmeans_restarts": 4,
    },
    "datasets": [],
}


def _merge(defaults: dict, user: dict, path: str = "") -> dict:
    out = deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


def resolve(user: dict | None = None) -> dict:
    """Defaults overlaid with the user document; rejects unknown keys."""
    return _merge(DEFAULTS, user or {})


def load(path: str | Path | None) -> dict:
    if path is None:
        return resolve({})
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path}: invalid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    return resolve(doc)


def echo(resolved: dict) -> str:
    return json.dumps({"resolved_config": resolved}, sort_keys=True)


def train_config(resolved: dict, datasets: tuple[str, ...] = ()) -> TrainConfig:
    t = resolved["train"]
    return TrainConfig(
        epochs=int(t["epochs"]),
        learning_rate=float(t["learning_rate"]),
        n_k=int(t["n_k"]),
        queries_per_class=int(t["queries_per_class"]),
        epsilon=float(t["epsilon"]),
        seed=int(resolved["seed"]),
        eval_every=int(t["eval_every"]),
        unified_dim=int(resolved["unified_dim"]),
        align_mode=str(resolved["align_mode"]),
        encoder=encoder_config(resolved),
        datasets=datasets,
    )


def encoder_config(resolved: dict) -> EncoderConfig:
    e = resolved["encoder"]
    return EncoderConfig(hops=int(e["hops"]), hidden=int(e["hidden"]),
                         mlp_depth=int(e["mlp_depth"]))


def zero_shot_config(resolved: dict) -> ZeroShotConfig:
    z = resolved["zero_shot"]
    return ZeroShotConfig(
        n_k=int(z["n_k"]),
        rounds=int(z["rounds"]),
        init_strategy=str(z["init_strategy"]),
        kmeans_max_iters=int(z["kmeans_max_iters"]),
        kmeans_restarts=int(z["kmeans_restarts"]),
        seed=int(resolved["seed"]),
    )
