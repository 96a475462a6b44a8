"""Experiment configuration: schema, presets, validation, overrides.

Configs are flat JSON documents. Presets bundle the benchmark and
first-experiment parameter sets so the standard runs are one name each;
a config may start from a preset and override any key.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .datasets import (DIPPING_DEFAULTS, MNIST_DEFAULTS, PEAKING_DEFAULTS,
                       BatchPlan, GeneratorSpec)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "LEARNERS",
    "PRESETS",
    "load_config_file",
    "apply_overrides",
    "build_config",
]

LEARNERS = ("SL", "MT_SIMPLE", "MT_HT", "MT_CV", "LAMBDA_S")
_HOLDOUT_LEARNERS = ("MT_SIMPLE", "MT_HT", "LAMBDA_S")

MNIST_ENV_VAR = "MNIST_DIR"
_MNIST_FILES = {
    "images": "train-images-idx3-ubyte",
    "labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

HALF_DECADE_GRID = [10.0 ** (k / 2.0) for k in range(-10, 11)]
DECADE_GRID = [10.0 ** k for k in range(-3, 4)]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: GeneratorSpec
    plan: BatchPlan
    learners: tuple
    alpha: float | None
    folds: int
    lambda_grid: tuple
    base_lambda: float
    runs: int
    test_size: int
    master_seed: int
    workers: int = 1
    mnist_paths: dict | None = None


_BENCH_BATCH = {"rounds": 150, "train_per_round": 10, "val_per_round": 40,
                "sampling": "stratified", "append_validation": True}

PRESETS = {
    # the three benchmark configurations
    "table1-peaking": {
        "dataset": {"kind": "peaking", "d": 500, "delta": 2.33},
        "batch": dict(_BENCH_BATCH),
        "learners": list(LEARNERS),
        "alpha": 0.05, "folds": 5, "lambda_grid": "half-decades",
        "base_lambda": 0.0, "runs": 25, "test_size": 10000,
        "master_seed": 20240, "workers": 1,
    },
    "table1-dipping": {
        "dataset": {"kind": "dipping", "noise_dims": 16, "q": 0.8, "G": 10.0,
                    "H": 2.0, "tail": 2.0, "jitter": 0.05},
        "batch": dict(_BENCH_BATCH),
        "learners": list(LEARNERS),
        "alpha": 0.05, "folds": 5, "lambda_grid": "half-decades",
        "base_lambda": 0.0, "runs": 25, "test_size": 10000,
        "master_seed": 20241, "workers": 1,
    },
    "table1-mnist": {
        "dataset": {"kind": "mnist", "features": 500, "bandwidth": 5.0},
        "batch": {"rounds": 40, "train_per_round": 5, "val_per_round": 20,
                  "sampling": "random", "append_validation": True},
        "learners": list(LEARNERS),
        "alpha": 0.05, "folds": 5, "lambda_grid": "decades",
        "base_lambda": 0.0, "runs": 25, "test_size": 10000,
        "master_seed": 20242, "workers": 1,
    },
    # holdout-parameter study protocol: small training increments, the
    # validation split is never added to anyone's training data
    "first-experiment-peaking": {
        "dataset": {"kind": "peaking", "d": 200, "delta": 2.33},
        "batch": {"rounds": 150, "train_per_round": 4, "val_per_round": 16,
                  "sampling": "stratified", "append_validation": False},
        "learners": ["SL", "MT_SIMPLE", "MT_HT"],
        "alpha": 0.05, "folds": 5, "lambda_grid": "half-decades",
        "base_lambda": 0.0, "runs": 25, "test_size": 10000,
        "master_seed": 20243, "workers": 1,
    },
    "first-experiment-dipping": {
        "dataset": {"kind": "dipping", "noise_dims": 16, "q": 0.8, "G": 10.0,
                    "H": 2.0, "tail": 2.0, "jitter": 0.05},
        "batch": {"rounds": 150, "train_per_round": 4, "val_per_round": 16,
                  "sampling": "stratified", "append_validation": False},
        "learners": ["SL", "MT_SIMPLE", "MT_HT"],
        "alpha": 0.05, "folds": 5, "lambda_grid": "half-decades",
        "base_lambda": 0.0, "runs": 25, "test_size": 10000,
        "master_seed": 20244, "workers": 1,
    },
}

_TOP_KEYS = {"preset", "dataset", "batch", "learners", "alpha", "folds",
             "lambda_grid", "base_lambda", "runs", "test_size", "master_seed",
             "workers", "mnist"}
_DATASET_KEYS = {
    "peaking": {"kind", "d", "seed", *PEAKING_DEFAULTS},
    "dipping": {"kind", "d", "seed", "noise_dims", *DIPPING_DEFAULTS},
    "mnist": {"kind", "d", "seed", *MNIST_DEFAULTS},
}
_BATCH_KEYS = {"rounds", "train_per_round", "val_per_round", "sampling",
               "append_validation"}
_MNIST_KEYS = set(_MNIST_FILES)
_DEFAULTS = {"alpha": None, "folds": 5, "base_lambda": 0.0, "runs": 25,
             "test_size": 10000, "master_seed": 0, "workers": 1,
             "lambda_grid": "half-decades"}


def load_config_file(path) -> dict:
    """Read a JSON config document, expanding its preset if it names one."""
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return expand_preset(raw)


def expand_preset(raw: dict) -> dict:
    name = raw.get("preset")
    if name is None:
        return dict(raw)
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r} "
                          f"(known: {', '.join(sorted(PRESETS))})")
    merged = json.loads(json.dumps(PRESETS[name]))  # deep copy
    for key, value in raw.items():
        if key == "preset":
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare strings are fine


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply key=value pairs; dotted keys reach into nested sections."""
    out = json.loads(json.dumps(raw))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, _, value = item.partition("=")
        parts = key.split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override key {key!r} does not name a section")
        node[parts[-1]] = _parse_value(value)
    if "preset" in out:
        out = expand_preset(out)
    return out


def _require(section: dict, key: str, types, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {where}{key}")
    value = section[key]
    if types is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, types) or isinstance(value, bool) and types is not bool:
        raise ConfigError(f"{where}{key}: expected {getattr(types, '__name__', types)}, "
                          f"got {type(value).__name__}")
    return value


def _check_keys(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key {where}{sorted(unknown)[0]}")


def _build_dataset(section) -> GeneratorSpec:
    if not isinstance(section, dict):
        raise ConfigError("dataset: expected an object")
    kind = section.get("kind")
    if kind not in _DATASET_KEYS:
        raise ConfigError(f"dataset.kind: expected one of "
                          f"{sorted(_DATASET_KEYS)}, got {kind!r}")
    _check_keys(section, _DATASET_KEYS[kind], "dataset.")
    seed = section.get("seed", 0)
    try:
        if kind == "peaking":
            d = _require(section, "d", int, "dataset.")
            params = {"delta": section.get("delta", PEAKING_DEFAULTS["delta"])}
            return GeneratorSpec("peaking", d, params, seed)
        if kind == "dipping":
            params = {k: section.get(k, v) for k, v in DIPPING_DEFAULTS.items()}
            noise_dims = section.get("noise_dims",
                                     section.get("d", 18) - 2)
            params["noise_dims"] = noise_dims
            d = section.get("d", 2 + noise_dims)
            return GeneratorSpec("dipping", d, params, seed)
        params = {k: section.get(k, v) for k, v in MNIST_DEFAULTS.items()}
        return GeneratorSpec("mnist", params["features"], params, seed)
    except ValueError as exc:
        raise ConfigError(f"dataset: {exc}") from exc


def _build_plan(section) -> BatchPlan:
    if not isinstance(section, dict):
        raise ConfigError("batch: expected an object")
    _check_keys(section, _BATCH_KEYS, "batch.")
    try:
        return BatchPlan(
            n_rounds=_require(section, "rounds", int, "batch."),
            train_per_round=_require(section, "train_per_round", int, "batch."),
            val_per_round=_require(section, "val_per_round", int, "batch."),
            sampling=section.get("sampling", "stratified"),
            append_validation=bool(section.get("append_validation", True)),
        )
    except ValueError as exc:
        raise ConfigError(f"batch: {exc}") from exc


def _resolve_lambda_grid(value):
    if value == "half-decades":
        return tuple(HALF_DECADE_GRID)
    if value == "decades":
        return tuple(DECADE_GRID)
    if isinstance(value, (list, tuple)) and value:
        try:
            return tuple(sorted(float(v) for v in value))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"lambda_grid: {exc}") from exc
    raise ConfigError("lambda_grid: expected a nonempty list, 'half-decades' "
                      "or 'decades'")


def _resolve_mnist_paths(section) -> dict:
    section = dict(section or {})
    _check_keys(section, _MNIST_KEYS, "mnist.")
    base = os.environ.get(MNIST_ENV_VAR)
    paths = {}
    for key, filename in _MNIST_FILES.items():
        if key in section:
            paths[key] = str(section[key])
        elif base:
            paths[key] = os.path.join(base, filename)
        else:
            raise ConfigError(f"mnist.{key} not set and {MNIST_ENV_VAR} unset")
    return paths


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config document into an ExperimentConfig.

    All cross-field invariants are checked here, before any computation;
    violations raise ConfigError naming the offending key.
    """
    raw = expand_preset(raw)
    _check_keys(raw, _TOP_KEYS, "")
    merged = {**_DEFAULTS, **{k: v for k, v in raw.items() if k != "preset"}}
    if "dataset" not in merged:
        raise ConfigError("missing required key dataset")
    if "batch" not in merged:
        raise ConfigError("missing required key batch")
    dataset = _build_dataset(merged["dataset"])
    plan = _build_plan(merged["batch"])

    learners = merged.get("learners")
    if not isinstance(learners, (list, tuple)) or not learners:
        raise ConfigError("learners: expected a nonempty list")
    for name in learners:
        if name not in LEARNERS:
            raise ConfigError(f"learners: unknown learner {name!r} "
                              f"(known: {', '.join(LEARNERS)})")
    learners = tuple(dict.fromkeys(learners))  # dedupe, keep order

    alpha = merged["alpha"]
    if "MT_HT" in learners:
        if alpha is None:
            raise ConfigError("alpha is required when MT_HT is selected")
        alpha = float(alpha)
        if not 0.0 < alpha <= 0.5:
            raise ConfigError("alpha must lie in (0, 0.5]")
    elif alpha is not None:
        alpha = float(alpha)

    folds = merged["folds"]
    if "MT_CV" in learners:
        if not isinstance(folds, int) or folds < 2:
            raise ConfigError("folds must be an integer >= 2")
        if plan.batch_size < folds:
            raise ConfigError("folds exceeds the batch size "
                              "(batch.train_per_round + batch.val_per_round)")

    lambda_grid = (_resolve_lambda_grid(merged["lambda_grid"])
                   if "LAMBDA_S" in learners else
                   tuple() if merged["lambda_grid"] is None
                   else _resolve_lambda_grid(merged["lambda_grid"]))

    if plan.val_per_round == 0:
        used = [l for l in learners if l in _HOLDOUT_LEARNERS]
        if used:
            raise ConfigError(f"batch.val_per_round must be positive for "
                              f"holdout learners ({', '.join(used)})")

    base_lambda = float(merged["base_lambda"])
    if base_lambda < 0:
        raise ConfigError("base_lambda must be nonnegative")
    runs = merged["runs"]
    if not isinstance(runs, int) or runs < 1:
        raise ConfigError("runs must be a positive integer")
    test_size = merged["test_size"]
    if not isinstance(test_size, int) or test_size < 1:
        raise ConfigError("test_size must be a positive integer")
    master_seed = merged["master_seed"]
    if not isinstance(master_seed, int):
        raise ConfigError("master_seed must be an integer")
    workers = merged["workers"]
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer")

    mnist_paths = None
    if dataset.kind == "mnist":
        mnist_paths = _resolve_mnist_paths(merged.get("mnist"))
    elif "mnist" in raw:
        raise ConfigError("mnist paths given but dataset.kind is not mnist")

    return ExperimentConfig(dataset=dataset, plan=plan, learners=learners,
                            alpha=alpha, folds=folds, lambda_grid=lambda_grid,
                            base_lambda=base_lambda, runs=runs,
                            test_size=test_size, master_seed=master_seed,
                            workers=workers, mnist_paths=mnist_paths)
