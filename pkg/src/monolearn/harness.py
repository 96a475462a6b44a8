"""Multi-run experiment execution and learning-curve metrics.

A run drives every selected learner over the same batch sequence for n
rounds, measuring the returned model's true error on a held-out test set
each round. True error curves, their area (AULC) and the fraction of
non-monotone transitions are aggregated over runs. Runs use independently
derived seed streams so they are reproducible and can execute in parallel.
"""

from __future__ import annotations

import csv
import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .datasets import RandomFourierMap, draw_batches, generate, load_mnist
from .models import LabeledDataset, empirical_error
from .wrappers import (MonotoneCrossVal, MonotoneHoldout, RidgeSelect,
                       StandardLearner)

__all__ = [
    "RoundRecord",
    "RunResult",
    "CurveStats",
    "ExperimentResult",
    "aulc",
    "nonmonotone_fraction",
    "derive_rng",
    "run_experiment",
    "sweep",
    "verify_theorem1",
    "consistency_smoke",
    "write_results",
    "write_sweep",
]

ROUNDS_CSV = "rounds.csv"
SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
SWEEP_JSON = "sweep.json"

_ROUND_COLUMNS = ("run", "learner", "round", "true_error", "update", "p_value",
                  "val_error_candidate", "val_error_incumbent")


def aulc(curve) -> float:
    """Area under the learning curve: the mean of the per-round errors."""
    curve = np.asarray(curve, dtype=float)
    if curve.size == 0:
        raise ValueError("empty curve")
    return float(curve.mean())


def nonmonotone_fraction(curve) -> float:
    """Share of transitions where the error strictly increases.

    Ties count as monotone; a curve needs at least two points.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.size < 2:
        raise ValueError("curve needs at least two rounds")
    return float(np.mean(np.diff(curve) > 0))


def derive_rng(master_seed: int, *path) -> np.random.Generator:
    """Independent named random stream: a fixed mix of the master seed,
    integer path parts, and crc32-hashed string tags."""
    words = [master_seed & 0xFFFFFFFFFFFFFFFF]
    for part in path:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode()))
        else:
            words.append(int(part) & 0xFFFFFFFFFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(words))


@dataclass(frozen=True)
class RoundRecord:
    round: int
    true_error: float
    update: bool
    p_value: float | None
    val_error_candidate: float | None
    val_error_incumbent: float | None


@dataclass(frozen=True)
class RunResult:
    run_id: int
    learner: str
    records: tuple
    aulc: float
    nonmonotone_fraction: float
    last_update_round: int

    @property
    def curve(self) -> np.ndarray:
        return np.array([r.true_error for r in self.records])


@dataclass(frozen=True)
class CurveStats:
    learner: str
    runs: int
    mean_curve: np.ndarray
    std_curve: np.ndarray
    aulc_mean: float
    aulc_std: float
    fraction_mean: float
    fraction_std: float


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    runs: dict        # learner -> list[RunResult]
    stats: dict       # learner -> CurveStats


def _std(values, axis=None):
    values = np.asarray(values, dtype=float)
    n = values.shape[0] if values.ndim else 1
    if n < 2:
        return np.zeros_like(values.mean(axis=axis))
    return values.std(axis=axis, ddof=1)


def _curve_stats(learner: str, results) -> CurveStats:
    curves = np.array([r.curve for r in results])
    return CurveStats(
        learner=learner,
        runs=len(results),
        mean_curve=curves.mean(axis=0),
        std_curve=np.atleast_1d(_std(curves, axis=0)),
        aulc_mean=float(np.mean([r.aulc for r in results])),
        aulc_std=float(_std([r.aulc for r in results])),
        fraction_mean=float(np.mean([r.nonmonotone_fraction for r in results])),
        fraction_std=float(_std([r.nonmonotone_fraction for r in results])),
    )


# --- data sources -------------------------------------------------------------

@dataclass
class _Source:
    """Run-independent data: a generator spec, or a fixed pool + test set."""
    spec: object = None
    pool: LabeledDataset = None
    test_pool: LabeledDataset = None


def _prepare_source(config: ExperimentConfig) -> _Source:
    ds = config.dataset
    if ds.kind != "mnist":
        return _Source(spec=ds)
    paths = config.mnist_paths
    rff = RandomFourierMap(784, ds.params["features"], ds.params["bandwidth"],
                           derive_rng(config.master_seed, "rff"))
    pool = rff.transform(load_mnist(paths["images"], paths["labels"]))
    test = rff.transform(load_mnist(paths["test_images"], paths["test_labels"]))
    return _Source(pool=pool, test_pool=test)


def _test_set(config: ExperimentConfig, source: _Source, run_id: int):
    if source.test_pool is not None:
        return source.test_pool  # the fixed held-out file
    rng = derive_rng(config.master_seed, run_id, "test")
    return generate(source.spec, config.test_size, rng=rng)


def _build_learner(name: str, config: ExperimentConfig, dim: int,
                   class_count: int, fold_rng):
    plan = config.plan
    if name == "SL":
        return StandardLearner(dim, class_count, lam=config.base_lambda,
                               append_validation=plan.append_validation)
    if name == "MT_SIMPLE":
        return MonotoneHoldout(dim, class_count, mode="simple",
                               lam=config.base_lambda,
                               append_validation=plan.append_validation)
    if name == "MT_HT":
        return MonotoneHoldout(dim, class_count, mode="ht", alpha=config.alpha,
                               lam=config.base_lambda,
                               append_validation=plan.append_validation)
    if name == "MT_CV":
        return MonotoneCrossVal(dim, class_count, folds=config.folds,
                                lam=config.base_lambda, rng=fold_rng)
    if name == "LAMBDA_S":
        return RidgeSelect(dim, class_count, grid=config.lambda_grid,
                           append_validation=plan.append_validation)
    raise ValueError(f"unknown learner {name!r}")


def _run_single(config: ExperimentConfig, source: _Source, run_id: int) -> dict:
    """One run: shared batches, every learner driven over them in parallel."""
    batch_rng = derive_rng(config.master_seed, run_id, "batches")
    batch_source = source.spec if source.spec is not None else source.pool
    batches = draw_batches(batch_source, config.plan, batch_rng)
    test = _test_set(config, source, run_id)
    dim = batches[0][0].dim
    class_count = batches[0][0].class_count
    fold_rng = derive_rng(config.master_seed, run_id, "folds")

    learners = {name: _build_learner(name, config, dim, class_count, fold_rng)
                for name in config.learners}
    records = {name: [] for name in config.learners}
    cached = {name: (None, None) for name in config.learners}  # model id -> err
    for train, val in batches:
        for name, learner in learners.items():
            decision = learner.process_batch(train, val)
            model = decision.returned_model
            prev_model, prev_err = cached[name]
            if model is prev_model:
                err = prev_err
            else:
                err = empirical_error(model, test)
                cached[name] = (model, err)
            records[name].append(RoundRecord(
                round=decision.round, true_error=err, update=decision.update,
                p_value=decision.p_value,
                val_error_candidate=decision.candidate_val_error,
                val_error_incumbent=decision.incumbent_val_error))
    out = {}
    for name in config.learners:
        curve = np.array([r.true_error for r in records[name]])
        out[name] = RunResult(
            run_id=run_id, learner=name, records=tuple(records[name]),
            aulc=aulc(curve),
            nonmonotone_fraction=(nonmonotone_fraction(curve)
                                  if len(curve) > 1 else 0.0),
            last_update_round=learners[name].last_update_round)
    return out


_WORKER_STATE: dict = {}


def _worker_init(config: ExperimentConfig):
    _WORKER_STATE["config"] = config
    _WORKER_STATE["source"] = _prepare_source(config)


def _worker_run(run_id: int) -> dict:
    return _run_single(_WORKER_STATE["config"], _WORKER_STATE["source"], run_id)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute all runs of `config` and aggregate per-learner statistics.

    Results are identical for a given (config, master_seed) regardless of
    the worker count: every run derives its own seed streams and results
    are collected in run order.
    """
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers,
                                 initializer=_worker_init,
                                 initargs=(config,)) as pool:
            per_run = list(pool.map(_worker_run, range(config.runs)))
    else:
        source = _prepare_source(config)
        per_run = [_run_single(config, source, r) for r in range(config.runs)]
    runs = {name: [res[name] for res in per_run] for name in config.learners}
    stats = {name: _curve_stats(name, runs[name]) for name in config.learners}
    return ExperimentResult(config=config, runs=runs, stats=stats)


def sweep(config: ExperimentConfig, alphas, nvs) -> list:
    """Cartesian (alpha, val size) grid, each cell a full experiment.

    Follows the holdout-study protocol: validation data is never appended
    to training sets, so decisions across cells are comparable.
    """
    alphas = list(alphas)
    nvs = list(nvs)
    if not alphas or not nvs:
        raise ValueError("alpha and val-size grids must be nonempty")
    if any(nv < 1 for nv in nvs):
        raise ValueError("sweep validation sizes must be positive")
    if any(not 0.0 < a <= 0.5 for a in alphas):
        raise ValueError("sweep alphas must lie in (0, 0.5]")
    cells = []
    for a in alphas:
        for nv in nvs:
            cell_cfg = replace(
                config, alpha=a,
                plan=replace(config.plan, val_per_round=nv,
                             append_validation=False))
            result = run_experiment(cell_cfg)
            cells.append({"alpha": a, "nv": nv, "stats": result.stats})
    return cells


def verify_theorem1(config: ExperimentConfig,
                    result: ExperimentResult | None = None) -> dict:
    """Monte Carlo check of the monotone-run guarantee for the test-gated
    learner: observed monotone-run fraction vs the (1-alpha)^n bound, and
    the per-decision non-monotone rate vs alpha."""
    if "MT_HT" not in config.learners:
        raise ValueError("verify_theorem1 needs MT_HT in the learner set")
    if result is None:
        result = run_experiment(config)
    runs = result.runs["MT_HT"]
    n = config.plan.n_rounds
    rises = [int(np.sum(np.diff(r.curve) > 0)) for r in runs]
    monotone_runs = sum(1 for r in rises if r == 0)
    observed = monotone_runs / len(runs)
    bound = (1.0 - config.alpha) ** n
    sigma = float(np.sqrt(bound * (1.0 - bound) / len(runs)))
    threshold = bound - 3.0 * sigma
    total_transitions = len(runs) * (n - 1)
    per_decision = sum(rises) / total_transitions if total_transitions else 0.0
    return {
        "alpha": config.alpha,
        "rounds": n,
        "runs": len(runs),
        "monotone_run_fraction": observed,
        "bound": bound,
        "bound_minus_3_sigma": threshold,
        "vacuous": threshold <= 0.0,
        "run_bound_passed": observed >= threshold,
        "per_decision_rate": per_decision,
        "per_decision_passed": per_decision <= config.alpha,
        "passed": observed >= threshold and per_decision <= config.alpha,
    }


def consistency_smoke(config: ExperimentConfig,
                      result: ExperimentResult | None = None) -> dict:
    """Stuck-detection diagnostic: when did each wrapper last switch models,
    and how far is its final error from the standard learner's."""
    if result is None:
        result = run_experiment(config)
    n = config.plan.n_rounds
    sl_final = (result.stats["SL"].mean_curve[-1]
                if "SL" in result.stats else None)
    learners = {}
    flagged = []
    for name, runs in result.runs.items():
        last_updates = [r.last_update_round for r in runs]
        frozen = float(np.mean([u < n / 2 for u in last_updates]))
        final = float(result.stats[name].mean_curve[-1])
        learners[name] = {
            "last_update_rounds": last_updates,
            "frozen_before_half_fraction": frozen,
            "final_error_mean": final,
            "gap_to_sl_final": None if sl_final is None else final - float(sl_final),
        }
        if frozen >= 0.5 and name != "SL":
            flagged.append(name)
    return {"rounds": n, "learners": learners, "flagged_frozen": flagged}


# --- persistence ----------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_dict(config: ExperimentConfig) -> dict:
    ds = config.dataset
    return {
        "dataset": {"kind": ds.kind, "d": ds.d, "seed": ds.seed, **ds.params},
        "batch": {"rounds": config.plan.n_rounds,
                  "train_per_round": config.plan.train_per_round,
                  "val_per_round": config.plan.val_per_round,
                  "sampling": config.plan.sampling,
                  "append_validation": config.plan.append_validation},
        "learners": list(config.learners),
        "alpha": config.alpha,
        "folds": config.folds,
        "lambda_grid": list(config.lambda_grid),
        "base_lambda": config.base_lambda,
        "runs": config.runs,
        "test_size": config.test_size,
        "master_seed": config.master_seed,
        # workers deliberately omitted: execution detail, not an experiment
        # parameter, and output bytes must not depend on it
    }


def _stats_to_dict(stats: CurveStats) -> dict:
    return {
        "runs": stats.runs,
        "aulc_mean": float(stats.aulc_mean),
        "aulc_std": float(stats.aulc_std),
        "fraction_mean": float(stats.fraction_mean),
        "fraction_std": float(stats.fraction_std),
        "mean_curve": [float(v) for v in stats.mean_curve],
        "std_curve": [float(v) for v in stats.std_curve],
    }


def write_results(result: ExperimentResult, out_dir) -> None:
    """Persist one experiment: per-round CSV, summary CSV, summary JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / ROUNDS_CSV, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_ROUND_COLUMNS)
        for name in result.config.learners:
            for run in result.runs[name]:
                for rec in run.records:
                    writer.writerow([
                        run.run_id, name, rec.round, _fmt(rec.true_error),
                        _fmt(rec.update), _fmt(rec.p_value),
                        _fmt(rec.val_error_candidate),
                        _fmt(rec.val_error_incumbent)])
    with open(out_dir / SUMMARY_CSV, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["learner", "aulc_mean", "aulc_std", "fraction_mean",
                         "fraction_std"])
        for name in result.config.learners:
            s = result.stats[name]
            writer.writerow([name, _fmt(s.aulc_mean), _fmt(s.aulc_std),
                             _fmt(s.fraction_mean), _fmt(s.fraction_std)])
    summary = {
        "config": config_to_dict(result.config),
        "learners": {name: {
            **_stats_to_dict(result.stats[name]),
            "last_update_rounds": [r.last_update_round
                                   for r in result.runs[name]],
        } for name in result.config.learners},
    }
    with open(out_dir / SUMMARY_JSON, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def write_sweep(cells, config: ExperimentConfig, out_dir) -> None:
    """Persist a sweep grid as JSON (the report command renders CSV)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "config": config_to_dict(config),
        "cells": [{
            "alpha": cell["alpha"],
            "nv": cell["nv"],
            "learners": {name: _stats_to_dict(stats)
                         for name, stats in cell["stats"].items()},
        } for cell in cells],
    }
    with open(out_dir / SWEEP_JSON, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
