"""Experiment driver: metrics, pairing, determinism, persistence."""

import csv
import filecmp

import numpy as np
import pytest

from monolearn.config import build_config
from monolearn.harness import (ROUNDS_CSV, SUMMARY_CSV, SUMMARY_JSON, aulc,
                               consistency_smoke, derive_rng,
                               nonmonotone_fraction, run_experiment, sweep,
                               verify_theorem1, write_results, write_sweep)


def _tiny_config(**overrides):
    raw = {
        "dataset": {"kind": "dipping", "noise_dims": 2, "seed": 0},
        "batch": {"rounds": 8, "train_per_round": 6, "val_per_round": 10,
                  "sampling": "stratified", "append_validation": True},
        "learners": ["SL", "MT_SIMPLE", "MT_HT", "MT_CV", "LAMBDA_S"],
        "alpha": 0.05, "folds": 4, "lambda_grid": [0.01, 1.0, 100.0],
        "runs": 3, "test_size": 400, "master_seed": 99,
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key].update(value)
        else:
            raw[key] = value
    return build_config(raw)


@pytest.fixture(scope="module")
def tiny_result():
    return run_experiment(_tiny_config())


# --- metrics -------------------------------------------------------------------

def test_aulc_examples():
    assert aulc([0.5, 0.4, 0.3]) == pytest.approx(0.4)
    assert aulc([0.7] * 9) == pytest.approx(0.7)
    assert aulc([0.25]) == 0.25
    with pytest.raises(ValueError, match="empty"):
        aulc([])


def test_nonmonotone_fraction_examples():
    assert nonmonotone_fraction([0.5, 0.4, 0.45, 0.3]) == pytest.approx(1 / 3)
    assert nonmonotone_fraction([0.5, 0.5, 0.5]) == 0.0
    assert nonmonotone_fraction(np.linspace(0.1, 0.9, 12)) == 1.0
    with pytest.raises(ValueError, match="two rounds"):
        nonmonotone_fraction([0.5])


def test_derive_rng_streams():
    a = derive_rng(5, 0, "batches").random(4)
    b = derive_rng(5, 0, "batches").random(4)
    np.testing.assert_array_equal(a, b)
    c = derive_rng(5, 0, "test").random(4)
    d = derive_rng(5, 1, "batches").random(4)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


# --- experiment invariants --------------------------------------------------------

def test_run_counts_and_record_shape(tiny_result):
    for name, runs in tiny_result.runs.items():
        assert len(runs) == 3
        for run in runs:
            assert len(run.records) == 8
            assert all(0.0 <= r.true_error <= 1.0 for r in run.records)
            assert run.records[0].update  # first round always updates


def test_aggregate_consistency(tiny_result):
    for name, stats in tiny_result.stats.items():
        runs = tiny_result.runs[name]
        mean_of_aulcs = np.mean([r.aulc for r in runs])
        aulc_of_mean = aulc(stats.mean_curve)
        assert mean_of_aulcs == pytest.approx(aulc_of_mean, abs=1e-12)


def test_pairing_learner_set_does_not_change_batches(tiny_result):
    solo = run_experiment(_tiny_config(learners=["SL"]))
    for run_solo, run_full in zip(solo.runs["SL"], tiny_result.runs["SL"]):
        np.testing.assert_array_equal(run_solo.curve, run_full.curve)


def test_test_set_isolation():
    # growing or degrading the test set must not change any decision trace
    small = run_experiment(_tiny_config(test_size=150))
    large = run_experiment(_tiny_config(test_size=1500))
    for name in small.runs:
        for a, b in zip(small.runs[name], large.runs[name]):
            assert [r.update for r in a.records] == [r.update for r in b.records]
            assert [r.p_value for r in a.records] == [r.p_value for r in b.records]
            assert ([r.val_error_candidate for r in a.records]
                    == [r.val_error_candidate for r in b.records])


def test_mt_ht_records_p_values(tiny_result):
    for run in tiny_result.runs["MT_HT"]:
        assert run.records[0].p_value is None
        assert all(r.p_value is not None for r in run.records[1:])
    for run in tiny_result.runs["SL"]:
        assert all(r.p_value is None for r in run.records)


def test_workers_do_not_change_results(tmp_path):
    seq = run_experiment(_tiny_config(runs=2))
    par = run_experiment(_tiny_config(runs=2, workers=2))
    write_results(seq, tmp_path / "seq")
    write_results(par, tmp_path / "par")
    for name in (ROUNDS_CSV, SUMMARY_CSV, SUMMARY_JSON):
        assert (tmp_path / "seq" / name).read_bytes() == \
               (tmp_path / "par" / name).read_bytes()


def test_rerun_is_byte_identical(tmp_path):
    write_results(run_experiment(_tiny_config()), tmp_path / "a")
    write_results(run_experiment(_tiny_config()), tmp_path / "b")
    match, mismatch, errors = filecmp.cmpfiles(
        tmp_path / "a", tmp_path / "b",
        [ROUNDS_CSV, SUMMARY_CSV, SUMMARY_JSON], shallow=False)
    assert mismatch == [] and errors == []


def test_rounds_csv_columns(tiny_result, tmp_path):
    write_results(tiny_result, tmp_path)
    with open(tmp_path / ROUNDS_CSV) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["run", "learner", "round", "true_error", "update",
                       "p_value", "val_error_candidate", "val_error_incumbent"]
    assert len(rows) == 1 + 5 * 3 * 8
    with open(tmp_path / SUMMARY_CSV) as f:
        header = f.readline().strip()
    assert header == "learner,aulc_mean,aulc_std,fraction_mean,fraction_std"


# --- verification ops ---------------------------------------------------------------

def test_verify_theorem1_report(tiny_result):
    report = verify_theorem1(tiny_result.config, tiny_result)
    assert report["bound"] == pytest.approx(0.95 ** 8)
    assert 0.0 <= report["per_decision_rate"] <= 1.0
    assert report["runs"] == 3
    assert isinstance(report["passed"], bool)
    with pytest.raises(ValueError, match="MT_HT"):
        verify_theorem1(_tiny_config(learners=["SL"]))


def test_consistency_smoke_report(tiny_result):
    report = consistency_smoke(tiny_result.config, tiny_result)
    assert report["learners"]["SL"]["frozen_before_half_fraction"] == 0.0
    assert report["learners"]["SL"]["gap_to_sl_final"] == 0.0
    assert set(report["learners"]) == set(tiny_result.runs)
    for info in report["learners"].values():
        assert len(info["last_update_rounds"]) == 3


def test_sweep_grid(tmp_path):
    config = _tiny_config(learners=["MT_SIMPLE", "MT_HT"], runs=2,
                          batch={"rounds": 5})
    cells = sweep(config, alphas=[0.05, 0.5], nvs=[2, 8])
    assert len(cells) == 4
    assert {(c["alpha"], c["nv"]) for c in cells} == {(0.05, 2), (0.05, 8),
                                                      (0.5, 2), (0.5, 8)}
    for cell in cells:
        assert set(cell["stats"]) == {"MT_SIMPLE", "MT_HT"}
    write_sweep(cells, config, tmp_path)
    assert (tmp_path / "sweep.json").exists()

    # a 1x1 grid is exactly one run_experiment with the sweep protocol
    single = sweep(config, alphas=[0.05], nvs=[8])
    from dataclasses import replace
    direct = run_experiment(replace(
        config, alpha=0.05,
        plan=replace(config.plan, val_per_round=8, append_validation=False)))
    assert single[0]["stats"]["MT_HT"].aulc_mean == direct.stats["MT_HT"].aulc_mean


def test_sweep_empty_grid():
    with pytest.raises(ValueError, match="nonempty"):
        sweep(_tiny_config(), [], [2])
