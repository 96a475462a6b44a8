"""Generators, MNIST IDX parsing, random Fourier features, batch drawing."""

import struct

import numpy as np
import pytest
from scipy.stats import norm

from monolearn.datasets import (BatchPlan, GeneratorSpec, RandomFourierMap,
                                dipping_spec, draw_batches, generate,
                                generate_dipping, generate_peaking, load_mnist,
                                mnist_spec, peaking_spec,
                                random_fourier_features)
from monolearn.models import LabeledDataset, empirical_error, fit_least_squares


# --- peaking -------------------------------------------------------------------

def test_peaking_zero_separation_is_chance():
    spec = peaking_spec(d=5, delta=0.0, seed=7)
    data = generate_peaking(spec, 4000)
    model = fit_least_squares(data, 0.0)
    fresh = generate_peaking(spec, 20000, rng=np.random.default_rng(1))
    assert empirical_error(model, fresh) == pytest.approx(0.5, abs=0.03)


def test_peaking_bayes_error_matches_gaussian_tail():
    # the optimal rule is the sign of the mean projection; its error is the
    # normal tail at the separation, independent of the dimension
    oracle = float(norm.cdf(-2.33))
    assert oracle == pytest.approx(0.0099, abs=2e-4)
    for d, m, tol in ((10, 1_000_000, 1e-3), (200, 100_000, 3e-3)):
        spec = peaking_spec(d=d, delta=2.33, seed=3)
        rng = np.random.default_rng(spec.seed)
        wrong = total = 0
        for chunk in range(m // 50_000):
            data = generate_peaking(spec, 50_000, rng=rng)
            bayes = (data.features.sum(axis=1) >= 0).astype(int)
            wrong += int(np.sum(bayes != data.labels))
            total += 50_000
        assert wrong / total == pytest.approx(oracle, abs=tol)


def test_peaking_curve_peaks_near_dimension():
    # miniature of the full protocol: tiny d, the error peak sits near m = d
    d, per_round, rounds = 30, 2, 45
    spec = peaking_spec(d=d, delta=2.33, seed=0)
    curves = []
    for run in range(6):
        rng = np.random.default_rng(100 + run)
        test = generate_peaking(spec, 4000, rng=rng)
        blocks = []
        errs = []
        for i in range(rounds):
            blocks.append(generate_peaking(spec, per_round, stratified=True,
                                           rng=rng))
            from monolearn.models import concat_datasets
            model = fit_least_squares(concat_datasets(blocks), 0.0)
            errs.append(empirical_error(model, test))
        curves.append(errs)
    mean = np.array(curves).mean(axis=0)
    sizes = per_round * (np.arange(rounds) + 1)
    peak_m = sizes[int(np.argmax(mean))]
    assert 0.5 * d <= peak_m <= 2 * d


def test_stratified_draw_balances_classes():
    spec = peaking_spec(d=4, delta=1.0, seed=5)
    data = generate_peaking(spec, 10_000, stratified=True)
    assert abs(int(np.sum(data.labels == 1)) - 5000) <= 1
    odd = generate_peaking(spec, 101, stratified=True,
                           rng=np.random.default_rng(0))
    assert abs(int(np.sum(odd.labels == 1)) - 50.5) <= 0.5


def test_generators_are_deterministic():
    for spec in (peaking_spec(d=6, seed=42), dipping_spec(seed=42)):
        a = generate(spec, 500)
        b = generate(spec, 500)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)


# --- dipping -------------------------------------------------------------------

def test_dipping_degenerate_q1_is_separable():
    spec = dipping_spec(q=1.0, seed=9)
    train = generate_dipping(spec, 4000)
    model = fit_least_squares(train, 0.0)
    test = generate_dipping(spec, 20000, rng=np.random.default_rng(2))
    assert empirical_error(model, test) <= 0.01


def test_dipping_first_moment():
    # E[x1 * y] = q - G(1-q) = -1.2 for the property parameters
    spec = dipping_spec(seed=4)
    data = generate_dipping(spec, 1_000_000)
    signed = np.where(data.labels == 1, 1.0, -1.0)
    assert float(np.mean(data.features[:, 0] * signed)) == pytest.approx(
        -1.2, abs=0.02)


def test_dipping_first_coordinate_fit_errs_at_majority_rate():
    # a fit that only sees the informative first coordinate ends up negative
    # and misclassifies the majority clusters: error ~= q
    spec = dipping_spec(seed=6)
    data = generate_dipping(spec, 200_000)
    x1 = data.features[:, :1]
    model = fit_least_squares(LabeledDataset(x1, data.labels, 2), 0.0)
    assert model.weights[0, 0] < 0
    fresh = generate_dipping(spec, 100_000, rng=np.random.default_rng(8))
    err = empirical_error(model, LabeledDataset(fresh.features[:, :1],
                                                fresh.labels, 2))
    assert err == pytest.approx(0.8, abs=0.01)


def test_dipping_separating_cone():
    # any w = (a, b) with a > 0 and b*H > a*G separates all four clusters up
    # to jitter, because outlier heights never fall below H
    spec = dipping_spec(seed=12)
    data = generate_dipping(spec, 200_000)
    w = np.zeros(spec.d)
    a, b = 1.0, 1.2 * (10.0 + 1.0) / 2.0  # b*H = 13.2 > a*G = 10
    w[0], w[1] = a, b
    pred = (data.features @ w >= 0).astype(int)
    assert float(np.mean(pred != data.labels)) <= 0.05


def test_dipping_cluster_separability_is_linear_feasible():
    from scipy.optimize import linprog
    # margins >= 1 on the majority cluster (1, 0) and outlier corner (-G, H);
    # the mirrored class adds the same constraints by symmetry
    G, H = 10.0, 2.0
    res = linprog(c=[0.0, 0.0],
                  A_ub=[[-1.0, 0.0], [G, -H]],
                  b_ub=[-1.0, -1.0],
                  bounds=[(None, None), (None, None)])
    assert res.success


def test_dipping_more_data_gets_worse_smoke():
    # reduced-scale dip check; the acceptance suite runs the full protocol
    spec = dipping_spec(seed=0)
    plan = BatchPlan(n_rounds=100, train_per_round=10, val_per_round=40)
    curves = []
    for run in range(6):
        rng = np.random.default_rng(500 + run)
        test = generate_dipping(spec, 5000, rng=rng)
        from monolearn.models import RunningLeastSquares
        trainer = RunningLeastSquares(spec.d, 2)
        errs = []
        for train, val in draw_batches(spec, plan, rng):
            trainer.append(train)
            trainer.append(val)
            errs.append(empirical_error(trainer.fit(), test))
        curves.append(errs)
    mean = np.array(curves).mean(axis=0)
    assert mean[-1] >= mean.min() + 0.05


def test_dipping_spec_validation():
    with pytest.raises(ValueError, match="q"):
        dipping_spec(q=0.4)
    with pytest.raises(ValueError, match="tail"):
        dipping_spec(tail=0.9)
    with pytest.raises(ValueError, match="noise_dims"):
        GeneratorSpec("dipping", 5, {"noise_dims": 1})
    with pytest.raises(ValueError, match="kind"):
        GeneratorSpec("gauss", 3)


# --- MNIST IDX ------------------------------------------------------------------

def _write_idx(tmp_path, name, magic, counts, body):
    path = tmp_path / name
    with open(path, "wb") as f:
        f.write(struct.pack(f">{'I' * (1 + len(counts))}", magic, *counts))
        f.write(body)
    return path


def test_mnist_roundtrip(tmp_path):
    pixels = np.arange(3 * 4, dtype=np.uint8).reshape(3, 2, 2) * 20
    images = _write_idx(tmp_path, "img", 0x803, (3, 2, 2), pixels.tobytes())
    labels = _write_idx(tmp_path, "lab", 0x801, (3,), bytes([7, 0, 9]))
    data = load_mnist(images, labels)
    assert len(data) == 3 and data.dim == 4 and data.class_count == 10
    assert data.labels.tolist() == [7, 0, 9]
    np.testing.assert_allclose(data.features,
                               pixels.reshape(3, 4) / 255.0)
    assert data.features.min() >= 0.0 and data.features.max() <= 1.0


def test_mnist_bad_magic(tmp_path):
    images = _write_idx(tmp_path, "img", 0x999, (1, 1, 1), bytes([0]))
    labels = _write_idx(tmp_path, "lab", 0x801, (1,), bytes([1]))
    with pytest.raises(ValueError, match="bad magic number"):
        load_mnist(images, labels)
    images2 = _write_idx(tmp_path, "img2", 0x803, (1, 1, 1), bytes([0]))
    labels2 = _write_idx(tmp_path, "lab2", 0x803, (1,), bytes([1]))
    with pytest.raises(ValueError, match="bad magic number"):
        load_mnist(images2, labels2)


def test_mnist_truncated(tmp_path):
    images = _write_idx(tmp_path, "img", 0x803, (2, 2, 2), bytes(5))  # needs 8
    labels = _write_idx(tmp_path, "lab", 0x801, (2,), bytes([1, 2]))
    with pytest.raises(ValueError, match="truncated file"):
        load_mnist(images, labels)


def test_mnist_count_mismatch(tmp_path):
    images = _write_idx(tmp_path, "img", 0x803, (2, 1, 1), bytes(2))
    labels = _write_idx(tmp_path, "lab", 0x801, (3,), bytes([1, 2, 3]))
    with pytest.raises(ValueError, match="count mismatch"):
        load_mnist(images, labels)


# --- random Fourier features ------------------------------------------------------

def test_rff_shape_bound_determinism():
    rng = np.random.default_rng(3)
    data = LabeledDataset(rng.standard_normal((50, 784)),
                          rng.integers(0, 10, 50), 10)
    out = random_fourier_features(data, 500, 5.0, seed=11)
    assert out.dim == 500 and len(out) == 50
    bound = np.sqrt(2.0 / 500)
    assert np.abs(out.features).max() <= bound + 1e-12
    np.testing.assert_array_equal(out.labels, data.labels)
    again = random_fourier_features(data, 500, 5.0, seed=11)
    np.testing.assert_array_equal(out.features, again.features)
    other = random_fourier_features(data, 500, 5.0, seed=12)
    assert not np.array_equal(out.features, other.features)


def test_rff_approximates_gaussian_kernel():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((6, 20))
    data = LabeledDataset(X, np.zeros(6, dtype=int), 2)
    bw = 2.0
    z = random_fourier_features(data, 20_000, bw, seed=0).features
    for i in range(3):
        for j in range(3, 6):
            kernel = np.exp(-np.sum((X[i] - X[j]) ** 2) / (2 * bw * bw))
            assert float(z[i] @ z[j]) == pytest.approx(kernel, abs=0.03)


def test_rff_map_shared_between_train_and_test():
    rng = np.random.default_rng(5)
    fmap = RandomFourierMap(8, 64, 1.5, seed=2)
    a = LabeledDataset(rng.standard_normal((4, 8)), np.zeros(4, dtype=int), 2)
    first = fmap.transform(a)
    second = random_fourier_features(a, 64, 1.5, seed=2)
    np.testing.assert_allclose(first.features, second.features)


# --- batches ----------------------------------------------------------------------

def test_draw_batches_from_generator():
    spec = peaking_spec(d=3, delta=1.0, seed=1)
    plan = BatchPlan(n_rounds=150, train_per_round=10, val_per_round=40)
    batches = draw_batches(spec, plan, seed=0)
    assert len(batches) == 150
    for train, val in batches:
        assert len(train) == 10 and len(val) == 40
        assert abs(int(np.sum(train.labels == 1)) - 5) <= 1
        assert abs(int(np.sum(val.labels == 1)) - 20) <= 1


def test_draw_batches_val_zero():
    spec = peaking_spec(d=3, seed=1)
    plan = BatchPlan(n_rounds=2, train_per_round=4, val_per_round=0)
    batches = draw_batches(spec, plan, seed=0)
    assert all(len(val) == 0 for _, val in batches)


def test_draw_batches_from_pool_without_replacement():
    rng = np.random.default_rng(6)
    pool = LabeledDataset(np.arange(100, dtype=float)[:, None],
                          rng.integers(0, 2, 100), 2)
    plan = BatchPlan(n_rounds=4, train_per_round=5, val_per_round=15,
                     sampling="random")
    batches = draw_batches(pool, plan, seed=3)
    seen = np.concatenate([np.concatenate([t.features[:, 0], v.features[:, 0]])
                           for t, v in batches])
    assert len(seen) == 80 and len(np.unique(seen)) == 80


def test_draw_batches_pool_stratified_balance():
    labels = np.array([0] * 60 + [1] * 60)
    pool = LabeledDataset(np.arange(120, dtype=float)[:, None], labels, 2)
    plan = BatchPlan(n_rounds=3, train_per_round=4, val_per_round=8,
                     sampling="stratified")
    for train, val in draw_batches(pool, plan, seed=1):
        assert int(np.sum(train.labels == 0)) == 2
        assert int(np.sum(val.labels == 0)) == 4


def test_draw_batches_insufficient_rows():
    pool = LabeledDataset(np.zeros((10, 1)), np.zeros(10, dtype=int), 2)
    plan = BatchPlan(n_rounds=3, train_per_round=3, val_per_round=2,
                     sampling="random")
    with pytest.raises(ValueError, match="insufficient source rows"):
        draw_batches(pool, plan, seed=0)


def test_draw_batches_rejects_mnist_spec():
    with pytest.raises(ValueError, match="pool"):
        draw_batches(mnist_spec(), BatchPlan(1, 1, 0), seed=0)


def test_batch_plan_validation():
    with pytest.raises(ValueError, match="sampling"):
        BatchPlan(1, 1, 0, sampling="other")
    with pytest.raises(ValueError, match="n_rounds"):
        BatchPlan(0, 1, 0)
    assert BatchPlan(2, 3, 4).batch_size == 7
