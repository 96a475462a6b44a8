"""Dataset generators and samplers for the learning-curve experiments.

Two synthetic families are built to provoke non-monotone learning curves:

* peaking: two unit-covariance Gaussian classes with means +-(delta/sqrt(d))*1,
  so class separation (and the Bayes error, Phi(-delta)) is independent of the
  dimension. The pseudo-inverse least-squares fit peaks near m = d samples.

* dipping: a mirrored majority/outlier cluster mixture in two informative
  coordinates plus pure-noise dimensions. Majority mass sits at +-(1, 0); with
  probability 1-q a point instead lands at x1 = -G with height x2 >= H, the
  heights following a Pareto tail (index `tail`). Any weight vector (a, b)
  with a > 0 and b*H > a*G separates every cluster up to jitter, but squared
  loss punishes the overshooting heights, so with enough data the fit drifts
  away from that cone and the error rate climbs: more data is worse.

MNIST is read from the standard IDX files and projected onto random Fourier
features before use.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .models import LabeledDataset

__all__ = [
    "GeneratorSpec",
    "BatchPlan",
    "peaking_spec",
    "dipping_spec",
    "mnist_spec",
    "generate",
    "generate_peaking",
    "generate_dipping",
    "load_mnist",
    "random_fourier_features",
    "RandomFourierMap",
    "draw_batches",
]

_KINDS = ("peaking", "dipping", "mnist")

PEAKING_DEFAULTS = {"delta": 2.33}
DIPPING_DEFAULTS = {"q": 0.8, "G": 10.0, "H": 2.0, "tail": 2.0, "jitter": 0.05}
MNIST_DEFAULTS = {"features": 500, "bandwidth": 5.0}


@dataclass(frozen=True)
class GeneratorSpec:
    """What to sample from: a synthetic family or the MNIST pool."""

    kind: str
    d: int
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if self.kind == "peaking":
            merged = {**PEAKING_DEFAULTS, **self.params}
            if merged["delta"] < 0:
                raise ValueError("peaking delta must be nonnegative")
        elif self.kind == "dipping":
            merged = {**DIPPING_DEFAULTS, **self.params}
            merged.setdefault("noise_dims", self.d - 2)
            if not 0.5 < merged["q"] <= 1.0:
                raise ValueError("dipping q must lie in (0.5, 1]")
            if merged["G"] <= 0 or merged["H"] <= 0:
                raise ValueError("dipping G and H must be positive")
            if merged["tail"] <= 1.0:
                raise ValueError("dipping tail index must exceed 1")
            if merged["noise_dims"] != self.d - 2 or self.d < 2:
                raise ValueError("dipping needs d = 2 + noise_dims")
        else:
            merged = {**MNIST_DEFAULTS, **self.params}
            if merged["features"] != self.d:
                raise ValueError("mnist feature count must equal d")
        object.__setattr__(self, "params", merged)


def peaking_spec(d: int = 500, delta: float = 2.33, seed: int = 0) -> GeneratorSpec:
    return GeneratorSpec("peaking", d, {"delta": delta}, seed)


def dipping_spec(noise_dims: int = 16, q: float = 0.8, G: float = 10.0,
                 H: float = 2.0, tail: float = 2.0, jitter: float = 0.05,
                 seed: int = 0) -> GeneratorSpec:
    return GeneratorSpec("dipping", 2 + noise_dims,
                         {"q": q, "G": G, "H": H, "tail": tail,
                          "jitter": jitter, "noise_dims": noise_dims}, seed)


def mnist_spec(features: int = 500, bandwidth: float = 5.0,
               seed: int = 0) -> GeneratorSpec:
    return GeneratorSpec("mnist", features,
                         {"features": features, "bandwidth": bandwidth}, seed)


def _signed_labels(rng: np.random.Generator, m: int, stratified: bool) -> np.ndarray:
    """+-1 labels, exactly balanced (up to one sample) when stratified."""
    if stratified:
        y = np.ones(m)
        half = m // 2
        y[:half] = -1.0
        if m % 2:
            y[half] = -1.0 if rng.random() < 0.5 else 1.0
        rng.shuffle(y)
        return y
    return np.where(rng.random(m) < 0.5, -1.0, 1.0)


def generate_peaking(spec: GeneratorSpec, m: int, *, stratified: bool = False,
                     rng: np.random.Generator | None = None) -> LabeledDataset:
    """Sample m points from the peaking family described by `spec`."""
    if spec.kind != "peaking":
        raise ValueError("spec is not a peaking spec")
    if m < 1:
        raise ValueError("m must be positive")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    y = _signed_labels(rng, m, stratified)
    mu = spec.params["delta"] / np.sqrt(spec.d)
    X = rng.standard_normal((m, spec.d)) + y[:, None] * mu
    return LabeledDataset(X, ((y + 1) // 2).astype(np.int64), 2)


def generate_dipping(spec: GeneratorSpec, m: int, *, stratified: bool = False,
                     rng: np.random.Generator | None = None) -> LabeledDataset:
    """Sample m points from the dipping family described by `spec`."""
    if spec.kind != "dipping":
        raise ValueError("spec is not a dipping spec")
    if m < 1:
        raise ValueError("m must be positive")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    p = spec.params
    y = _signed_labels(rng, m, stratified)
    outlier = rng.random(m) < (1.0 - p["q"])
    heights = p["H"] * (1.0 - rng.random(m)) ** (-1.0 / p["tail"])
    u = np.where(outlier, -p["G"], 1.0)
    v = np.where(outlier, heights, 0.0)
    X = np.empty((m, spec.d))
    X[:, 0] = y * u
    X[:, 1] = y * v
    X[:, :2] += p["jitter"] * rng.standard_normal((m, 2))
    if spec.d > 2:
        X[:, 2:] = rng.standard_normal((m, spec.d - 2))
    return LabeledDataset(X, ((y + 1) // 2).astype(np.int64), 2)


def generate(spec: GeneratorSpec, m: int, *, stratified: bool = False,
             rng: np.random.Generator | None = None) -> LabeledDataset:
    """Dispatch to the synthetic generator for `spec.kind`."""
    if spec.kind == "peaking":
        return generate_peaking(spec, m, stratified=stratified, rng=rng)
    if spec.kind == "dipping":
        return generate_dipping(spec, m, stratified=stratified, rng=rng)
    raise ValueError("mnist data comes from IDX files, not a generator")


# --- MNIST IDX ---------------------------------------------------------------

_IMAGE_MAGIC = 0x00000803
_LABEL_MAGIC = 0x00000801


def _read_exact(f, n: int, path) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise ValueError(f"truncated file: {path}")
    return data


def load_mnist(images_path, labels_path) -> LabeledDataset:
    """Read an IDX image/label file pair into a dataset.

    Pixel values are scaled to [0, 1]; rows are flattened images. The header
    fields are big-endian 32-bit integers.
    """
    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, images_path))
        if magic != _IMAGE_MAGIC:
            raise ValueError(f"bad magic number in {images_path}: 0x{magic:08x}")
        pixels = np.frombuffer(_read_exact(f, count * rows * cols, images_path),
                               dtype=np.uint8)
    with open(labels_path, "rb") as f:
        magic, label_count = struct.unpack(">II", _read_exact(f, 8, labels_path))
        if magic != _LABEL_MAGIC:
            raise ValueError(f"bad magic number in {labels_path}: 0x{magic:08x}")
        labels = np.frombuffer(_read_exact(f, label_count, labels_path),
                               dtype=np.uint8)
    if count != label_count:
        raise ValueError(f"count mismatch: {count} images vs {label_count} labels")
    features = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    return LabeledDataset(features, labels.astype(np.int64), 10)


# --- random Fourier features --------------------------------------------------

class RandomFourierMap:
    """A fixed random cosine projection approximating the Gaussian kernel.

    z_j(x) = sqrt(2/D) * cos(w_j.x + b_j) with w_j ~ N(0, I/bandwidth^2) and
    b_j uniform on [0, 2pi). The projection is drawn once from `seed` and must
    be reused for every dataset of one experiment.
    """

    def __init__(self, input_dim: int, feature_count: int, bandwidth: float, seed):
        if feature_count < 1:
            raise ValueError("feature_count must be positive")
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        rng = np.random.default_rng(seed)
        self.input_dim = input_dim
        self.feature_count = feature_count
        self.proj = rng.standard_normal((input_dim, feature_count)) / bandwidth
        self.phase = rng.uniform(0.0, 2.0 * np.pi, feature_count)

    def transform(self, data: LabeledDataset) -> LabeledDataset:
        if data.dim != self.input_dim:
            raise ValueError("dimension mismatch between data and projection")
        z = np.sqrt(2.0 / self.feature_count) * np.cos(
            data.features @ self.proj + self.phase)
        return LabeledDataset(z, data.labels, data.class_count)


def random_fourier_features(data: LabeledDataset, feature_count: int,
                            bandwidth: float, seed) -> LabeledDataset:
    """Project `data` onto `feature_count` random Fourier features.

    The projection is a deterministic function of (input dim, feature_count,
    bandwidth, seed): calling this with the same seed on train and test data
    applies the identical map.
    """
    return RandomFourierMap(data.dim, feature_count, bandwidth, seed).transform(data)


# --- batches ------------------------------------------------------------------

@dataclass(frozen=True)
class BatchPlan:
    """Round structure: how much data arrives per round and how it splits."""

    n_rounds: int
    train_per_round: int
    val_per_round: int
    sampling: str = "stratified"
    append_validation: bool = True

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be positive")
        if self.train_per_round < 1:
            raise ValueError("train_per_round must be positive")
        if self.val_per_round < 0:
            raise ValueError("val_per_round must be nonnegative")
        if self.sampling not in ("stratified", "random"):
            raise ValueError("sampling must be 'stratified' or 'random'")

    @property
    def batch_size(self) -> int:
        return self.train_per_round + self.val_per_round


def _stratified_quotas(rng: np.random.Generator, total: int,
                       class_count: int) -> np.ndarray:
    """Per-class counts summing to total, each within 1 of total/class_count."""
    quotas = np.full(class_count, total // class_count)
    rest = total - quotas.sum()
    if rest:
        quotas[rng.choice(class_count, size=rest, replace=False)] += 1
    return quotas


def _empty_like(source: LabeledDataset) -> LabeledDataset:
    return LabeledDataset(np.empty((0, source.dim)), np.empty(0, dtype=np.int64),
                          source.class_count)


def _draw_from_generator(spec: GeneratorSpec, plan: BatchPlan, rng):
    stratified = plan.sampling == "stratified"
    batches = []
    for _ in range(plan.n_rounds):
        train = generate(spec, plan.train_per_round, stratified=stratified, rng=rng)
        if plan.val_per_round:
            val = generate(spec, plan.val_per_round, stratified=stratified, rng=rng)
        else:
            val = _empty_like(train)
        batches.append((train, val))
    return batches


def _draw_from_dataset(pool: LabeledDataset, plan: BatchPlan, rng):
    need = plan.n_rounds * plan.batch_size
    if need > len(pool):
        raise ValueError(
            f"insufficient source rows: need {need}, pool has {len(pool)}")
    batches = []
    if plan.sampling == "random":
        order = rng.permutation(len(pool))
        pos = 0
        for _ in range(plan.n_rounds):
            tr = order[pos: pos + plan.train_per_round]
            va = order[pos + plan.train_per_round: pos + plan.batch_size]
            pos += plan.batch_size
            batches.append((pool.take(tr), pool.take(va)))
        return batches
    # stratified without replacement: one shuffled queue per class
    queues = [list(rng.permutation(np.flatnonzero(pool.labels == c)))
              for c in range(pool.class_count)]
    for _ in range(plan.n_rounds):
        splits = []
        for size in (plan.train_per_round, plan.val_per_round):
            quotas = _stratified_quotas(rng, size, pool.class_count)
            if any(q > len(queue) for q, queue in zip(quotas, queues)):
                raise ValueError("insufficient source rows in some class for "
                                 "stratified sampling")
            idx = np.array([queues[c].pop() for c in range(pool.class_count)
                            for _ in range(quotas[c])], dtype=np.int64)
            rng.shuffle(idx)
            splits.append(pool.take(idx) if size else _empty_like(pool))
        batches.append(tuple(splits))
    return batches


def draw_batches(source, plan: BatchPlan, seed):
    """Materialize the full batch sequence for one run.

    `source` is either a GeneratorSpec (fresh i.i.d. data every batch) or a
    LabeledDataset pool (sampled without replacement). Each round yields a
    (train split, validation split) pair of sizes train_per_round and
    val_per_round; stratified sampling balances classes within each split
    independently.
    """
    rng = np.random.default_rng(seed)
    if isinstance(source, GeneratorSpec):
        if source.kind == "mnist":
            raise ValueError("mnist batches must be drawn from the loaded pool")
        return _draw_from_generator(source, plan, rng)
    if isinstance(source, LabeledDataset):
        return _draw_from_dataset(source, plan, rng)
    raise TypeError("source must be a GeneratorSpec or LabeledDataset")
