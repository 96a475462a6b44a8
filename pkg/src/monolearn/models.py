"""Least-squares classification on {-1,+1} targets.

The base learner is ordinary linear least squares regression on the class
labels, with an (unregularized) intercept. Multiclass problems are handled
one-vs-all with an argmax decision. When the normal equations are
rank-deficient (fewer samples than dimensions) the minimum-norm
pseudo-inverse solution is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledDataset",
    "LinearModel",
    "fit_least_squares",
    "predict",
    "empirical_error",
    "concat_datasets",
    "RunningLeastSquares",
]


@dataclass(frozen=True)
class LabeledDataset:
    """A feature matrix with one integer class label per row."""

    features: np.ndarray  # (m, d) float
    labels: np.ndarray    # (m,) int, values in [0, class_count)
    class_count: int = 2

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if labels.ndim != 1 or len(labels) != len(features):
            raise ValueError("labels must be one per feature row")
        if self.class_count < 2:
            raise ValueError("class_count must be at least 2")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ValueError("labels must lie in [0, class_count)")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels.astype(np.int64))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "LabeledDataset":
        """Row subset (copy) as a new dataset."""
        return LabeledDataset(self.features[indices], self.labels[indices],
                              self.class_count)


def concat_datasets(parts) -> LabeledDataset:
    """Stack datasets row-wise; they must agree on dim and class_count."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to concatenate")
    if len({p.dim for p in parts}) != 1:
        raise ValueError("dimension mismatch between datasets")
    if len({p.class_count for p in parts}) != 1:
        raise ValueError("class_count mismatch between datasets")
    return LabeledDataset(
        np.vstack([p.features for p in parts]),
        np.concatenate([p.labels for p in parts]),
        parts[0].class_count,
    )


@dataclass(frozen=True)
class LinearModel:
    """Linear scorer: one weight column + intercept per output.

    Binary models have a single output column and predict class 1 when the
    score is >= 0. One-vs-all models have class_count columns and predict
    the argmax, lowest class index winning ties.
    """

    weights: np.ndarray    # (d, k)
    intercepts: np.ndarray # (k,)
    class_count: int
    trained_on: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.intercepts, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[1] != len(b):
            raise ValueError("weight columns and intercepts must match")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercepts", b)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def scores(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.dim:
            raise ValueError(
                f"dimension mismatch: model expects {self.dim} features, "
                f"got {features.shape[1] if features.ndim == 2 else features.ndim}")
        return features @ self.weights + self.intercepts

    def predict(self, features: np.ndarray) -> np.ndarray:
        s = self.scores(features)
        if s.shape[1] == 1:
            # sign(0) maps to class 1
            return (s[:, 0] >= 0.0).astype(np.int64)
        return np.argmax(s, axis=1).astype(np.int64)


def predict(model: LinearModel, features: np.ndarray) -> np.ndarray:
    """Predicted class labels of `model` on a feature matrix."""
    return model.predict(features)


def empirical_error(model: LinearModel, data: LabeledDataset) -> float:
    """Zero-one error rate of `model` on `data`."""
    if len(data) == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(model.predict(data.features) != data.labels))


def _targets(labels: np.ndarray, class_count: int, one_vs_all: bool) -> np.ndarray:
    """{-1,+1} regression targets, one column per output."""
    if class_count == 2 and not one_vs_all:
        return np.where(labels == 1, 1.0, -1.0)[:, None]
    return np.where(labels[:, None] == np.arange(class_count)[None, :], 1.0, -1.0)


def _solve(aug: np.ndarray, targets: np.ndarray, lam: float) -> np.ndarray:
    """Solve the (ridge) least squares system on an intercept-augmented matrix.

    lam penalizes feature weights only, never the intercept column. With
    lam=0 and a rank-deficient system this returns the minimum-norm
    solution (SVD cutoff at max(m, d) * eps * sigma_max, numpy's default).
    """
    m, d_aug = aug.shape
    if lam == 0.0:
        beta, *_ = np.linalg.lstsq(aug, targets, rcond=None)
        return beta
    gram = aug.T @ aug
    gram[np.diag_indices(d_aug - 1)] += lam
    return _solve_gram(gram, aug.T @ targets)


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a regularized Gram system, least-squares fallback if singular."""
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        beta, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
        return beta


def fit_least_squares(train: LabeledDataset, lam: float = 0.0, *,
                      one_vs_all: bool = False) -> LinearModel:
    """Fit the least-squares classifier on `train`.

    Solves the regularized normal equations (X'X + lam*I) w = X'y per output
    column, with the intercept excluded from the penalty. lam=0 with a
    rank-deficient design falls back to the Moore-Penrose pseudo-inverse
    (minimum-norm) solution.

    Parameters
    ----------
    train : LabeledDataset
    lam : float, nonnegative ridge strength on the feature weights.
    one_vs_all : force the one-vs-all path even for two classes (two output
        columns instead of one signed column).
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not np.isfinite(train.features).all():
        raise ValueError("invalid data")
    X = train.features
    m = len(train)
    aug = np.column_stack([X, np.ones(m)])
    Y = _targets(train.labels, train.class_count, one_vs_all)
    beta = _solve(aug, Y, lam)
    return LinearModel(weights=beta[:-1], intercepts=beta[-1],
                       class_count=train.class_count, trained_on=m)


class RunningLeastSquares:
    """Least-squares fits on a growing training set without re-scanning it.

    Keeps the accumulated Gram matrix / moment vector so that refitting after
    each appended batch costs one linear solve instead of a pass over all
    rows. Produces the same models as `fit_least_squares` on the concatenated
    data (raw rows are kept for the underdetermined pseudo-inverse regime).
    """

    def __init__(self, dim: int, class_count: int = 2, *, one_vs_all: bool = False):
        self.dim = dim
        self.class_count = class_count
        self.one_vs_all = one_vs_all or class_count > 2
        k = class_count if self.one_vs_all else 1
        self._gram = np.zeros((dim + 1, dim + 1))
        self._rhs = np.zeros((dim + 1, k))
        self._blocks: list[LabeledDataset] = []
        self._rows = 0

    def __len__(self) -> int:
        return self._rows

    def append(self, batch: LabeledDataset) -> None:
        if batch.dim != self.dim:
            raise ValueError("dimension mismatch between batch and accumulator")
        if not np.isfinite(batch.features).all():
            raise ValueError("invalid data")
        aug = np.column_stack([batch.features, np.ones(len(batch))])
        self._gram += aug.T @ aug
        self._rhs += aug.T @ _targets(batch.labels, self.class_count, self.one_vs_all)
        self._blocks.append(batch)
        self._rows += len(batch)

    def dataset(self) -> LabeledDataset:
        """The accumulated training set as one dataset."""
        if not self._blocks:
            raise ValueError("empty training set")
        return concat_datasets(self._blocks)

    def fit(self, lam: float = 0.0) -> LinearModel:
        if self._rows == 0:
            raise ValueError("empty training set")
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        if lam == 0.0 and self._rows <= self.dim + 1:
            # underdetermined: minimum-norm solution needs the raw rows
            return fit_least_squares(self.dataset(), 0.0,
                                     one_vs_all=self.one_vs_all)
        if lam == 0.0:
            # LU here: the unregularized Gram can sit near singular around
            # the interpolation threshold, where Cholesky gives up early
            try:
                beta = np.linalg.solve(self._gram, self._rhs)
            except np.linalg.LinAlgError:
                return fit_least_squares(self.dataset(), 0.0,
                                         one_vs_all=self.one_vs_all)
        else:
            # mutate the feature diagonal in place and restore it exactly;
            # cheaper than copying the Gram for every penalty in a grid
            idx = np.diag_indices(self.dim)
            saved = self._gram[idx].copy()
            self._gram[idx] += lam
            try:
                beta = _solve_gram(self._gram, self._rhs)
            finally:
                self._gram[idx] = saved
        return LinearModel(weights=beta[:-1], intercepts=beta[-1],
                           class_count=self.class_count, trained_on=self._rows)
