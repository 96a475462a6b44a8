"""Learners driven round-by-round over incoming data batches.

All wrappers share one shape: absorb a batch, refit the base learner on the
accumulated training data, decide whether the new model replaces the retained
one, and return a model for the round. They differ in the decision rule:

* StandardLearner      -- no comparison, always returns the fresh fit.
* MonotoneHoldout      -- splits off validation data; 'simple' mode switches
                          whenever the candidate's holdout error is no worse,
                          'ht' mode only when a one-tailed McNemar test on the
                          paired holdout predictions is significant at alpha.
* MonotoneCrossVal     -- pools everything, tracks fold ids, compares the
                          fold-averaged cross-validation error of the new
                          round against the best round so far.
* RidgeSelect          -- tunes the ridge penalty on the holdout split each
                          round and returns the winning fit (no monotonicity
                          guard); the usual regularization baseline.

The holdout comparison is paired: candidate and incumbent are both evaluated
on the round's validation split, which is appended to the training data only
after the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (LabeledDataset, RunningLeastSquares, concat_datasets,
                     empirical_error)
from .stats import paired_counts, update_ht, update_simple

__all__ = [
    "RoundDecision",
    "StandardLearner",
    "MonotoneHoldout",
    "MonotoneCrossVal",
    "RidgeSelect",
]


@dataclass(frozen=True)
class RoundDecision:
    """Audit record of one wrapper round."""

    round: int
    update: bool
    returned_model: object
    p_value: float | None = None
    candidate_val_error: float | None = None
    incumbent_val_error: float | None = None
    b: int | None = None
    c: int | None = None
    fold_candidate_errors: tuple | None = None
    fold_incumbent_errors: tuple | None = None
    selected_lambda: float | None = None


class _RoundDriven:
    """Shared bookkeeping: round counter and last update round."""

    def __init__(self):
        self.round = 0
        self.last_update_round = 0

    def _advance(self) -> int:
        self.round += 1
        return self.round


class StandardLearner(_RoundDriven):
    """Trains on every received sample and always returns the new fit."""

    def __init__(self, dim: int, class_count: int = 2, lam: float = 0.0,
                 append_validation: bool = True, trainer=None):
        super().__init__()
        self.lam = lam
        self.append_validation = append_validation
        self.trainer = (RunningLeastSquares(dim, class_count)
                        if trainer is None else trainer)
        self.model = None

    def process_batch(self, train: LabeledDataset, val: LabeledDataset) -> RoundDecision:
        i = self._advance()
        self.trainer.append(train)
        if self.append_validation and len(val):
            self.trainer.append(val)
        self.model = self.trainer.fit(self.lam)
        self.last_update_round = i
        return RoundDecision(round=i, update=True, returned_model=self.model)


class MonotoneHoldout(_RoundDriven):
    """Keeps the best model so far, switching only when a fresh fit wins the
    holdout comparison ('simple') or the hypothesis test ('ht')."""

    def __init__(self, dim: int, class_count: int = 2, mode: str = "simple",
                 alpha: float | None = None, lam: float = 0.0,
                 append_validation: bool = True, trainer=None):
        super().__init__()
        if mode not in ("simple", "ht"):
            raise ValueError("mode must be 'simple' or 'ht'")
        if mode == "ht":
            if alpha is None:
                raise ValueError("ht mode requires alpha")
            if not 0.0 < alpha <= 0.5:
                raise ValueError("alpha must be in (0, 0.5]")
        self.mode = mode
        self.alpha = alpha
        self.lam = lam
        self.append_validation = append_validation
        self.trainer = (RunningLeastSquares(dim, class_count)
                        if trainer is None else trainer)
        self.incumbent = None
        self.incumbent_round = 0

    def process_batch(self, train: LabeledDataset, val: LabeledDataset) -> RoundDecision:
        if len(val) == 0:
            raise ValueError("empty validation split")
        i = self._advance()
        self.trainer.append(train)
        candidate = self.trainer.fit(self.lam)
        cand_err = empirical_error(candidate, val)
        p_value = b = c = None
        inc_err = None
        if self.incumbent is None:
            update = True
        else:
            inc_err = empirical_error(self.incumbent, val)
            if self.mode == "simple":
                update = update_simple(cand_err, inc_err)
            else:
                counts = paired_counts(candidate, self.incumbent, val)
                decision = update_ht(counts, self.alpha)
                update, p_value = decision.update, decision.p_value
                b, c = decision.b, decision.c
        if self.append_validation:
            self.trainer.append(val)
        if update:
            self.incumbent = candidate
            self.incumbent_round = i
            self.last_update_round = i
        return RoundDecision(round=i, update=update, returned_model=self.incumbent,
                             p_value=p_value, candidate_val_error=cand_err,
                             incumbent_val_error=inc_err, b=b, c=c)


class _FoldStore:
    """A fold's validation rows in one contiguous, amortized-growth buffer."""

    def __init__(self, dim: int):
        self.features = np.empty((64, dim))
        self.labels = np.empty(64, dtype=np.int64)
        self.rows = 0

    def add(self, batch: LabeledDataset) -> None:
        need = self.rows + len(batch)
        if need > len(self.labels):
            cap = max(need, 2 * len(self.labels))
            grown = np.empty((cap, self.features.shape[1]))
            grown[: self.rows] = self.features[: self.rows]
            self.features = grown
            self.labels = np.resize(self.labels, cap)
        self.features[self.rows: need] = batch.features
        self.labels[self.rows: need] = batch.labels
        self.rows = need

    def error(self, model) -> float:
        if self.rows == 0:
            raise ValueError("empty validation fold")
        pred = model.predict(self.features[: self.rows])
        return float(np.mean(pred != self.labels[: self.rows]))


class MonotoneCrossVal(_RoundDriven):
    """Cross-validated round selection.

    Every sample keeps a fold id for its whole life; each round trains one
    model per fold on the pooled out-of-fold data and compares the fold-mean
    validation error against the stored best round's models, re-evaluated on
    the grown folds. On a strict improvement the new round's models replace
    the stored ones. The returned model is the stored fold with the lowest
    current validation error (lowest fold index on ties).
    """

    def __init__(self, dim: int, class_count: int = 2, folds: int = 5,
                 lam: float = 0.0, rng=None, trainer_factory=None):
        super().__init__()
        if folds < 2:
            raise ValueError("folds must be at least 2")
        self.folds = folds
        self.lam = lam
        self.rng = np.random.default_rng(rng)
        factory = trainer_factory or (lambda: RunningLeastSquares(dim, class_count))
        self.trainers = [factory() for _ in range(folds)]
        self.fold_store = [_FoldStore(dim) for _ in range(folds)]
        self.best_models = None
        self.best_round = 0

    def _assign_folds(self, batch: LabeledDataset) -> np.ndarray:
        """Stratified fold ids: per-class shuffled round-robin over folds."""
        fold_ids = np.empty(len(batch), dtype=np.int64)
        for cls in range(batch.class_count):
            rows = np.flatnonzero(batch.labels == cls)
            rows = rows[self.rng.permutation(len(rows))]
            fold_ids[rows] = np.arange(len(rows)) % self.folds
        return fold_ids

    def _fold_error(self, model, fold: int) -> float:
        return self.fold_store[fold].error(model)

    def process_batch(self, train: LabeledDataset, val: LabeledDataset) -> RoundDecision:
        batch = concat_datasets([train, val]) if len(val) else train
        if len(batch) < self.folds:
            raise ValueError("batch smaller than the fold count")
        i = self._advance()
        fold_ids = self._assign_folds(batch)
        for k in range(self.folds):
            in_fold = fold_ids == k
            if in_fold.any():
                self.fold_store[k].add(batch.take(in_fold))
            out = ~in_fold
            if out.any():
                self.trainers[k].append(batch.take(out))
        candidates = [self.trainers[k].fit(self.lam) for k in range(self.folds)]
        cand_errs = np.array([self._fold_error(candidates[k], k)
                              for k in range(self.folds)])
        if self.best_models is None:
            best_errs = None
            update = True
        else:
            best_errs = np.array([self._fold_error(self.best_models[k], k)
                                  for k in range(self.folds)])
            update = cand_errs.mean() < best_errs.mean()
        if update:
            self.best_models = candidates
            self.best_round = i
            self.last_update_round = i
            current_errs = cand_errs
        else:
            current_errs = best_errs
        k_star = int(np.argmin(current_errs))
        return RoundDecision(
            round=i, update=update, returned_model=self.best_models[k_star],
            candidate_val_error=float(cand_errs.mean()),
            incumbent_val_error=None if best_errs is None else float(best_errs.mean()),
            fold_candidate_errors=tuple(cand_errs),
            fold_incumbent_errors=None if best_errs is None else tuple(best_errs))


class RidgeSelect(_RoundDriven):
    """Per-round ridge tuning: fit every penalty in the grid on the
    accumulated training data, keep whichever has the lowest holdout error
    (largest penalty on ties), and return that fit."""

    def __init__(self, dim: int, class_count: int = 2, grid=(),
                 append_validation: bool = True, trainer=None):
        super().__init__()
        grid = sorted(float(g) for g in grid)
        if not grid:
            raise ValueError("lambda grid must be nonempty")
        if grid[0] < 0:
            raise ValueError("lambda must be nonnegative")
        self.grid = grid
        self.append_validation = append_validation
        self.trainer = (RunningLeastSquares(dim, class_count)
                        if trainer is None else trainer)
        self.model = None

    def process_batch(self, train: LabeledDataset, val: LabeledDataset) -> RoundDecision:
        if len(val) == 0:
            raise ValueError("empty validation split")
        i = self._advance()
        self.trainer.append(train)
        best_err, best_model, best_lam = None, None, None
        for lam in self.grid:  # ascending, <= keeps the larger penalty on ties
            model = self.trainer.fit(lam)
            e = empirical_error(model, val)
            if best_err is None or e <= best_err:
                best_err, best_model, best_lam = e, model, lam
        if self.append_validation:
            self.trainer.append(val)
        self.model = best_model
        self.last_update_round = i
        return RoundDecision(round=i, update=True, returned_model=best_model,
                             candidate_val_error=best_err,
                             selected_lambda=best_lam)
