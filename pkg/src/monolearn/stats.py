"""Paired one-tailed model comparison via McNemar's exact conditional test.

The test conditions on the discordant pairs: rows where exactly one of the
two models is correct. Under the null (equal error rates) the count b of
"candidate right, incumbent wrong" rows is Binomial(b+c, 1/2); the one-tailed
p-value is the upper binomial tail at b. Small p favors the candidate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy.stats import binom

from .models import LabeledDataset, LinearModel

__all__ = [
    "PairedOutcomeCounts",
    "TestDecision",
    "paired_counts",
    "mcnemar_exact_one_tailed",
    "update_simple",
    "update_ht",
    "alpha_for_run_budget",
    "monotone_run_probability_bound",
]

# exact integer arithmetic below this many discordant pairs, log-space above
_EXACT_LIMIT = 1000


@dataclass(frozen=True)
class PairedOutcomeCounts:
    """2x2 correctness counts of (candidate, incumbent) on one shared sample.

    First index is candidate correctness, second incumbent correctness:
    n10 = b (candidate right, incumbent wrong), n01 = c (the reverse).
    """

    n00: int
    n01: int
    n10: int
    n11: int

    def __post_init__(self):
        if min(self.n00, self.n01, self.n10, self.n11) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def b(self) -> int:
        return self.n10

    @property
    def c(self) -> int:
        return self.n01

    @property
    def total(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11


@dataclass(frozen=True)
class TestDecision:
    """Outcome of one hypothesis-test comparison, with audit fields."""

    p_value: float
    alpha: float
    update: bool
    b: int
    c: int


def paired_counts(candidate: LinearModel, incumbent: LinearModel,
                  sample: LabeledDataset) -> PairedOutcomeCounts:
    """Correctness cross-tabulation of two models on the same sample."""
    if len(sample) == 0:
        raise ValueError("empty evaluation set")
    cand_ok = candidate.predict(sample.features) == sample.labels
    inc_ok = incumbent.predict(sample.features) == sample.labels
    return PairedOutcomeCounts(
        n00=int(np.sum(~cand_ok & ~inc_ok)),
        n01=int(np.sum(~cand_ok & inc_ok)),
        n10=int(np.sum(cand_ok & ~inc_ok)),
        n11=int(np.sum(cand_ok & inc_ok)),
    )


def mcnemar_exact_one_tailed(counts: PairedOutcomeCounts) -> float:
    """Upper binomial tail P(X >= b) for X ~ Binomial(b+c, 1/2).

    Exact (integer arithmetic) for b+c <= 1000; no discordant pairs means
    no evidence either way, p = 1.
    """
    b, n = counts.b, counts.b + counts.c
    if n == 0:
        return 1.0
    if n <= _EXACT_LIMIT:
        tail = sum(comb(n, k) for k in range(b, n + 1))
        return float(Fraction(tail, 2 ** n))
    return float(binom.sf(b - 1, n, 0.5))


def update_simple(p_current: float, p_best: float) -> bool:
    """Plain holdout comparison: switch when the candidate is no worse."""
    return p_current <= p_best


def update_ht(counts: PairedOutcomeCounts, alpha: float) -> TestDecision:
    """Hypothesis-test comparison: switch only on significant improvement.

    alpha must lie in (0, 1/2]; the decision is update iff p <= alpha.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must be in (0, 0.5]")
    p = mcnemar_exact_one_tailed(counts)
    return TestDecision(p_value=p, alpha=alpha, update=p <= alpha,
                        b=counts.b, c=counts.c)


def alpha_for_run_budget(beta: float, n: int) -> float:
    """Per-round confidence level so a whole n-round run stays monotone
    with probability at least beta: alpha = 1 - beta**(1/n).

    Returns the raw value, which exceeds the test's valid domain (0, 1/2]
    for small n; a warning is emitted then and callers should clamp.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    alpha = 1.0 - beta ** (1.0 / n)
    if alpha > 0.5:
        warnings.warn(f"alpha {alpha:.3f} exceeds 0.5; clamp before testing",
                      stacklevel=2)
    return alpha


def monotone_run_probability_bound(alpha: float, n: int) -> float:
    """Lower bound (1-alpha)^n on the probability an n-round run is monotone."""
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must be in (0, 0.5]")
    if n < 1:
        raise ValueError("n must be positive")
    return (1.0 - alpha) ** n
