"""How the paired exact test behaves: p-values, one-tailedness, validity.

Run:  python demos/mcnemar_basics.py
"""

import numpy as np

from monolearn import (PairedOutcomeCounts, alpha_for_run_budget,
                       mcnemar_exact_one_tailed,
                       monotone_run_probability_bound)

# The test looks only at discordant rows: b rows where the new model is right
# and the old one wrong, c rows the other way around. Under "both models are
# equally good", b is a fair-coin count among b+c.
print("p-values for 10 discordant rows, by how many favor the new model:")
for b in range(11):
    counts = PairedOutcomeCounts(n00=0, n01=10 - b, n10=b, n11=0)
    print(f"  b={b:2d} c={10 - b:2d}  p = {mcnemar_exact_one_tailed(counts):.4f}")

# Validity: under the null the rejection rate never exceeds alpha. Because the
# binomial is discrete the test is conservative, often by a lot.
rng = np.random.default_rng(0)
trials = 100_000
print("\nsimulated null rejection rates (100k trials):")
for n_d in (5, 20, 100):
    table = np.array([mcnemar_exact_one_tailed(
        PairedOutcomeCounts(0, n_d - b, b, 0)) for b in range(n_d + 1)])
    pvals = table[rng.binomial(n_d, 0.5, size=trials)]
    row = "  ".join(f"alpha={a:.2f}: {np.mean(pvals <= a):.4f}"
                    for a in (0.01, 0.05, 0.1, 0.5))
    print(f"  {n_d:3d} discordant rows -> {row}")

# Calibrating alpha for a whole run: if every round tests at level alpha, a
# run of n rounds stays monotone with probability at least (1-alpha)^n.
print("\nrun-level calibration:")
for n in (10, 50, 150):
    alpha = alpha_for_run_budget(0.95, n)
    print(f"  n={n:3d}: alpha={alpha:.5f} keeps P(monotone run) >= "
          f"{monotone_run_probability_bound(alpha, n):.3f}")
