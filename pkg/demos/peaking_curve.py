"""The peaking phenomenon: pseudo-inverse least squares is worst when the
training set size crosses the input dimension.

Run:  python demos/peaking_curve.py        (writes peaking_curve.csv, and a
                                            PNG when matplotlib is present)
"""

import csv

import numpy as np

from monolearn import (BatchPlan, RunningLeastSquares, draw_batches,
                       empirical_error, generate_peaking, peaking_spec)

D = 80          # input dimension; the error peak appears near m = D
ROUNDS = 60
PER_ROUND = 4
RUNS = 20

spec = peaking_spec(d=D, delta=2.33)
curves = []
for run in range(RUNS):
    rng = np.random.default_rng(1000 + run)
    test = generate_peaking(spec, 5000, rng=rng)
    plan = BatchPlan(n_rounds=ROUNDS, train_per_round=PER_ROUND,
                     val_per_round=0)
    trainer = RunningLeastSquares(D, 2)
    errs = []
    for train, _ in draw_batches(spec, plan, rng):
        trainer.append(train)
        errs.append(empirical_error(trainer.fit(), test))
    curves.append(errs)

mean = np.mean(curves, axis=0)
sizes = PER_ROUND * (np.arange(ROUNDS) + 1)
peak = int(sizes[np.argmax(mean)])
print(f"dimension d={D}; expected error peaks at m={peak} "
      f"with error {mean.max():.3f}")
print(f"(final error at m={sizes[-1]}: {mean[-1]:.3f})")

with open("peaking_curve.csv", "w", newline="") as f:
    writer = csv.writer(f)
    writer.writerow(["training_size", "mean_error"])
    writer.writerows(zip(sizes.tolist(), mean.tolist()))
print("wrote peaking_curve.csv")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.figure(figsize=(6, 4))
    plt.plot(sizes, mean)
    plt.axvline(D, linestyle="--", color="gray", label=f"m = d = {D}")
    plt.xlabel("training set size")
    plt.ylabel("expected error rate")
    plt.title("Peaking: more data is briefly worse")
    plt.legend()
    plt.tight_layout()
    plt.savefig("peaking_curve.png", dpi=120)
    print("wrote peaking_curve.png")
except ImportError:
    print("matplotlib not installed; skipped the plot")
