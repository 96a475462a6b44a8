"""The dipping phenomenon: a problem where a perfect linear rule exists but
squared-loss fitting drifts away from it as data accumulates.

Run:  python demos/dipping_curve.py       (writes dipping_curves.csv, and a
                                           PNG when matplotlib is present)
"""

import csv

import numpy as np

from monolearn import build_config, run_experiment

config = build_config({
    "preset": "table1-dipping",
    "learners": ["SL", "MT_HT", "MT_CV"],
    "runs": 8,
    "test_size": 4000,
})
result = run_experiment(config)

rounds = np.arange(1, config.plan.n_rounds + 1)
sizes = rounds * config.plan.batch_size
curves = {name: result.stats[name].mean_curve for name in config.learners}

sl = curves["SL"]
print(f"standard learner: best error {sl.min():.3f} at m={sizes[sl.argmin()]}, "
      f"final error {sl[-1]:.3f} at m={sizes[-1]} -- more data is worse")
print(f"test-gated wrapper final error: {curves['MT_HT'][-1]:.3f}")
print(f"cross-validated wrapper final error: {curves['MT_CV'][-1]:.3f}")

with open("dipping_curves.csv", "w", newline="") as f:
    writer = csv.writer(f)
    writer.writerow(["training_size"] + list(config.learners))
    for i, m in enumerate(sizes.tolist()):
        writer.writerow([m] + [float(curves[n][i]) for n in config.learners])
print("wrote dipping_curves.csv")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.figure(figsize=(6, 4))
    for name in config.learners:
        plt.plot(sizes, curves[name], label=name)
    plt.xlabel("accumulated samples")
    plt.ylabel("expected error rate")
    plt.title("Dipping: wrappers refuse to follow the learner downhill")
    plt.legend()
    plt.tight_layout()
    plt.savefig("dipping_curves.png", dpi=120)
    print("wrote dipping_curves.png")
except ImportError:
    print("matplotlib not installed; skipped the plot")
