"""Render benchmark tables, learning-curve data and sweep surfaces.

Report emission is a pure function of the results files written by the run
and sweep commands: re-running it on the same inputs reproduces identical
output bytes. Plots are emitted as plain CSV columns so any plotting tool
can consume them.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .harness import SUMMARY_JSON, SWEEP_JSON

__all__ = ["emit_report"]

# canonical benchmark-table row order and display labels
_ROW_ORDER = ("SL", "MT_SIMPLE", "MT_HT", "MT_CV", "LAMBDA_S")
_LABELS = {"SL": "SL", "MT_SIMPLE": "M_S", "MT_HT": "M_HT", "MT_CV": "M_CV",
           "LAMBDA_S": "lambda_S"}


def _ordered(names) -> list:
    known = [n for n in _ROW_ORDER if n in names]
    return known + sorted(set(names) - set(known))


def _emit_table(summary: dict, out_dir: Path) -> None:
    learners = summary["learners"]
    order = _ordered(learners)
    best = min(learners[n]["fraction_mean"] for n in order)
    with open(out_dir / "table.csv", "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["learner", "aulc_mean", "aulc_std", "fraction_mean",
                         "fraction_std", "best_monotonicity"])
        for name in order:
            s = learners[name]
            writer.writerow([
                _LABELS.get(name, name), repr(s["aulc_mean"]),
                repr(s["aulc_std"]), repr(s["fraction_mean"]),
                repr(s["fraction_std"]),
                "true" if s["fraction_mean"] == best else "false"])
    lines = [f"{'learner':10s} {'AULC':>16s} {'Fraction':>14s}"]
    for name in order:
        s = learners[name]
        mark = "  <-- best monotonicity" if s["fraction_mean"] == best else ""
        lines.append(
            f"{_LABELS.get(name, name):10s} "
            f"{s['aulc_mean']:7.3f} ({s['aulc_std']:.3f}) "
            f"{s['fraction_mean']:7.2f} ({s['fraction_std']:.2f}){mark}")
    (out_dir / "table.txt").write_text("\n".join(lines) + "\n")


def _emit_curves(summary: dict, out_dir: Path) -> None:
    for name in _ordered(summary["learners"]):
        s = summary["learners"][name]
        with open(out_dir / f"curve_{name}.csv", "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["round", "mean_error", "std_error"])
            for i, (m, sd) in enumerate(zip(s["mean_curve"], s["std_curve"]), 1):
                writer.writerow([i, repr(m), repr(sd)])


def _emit_sweep(doc: dict, out_dir: Path) -> None:
    names = sorted({name for cell in doc["cells"] for name in cell["learners"]})
    for name in names:
        with open(out_dir / f"sweep_{name}.csv", "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["alpha", "nv", "aulc", "fraction"])
            for cell in doc["cells"]:
                if name not in cell["learners"]:
                    continue
                s = cell["learners"][name]
                # log-log plots cannot place exact zeros; mark them instead
                frac = s["fraction_mean"]
                writer.writerow([repr(float(cell["alpha"])), cell["nv"],
                                 repr(s["aulc_mean"]),
                                 "zero" if frac == 0.0 else repr(frac)])


def emit_report(results_dir, out_dir) -> list:
    """Render every results file found in `results_dir` into `out_dir`.

    Produces a benchmark-shaped table (CSV + aligned text, lowest
    non-monotone fraction flagged), one expected-learning-curve CSV per
    learner, and long-format sweep surface CSVs. Raises if `results_dir`
    holds no results; nothing is written in that case.
    """
    results_dir = Path(results_dir)
    summary_path = results_dir / SUMMARY_JSON
    sweep_path = results_dir / SWEEP_JSON
    if not summary_path.exists() and not sweep_path.exists():
        raise FileNotFoundError(
            f"no results in {results_dir} (expected {SUMMARY_JSON} or {SWEEP_JSON})")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if summary_path.exists():
        summary = json.loads(summary_path.read_text())
        _emit_table(summary, out_dir)
        _emit_curves(summary, out_dir)
        written += ["table.csv", "table.txt"]
        written += [f"curve_{n}.csv" for n in _ordered(summary["learners"])]
    if sweep_path.exists():
        doc = json.loads(sweep_path.read_text())
        _emit_sweep(doc, out_dir)
        written += sorted({f"sweep_{n}.csv" for cell in doc["cells"]
                           for n in cell["learners"]})
    return written
