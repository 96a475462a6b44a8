"""Command-line entry point.

Subcommands:
  run       execute an experiment config and persist results
  sweep     grid over (alpha, validation size) with the holdout-study protocol
  verify    Monte Carlo check of the monotone-run guarantee + stuck diagnostic
  report    render tables / curve / sweep CSVs from a results directory
  gen-data  sample a synthetic dataset to a CSV file

Configs are JSON; `--set key=value` overrides nested keys with dots
(e.g. --set batch.rounds=20). A config may be just {"preset": "table1-peaking"}.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import (ConfigError, apply_overrides, build_config,
                     load_config_file)
from .datasets import generate
from .harness import (consistency_smoke, run_experiment, sweep,
                      verify_theorem1, write_results, write_sweep)
from .reporting import emit_report

__all__ = ["main"]


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="monolearn",
        description="Monotone learner wrappers: experiments and reports")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", required=True, help="JSON config path")
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
    run_p.add_argument("--out", required=True, help="output directory")

    sweep_p = sub.add_parser("sweep", help="alpha x validation-size grid")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--set", dest="overrides", action="append", default=[])
    sweep_p.add_argument("--alphas", required=True,
                         help="comma-separated alpha grid")
    sweep_p.add_argument("--nvs", required=True,
                         help="comma-separated validation sizes")
    sweep_p.add_argument("--out", required=True)

    verify_p = sub.add_parser("verify", help="check the monotone-run bound")
    verify_p.add_argument("--config", required=True)
    verify_p.add_argument("--set", dest="overrides", action="append", default=[])
    verify_p.add_argument("--out", required=True)

    report_p = sub.add_parser("report", help="render results to tables/curves")
    report_p.add_argument("--in", dest="results_dir", required=True)
    report_p.add_argument("--out", required=True)

    gen_p = sub.add_parser("gen-data", help="sample a synthetic dataset to CSV")
    gen_p.add_argument("--spec", required=True, help="JSON generator spec path")
    gen_p.add_argument("--count", required=True, type=int)
    gen_p.add_argument("--out", required=True, help="output CSV file")

    return parser.parse_args(argv)


def _load(args):
    raw = load_config_file(args.config)
    raw = apply_overrides(raw, args.overrides)
    return build_config(raw)


def _cmd_run(args) -> int:
    config = _load(args)
    result = run_experiment(config)
    write_results(result, Path(args.out))
    for name in config.learners:
        s = result.stats[name]
        print(f"{name}: aulc {s.aulc_mean:.4f} ({s.aulc_std:.4f})  "
              f"fraction {s.fraction_mean:.4f} ({s.fraction_std:.4f})")
    print(f"results written to {args.out}")
    return 0


def _parse_grid(text, cast):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc


def _cmd_sweep(args) -> int:
    config = _load(args)
    alphas = _parse_grid(args.alphas, float)
    nvs = _parse_grid(args.nvs, int)
    cells = sweep(config, alphas, nvs)
    write_sweep(cells, config, Path(args.out))
    print(f"{len(cells)} cells written to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    config = _load(args)
    result = run_experiment(config)
    theorem = verify_theorem1(config, result)
    smoke = consistency_smoke(config, result)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results(result, out_dir)
    with open(out_dir / "verify.json", "w") as f:
        json.dump({"theorem1": theorem, "consistency": smoke}, f,
                  indent=2, sort_keys=True)
        f.write("\n")
    print(f"monotone runs: {theorem['monotone_run_fraction']:.4f} "
          f"(bound {theorem['bound']:.3e}"
          f"{', vacuous' if theorem['vacuous'] else ''})")
    print(f"per-decision non-monotone rate: {theorem['per_decision_rate']:.4f} "
          f"(alpha {theorem['alpha']})")
    for name, info in smoke["learners"].items():
        gap = info["gap_to_sl_final"]
        print(f"{name}: frozen before n/2 in "
              f"{info['frozen_before_half_fraction']:.0%} of runs"
              + (f", final error gap to SL {gap:+.4f}" if gap is not None else ""))
    if smoke["flagged_frozen"]:
        print("flagged as stuck: " + ", ".join(smoke["flagged_frozen"]))
    print("PASS" if theorem["passed"] else "FAIL")
    return 0 if theorem["passed"] else 1


def _cmd_report(args) -> int:
    written = emit_report(Path(args.results_dir), Path(args.out))
    for name in written:
        print(f"wrote {name}")
    return 0


def _cmd_gen_data(args) -> int:
    from .config import _build_dataset  # same spec schema as config files
    with open(args.spec) as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ConfigError("spec must be a JSON object")
    spec = _build_dataset(raw)
    if spec.kind == "mnist":
        raise ConfigError("gen-data supports synthetic kinds only")
    if args.count < 1:
        raise ConfigError("count must be positive")
    data = generate(spec, args.count)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(data.dim)] + ["label"])
        for row, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    print(f"wrote {len(data)} rows to {out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "report": _cmd_report,
    "gen-data": _cmd_gen_data,
}


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
