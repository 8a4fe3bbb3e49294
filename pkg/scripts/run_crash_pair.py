#!/usr/bin/env python3
"""Reproduce the crash / crash-prevention pair.

Runs the same falsification attack (constant +2 m bias on every field of the
victim's inbound messages, t in [10, 40) s) twice: once with the supervisor
disabled, once with the full switching scheme, and prints what happened.
Writes trace CSVs next to --out for plotting.

Usage: python scripts/run_crash_pair.py [--out DIR] [--seed N]
"""

import argparse
from pathlib import Path

from platoonsec import load_scenario, run_scenario, trace_metrics, write_trace_csv
import dataclasses

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def describe(label: str, trace, metrics) -> None:
    if metrics.collision:
        print(f"{label}: COLLISION at t={trace.collision.time:.2f} s "
              f"(follower {trace.collision.follower}, gap {trace.collision.gap:.3f} m)")
    else:
        final_eps = abs(float(trace.spacing_errors[-1, 1]))
        print(f"{label}: no collision; sup |eps_3| = "
              f"{metrics.sup_spacing_errors[1]:.3f} m, final |eps_3| = {final_eps:.2e} m")
    occ = metrics.mode_occupancy[1]
    print(f"    vehicle 3 mode occupancy: CACC {occ['CACC']:.1%}, ACC {occ['ACC']:.1%}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="crash_pair_out", help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for name in ("crash_baseline", "crash_defended"):
        config = load_scenario(CONFIGS / f"{name}.json")
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        trace = run_scenario(config)
        metrics = trace_metrics(trace)
        describe(name, trace, metrics)
        write_trace_csv(trace, out / f"{name}.csv")
    print(f"traces written under {out}/")


if __name__ == "__main__":
    main()
