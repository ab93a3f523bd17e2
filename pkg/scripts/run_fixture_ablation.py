#!/usr/bin/env python3
"""Desk-scale ablation experiment on the built-in imbalanced fixture.

Builds the frozen 20-class feature fixture (2-7 originals per class plus
train-only fake rows), then runs the flag ladder with shared seeds and
prints the accuracy/delta table.  Artifacts land in --out.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from speciesid import fixture
from speciesid.config import config_from_mapping
from speciesid.pipeline import ablation_table, emit_ablation_artifacts, run_ablation


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out/fixture_ablation")
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--repeats", type=int, default=10)
    parser.add_argument("--parallel", type=int, default=2)
    args = parser.parse_args()

    out = Path(args.out)
    manifest = fixture.make_feature_fixture(out / "data", fixture.PROFILES["imbalanced"])
    cfg = config_from_mapping(
        {
            "manifest": str(manifest),
            "out_dir": str(out),
            "seed": args.seed,
            "repeats": args.repeats,
            "parallel": args.parallel,
        }
    )
    rungs = run_ablation(cfg)
    emit_ablation_artifacts(rungs, out)
    print(ablation_table(rungs), end="")
    print(f"\nartifacts: {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
