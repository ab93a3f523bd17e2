#!/usr/bin/env python3
"""Regenerate the frozen grid-search oracle for the SVM acceptance test.

Draws seeded random 2-D instances (3..6 rows, both labels present) and
computes the exhaustive minimum of the squared-hinge objective over
(w1, w2, b) in [-3, 3]^3 at step 0.01.  Instances are kept only when the
grid is demonstrably adequate: the coarse minimum must sit strictly inside
the box and agree with a locally refined grid (step 0.001) to 5e-4, so the
frozen value is within the test tolerance of the true optimum.  Everything
is deterministic; rerunning rewrites the same file.

Usage: python scripts/gen_svm_grid_oracle.py [--count 50] [--out PATH]
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from speciesid.rng import Xoshiro256

from oracles import svm_grid_search

SEED = 0x5EED_5D11


def grid_min_location(x, y, C, lo=-3.0, hi=3.0, step=0.01):
    """Grid minimum and its (w1, w2, b) location."""
    n_pts = int(round((hi - lo) / step)) + 1
    grid = lo + step * np.arange(n_pts)
    w1 = grid[:, None]
    w2 = grid[None, :]
    reg = 0.5 * (w1**2 + w2**2)
    scores = [y[i] * (x[i, 0] * w1 + x[i, 1] * w2) for i in range(len(x))]
    best = (math.inf, None)
    for bi, b in enumerate(grid):
        total = reg.copy()
        for i in range(len(x)):
            viol = 1.0 - scores[i] - y[i] * b
            np.maximum(viol, 0.0, out=viol)
            total += C * viol**2
        idx = np.unravel_index(np.argmin(total), total.shape)
        value = float(total[idx])
        if value < best[0]:
            best = (value, (float(grid[idx[0]]), float(grid[idx[1]]), float(b)))
    return best


def refined_min(x, y, C, center, step=0.001, half_width=0.02):
    lo = [c - half_width for c in center]
    hi = [c + half_width for c in center]
    n = int(round(2 * half_width / step)) + 1
    g0 = lo[0] + step * np.arange(n)
    g1 = lo[1] + step * np.arange(n)
    g2 = lo[2] + step * np.arange(n)
    w1 = g0[:, None]
    w2 = g1[None, :]
    reg = 0.5 * (w1**2 + w2**2)
    scores = [y[i] * (x[i, 0] * w1 + x[i, 1] * w2) for i in range(len(x))]
    best = math.inf
    for b in g2:
        total = reg.copy()
        for i in range(len(x)):
            viol = 1.0 - scores[i] - y[i] * b
            np.maximum(viol, 0.0, out=viol)
            total += C * viol**2
        best = min(best, float(total.min()))
    return best


def draw_instance(rng: Xoshiro256):
    n = 3 + rng.randbelow(4)
    x = np.array([[rng.uniform01() * 3.0 - 1.5 for _ in range(2)] for _ in range(n)])
    y = np.array([1.0 if rng.uniform01() < 0.5 else -1.0 for _ in range(n)])
    if not (np.any(y > 0) and np.any(y < 0)):
        y[rng.randbelow(n)] *= -1.0
    C = (0.5, 1.0, 2.0)[rng.randbelow(3)]
    return x, y, C


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parent.parent / "tests" / "data" / "svm_grid_oracle.json"),
    )
    args = parser.parse_args()

    rng = Xoshiro256(SEED)
    instances = []
    attempts = 0
    while len(instances) < args.count:
        attempts += 1
        x, y, C = draw_instance(rng)
        coarse, where = grid_min_location(x, y, C)
        if any(abs(c) >= 2.99 for c in where):
            continue  # optimum too close to the box edge
        fine = refined_min(x, y, C, where)
        if coarse - fine > 5e-4:
            continue  # grid too coarse around this optimum
        check = svm_grid_search(x, y, C)
        assert abs(check - coarse) < 1e-12, "oracle disagree"
        instances.append(
            {
                "x": [[round(v, 12) for v in row] for row in x.tolist()],
                "y": [int(v) for v in y],
                "C": C,
                "grid_min_objective": coarse,
                "argmin": list(where),
            }
        )
        print(
            f"[{len(instances):2d}/{args.count}] rows={len(x)} C={C} "
            f"grid_min={coarse:.6f} at {tuple(round(v, 2) for v in where)}"
        )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "seed": SEED,
        "box": [-3.0, 3.0],
        "step": 0.01,
        "attempts": attempts,
        "instances": instances,
    }
    out_path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out_path} ({attempts} attempts)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
