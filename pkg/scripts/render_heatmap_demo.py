#!/usr/bin/env python3
"""End-to-end heatmap demo on the synthetic image fixture.

Writes a small labeled image set, trains the full feature -> PCA -> SVM
chain on it, and renders per-sample and per-class CAM overlays.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from speciesid import fixture
from speciesid.config import config_from_mapping
from speciesid.pipeline import render_heatmaps


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out/heatmap_demo")
    parser.add_argument("--classes", type=int, default=4)
    parser.add_argument("--size", type=int, default=96)
    parser.add_argument("--alpha", type=float, default=0.45)
    args = parser.parse_args()

    out = Path(args.out)
    manifest = fixture.make_image_fixture(
        out / "data", n_classes=args.classes, counts=(4, 5), size=args.size, seed=13
    )
    cfg = config_from_mapping(
        {"manifest": str(manifest), "out_dir": str(out), "ctv_grid": (90,), "seed": 13}
    )
    per_sample = render_heatmaps(cfg, out / "heatmaps", alpha=args.alpha)
    per_class = render_heatmaps(cfg, out / "heatmaps", per_class=True, alpha=args.alpha)
    print(f"wrote {len(per_sample)} sample overlays and {len(per_class)} class overlays")
    print(f"see {out / 'heatmaps'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
