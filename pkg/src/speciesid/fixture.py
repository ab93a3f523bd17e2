"""Seeded synthetic fixtures so experiments and the acceptance suite run
without any external data.

Feature fixtures are Gaussian class blobs written as a ``.fvec`` file plus
a manifest; the ``imbalanced`` profile mimics the few-samples regime
(many classes, 2-7 originals each, 512 dims), the ``separable`` profile is
an easy sanity baseline.  The ``images`` profile writes small grayscale
PGM images with a class-specific bright spot for the image pipeline and
heatmap demos.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import (
    KIND_GAN,
    KIND_ORIGINAL,
    DatasetManifest,
    Provenance,
    SampleLabel,
    SampleRecord,
    write_manifest,
)
from .features import FeatureTable, FeatureVector, write_feature_table
from .image import RasterImage, write_image
from .rng import Xoshiro256, derive_seed


@dataclass(frozen=True)
class FixtureSpec:
    n_classes: int = 20
    counts: tuple[int, ...] = (2, 3, 4, 5, 6, 7)  # cycled over classes
    dims: int = 512
    seed: int = 2024
    center_scale: float = 1.0
    noise_scale: float = 4.0
    gan_per_class: int = 5


PROFILES = {
    # class overlap and per-class fake counts calibrated so the ablation
    # ladder shows a clear augmentation benefit at sub-minute runtime
    "imbalanced": FixtureSpec(),
    "separable": FixtureSpec(
        n_classes=5, counts=(8,), dims=32, center_scale=4.0, noise_scale=0.5,
        gan_per_class=0,
    ),
}


def _normals(rng: Xoshiro256, n: int) -> np.ndarray:
    return np.array([rng.normal() for _ in range(n)])


def make_feature_fixture(out_dir: str | Path, spec: FixtureSpec = PROFILES["imbalanced"]):
    """Write ``manifest.csv`` + ``features.fvec``; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[FeatureVector] = []
    records: list[SampleRecord] = []
    counter = 0
    for cls in range(spec.n_classes):
        rng = Xoshiro256(derive_seed(spec.seed, cls))
        label = SampleLabel(cls, f"species_{cls:02d}")
        center = _normals(rng, spec.dims) * spec.center_scale
        n_orig = spec.counts[cls % len(spec.counts)]
        for kind, count in ((KIND_ORIGINAL, n_orig), (KIND_GAN, spec.gan_per_class)):
            for _ in range(count):
                values = center + _normals(rng, spec.dims) * spec.noise_scale
                prefix = "s" if kind == KIND_ORIGINAL else "g"
                sample_id = f"{prefix}{counter:04d}"
                counter += 1
                rows.append(
                    FeatureVector(values=values, sample_id=sample_id, label=label)
                )
                records.append(
                    SampleRecord(
                        sample_id=sample_id,
                        label=label,
                        payload="features.fvec",
                        provenance=Provenance(kind),
                    )
                )
    write_feature_table(FeatureTable(tuple(rows)), out_dir / "features.fvec")
    manifest = DatasetManifest(tuple(records))
    manifest_path = out_dir / "manifest.csv"
    write_manifest(manifest, manifest_path)
    return manifest_path


def class_spot_image(
    species_id: int, sample_seed: int, size: int = 64, noise: float = 0.08
) -> RasterImage:
    """Grayscale image with a class-positioned bright blob plus pixel noise."""
    rng = Xoshiro256(sample_seed)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    angle = 2.0 * np.pi * species_id / 7.3
    cy = size / 2.0 + (size / 4.0) * np.sin(angle)
    cx = size / 2.0 + (size / 4.0) * np.cos(angle)
    sigma = size / 10.0 + species_id % 3
    blob = np.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2.0 * sigma**2))
    jitter = np.array(
        [rng.uniform01() for _ in range(size * size)]
    ).reshape(size, size)
    pixels = 0.15 + 0.7 * blob + noise * (jitter - 0.5)
    return RasterImage(np.clip(pixels, 0.0, 1.0)[:, :, None])


def make_image_fixture(
    out_dir: str | Path,
    n_classes: int = 4,
    counts: tuple[int, ...] = (3, 4),
    size: int = 64,
    seed: int = 7,
):
    """Write per-sample PGM images plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    records = []
    counter = 0
    for cls in range(n_classes):
        label = SampleLabel(cls, f"species_{cls:02d}")
        for _ in range(counts[cls % len(counts)]):
            sample_id = f"s{counter:04d}"
            counter += 1
            img = class_spot_image(cls, derive_seed(seed, cls, counter), size=size)
            rel = f"images/{sample_id}.pgm"
            write_image(img, out_dir / rel)
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    label=label,
                    payload=rel,
                    provenance=Provenance(KIND_ORIGINAL),
                )
            )
    manifest_path = out_dir / "manifest.csv"
    write_manifest(DatasetManifest(tuple(records)), manifest_path)
    return manifest_path
