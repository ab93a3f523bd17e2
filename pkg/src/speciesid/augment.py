"""Rotation-only image augmentation.

Genitalia size and (a)symmetry are diagnostic, so rotation is the single
permitted transform: no zoom, shear, flip or color jitter anywhere in this
module's surface.  Rotations keep the input canvas and fill uncovered
corners with the border-pixel median by default (the specimen backgrounds
are near uniform; a constant fill would paint exploitable edges).
"""

from __future__ import annotations

import math

import numpy as np

from .dataset import (
    KIND_ORIGINAL,
    KIND_ROTATED,
    DatasetManifest,
    Provenance,
    SampleRecord,
)
from .errors import GeometryError
from .image import RasterImage

MAX_ROTATION_DEG = 20.0


def border_median(img: RasterImage) -> np.ndarray:
    """Per-channel median intensity of the one-pixel image border."""
    px = img.pixels
    border = np.concatenate(
        [
            px[0, :, :],
            px[-1, :, :],
            px[1:-1, 0, :],
            px[1:-1, -1, :],
        ]
    )
    return np.median(border, axis=0)


def rotate_image(
    img: RasterImage, angle: float, fill: float | np.ndarray | None = None
) -> RasterImage:
    """Rotate about the image center with bilinear resampling.

    Positive angles turn image content clockwise on screen (y down).  The
    output canvas equals the input canvas; regions swept in from outside
    take ``fill`` (default: border-pixel median).  Angles are limited to
    +-20 degrees.
    """
    if abs(angle) > MAX_ROTATION_DEG:
        raise GeometryError(f"|angle| must be <= {MAX_ROTATION_DEG}, got {angle}")
    if fill is None:
        fill = border_median(img)
    fill = np.broadcast_to(np.asarray(fill, dtype=np.float64), (img.channels,))

    h, w, c = img.pixels.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = math.radians(angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)

    ys, xs = np.mgrid[0:h, 0:w]
    dx = xs - cx
    dy = ys - cy
    # inverse map: sample the source at R(-theta) applied to output coords
    sx = cx + cos_t * dx + sin_t * dy
    sy = cy - sin_t * dx + cos_t * dy

    inside = (sx >= 0.0) & (sx <= w - 1) & (sy >= 0.0) & (sy <= h - 1)
    x0 = np.clip(np.floor(sx).astype(np.intp), 0, w - 1)
    y0 = np.clip(np.floor(sy).astype(np.intp), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[:, :, None]
    fy = (sy - y0)[:, :, None]

    px = img.pixels
    top = px[y0, x0, :] * (1.0 - fx) + px[y0, x1, :] * fx
    bottom = px[y1, x0, :] * (1.0 - fx) + px[y1, x1, :] * fx
    out = top * (1.0 - fy) + bottom * fy
    out = np.where(inside[:, :, None], out, fill[None, None, :])
    return RasterImage(np.clip(out, 0.0, 1.0))


def rotation_set(angles_max: float, step: float) -> list[float]:
    """All multiples of ``step`` up to ``angles_max``, both signs, no zero."""
    if step <= 0:
        raise GeometryError(f"step must be positive, got {step}")
    ratio = angles_max / step
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9:
        raise GeometryError(f"step {step} must divide angles_max {angles_max}")
    magnitudes = [step * i for i in range(1, n + 1)]
    return [-a for a in reversed(magnitudes)] + magnitudes


def augment_dataset(manifest: DatasetManifest, angles: list[float]) -> DatasetManifest:
    """Give every original record one rotated child per angle.

    Children are appended after the existing records (parents in manifest
    order, angles ascending); rotation itself happens lazily when features
    are extracted, so this is pure manifest bookkeeping.
    """
    if not angles:
        raise ValueError("angles must be nonempty")
    angles = sorted(angles)
    children = []
    for rec in manifest.records:
        if rec.provenance.kind != KIND_ORIGINAL:
            continue
        for angle in angles:
            children.append(
                SampleRecord(
                    sample_id=f"{rec.sample_id}__rot{angle:+g}",
                    label=rec.label,
                    payload=rec.payload,
                    provenance=Provenance(KIND_ROTATED, float(angle)),
                    parent_id=rec.sample_id,
                )
            )
    return DatasetManifest(manifest.records + tuple(children))
