"""Class-activation heatmaps from feature maps and classifier weights.

The raw map is the class-weighted sum of the spatial activation maps; it
is bilinearly upscaled to the source image and blended over it through a
fixed blue -> green -> orange -> red colormap (breakpoints at 0, 1/3, 2/3
and 1 of the normalized range).  Negative evidence is kept (no clamping
before normalization) and shows up in the blue band.

The classifier is trained on standardized PCA scores, so its weights are
carried back to pooled-feature space as components^T @ (w / scale) before
they can weight the channel maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import SvmModel
from .errors import GeometryError, ShapeError
from .features import FeatureMaps
from .image import RasterImage, to_grayscale
from .reduce import PcaModel

COLORMAP_STOPS = (
    (0.0, (0.0, 0.0, 1.0)),  # blue
    (1.0 / 3.0, (0.0, 1.0, 0.0)),  # green
    (2.0 / 3.0, (1.0, 0.5, 0.0)),  # orange
    (1.0, (1.0, 0.0, 0.0)),  # red
)


@dataclass(frozen=True)
class Heatmap:
    values: np.ndarray  # (h, w) in [0, 1]

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise GeometryError("heatmap must be 2-D")
        if not np.isfinite(v).all() or v.min() < 0.0 or v.max() > 1.0:
            raise GeometryError("heatmap values must be finite and in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def compute_cam(maps: FeatureMaps, class_weights: np.ndarray) -> np.ndarray:
    """Weighted sum over channels: raw[h, w] = sum_c weights[c] * maps[c, h, w]."""
    weights = np.asarray(class_weights, dtype=np.float64)
    if weights.shape != (maps.channels,):
        raise ShapeError(
            f"need {maps.channels} class weights, got shape {weights.shape}"
        )
    return np.tensordot(weights, maps.values, axes=1)


def cam_weights(model: SvmModel, pca: PcaModel, species_id: int) -> np.ndarray:
    """Back-project one class's SVM weights to pooled-feature space."""
    w = model.weights[species_id] / model.feature_scale
    return pca.components[: model.dims].T @ w


def upscale_bilinear(raw: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Corner-aligned bilinear upscale of a 2-D map."""
    raw = np.asarray(raw, dtype=np.float64)
    h, w = raw.shape
    if target_h < h or target_w < w:
        raise GeometryError("targets must be at least the source dimensions")
    sy = (h - 1) / (target_h - 1) if target_h > 1 else 0.0
    sx = (w - 1) / (target_w - 1) if target_w > 1 else 0.0
    ys = np.arange(target_h) * sy
    xs = np.arange(target_w) * sx
    y0 = np.minimum(ys.astype(np.intp), h - 1)
    x0 = np.minimum(xs.astype(np.intp), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = raw[np.ix_(y0, x0)] * (1 - fx) + raw[np.ix_(y0, x1)] * fx
    bottom = raw[np.ix_(y1, x0)] * (1 - fx) + raw[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def normalize(raw: np.ndarray) -> Heatmap:
    """Min-max normalize to [0, 1]; constant maps normalize to all zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    low, high = raw.min(), raw.max()
    if high > low:
        values = (raw - low) / (high - low)
    else:
        values = np.zeros_like(raw)
    return Heatmap(np.clip(values, 0.0, 1.0))


def colorize(hm: Heatmap) -> np.ndarray:
    """Map heatmap values through the fixed colormap; returns (h, w, 3)."""
    v = hm.values
    out = np.zeros(v.shape + (3,))
    for (p0, c0), (p1, c1) in zip(COLORMAP_STOPS, COLORMAP_STOPS[1:]):
        mask = (v >= p0) & (v <= p1)
        t = np.zeros_like(v)
        t[mask] = (v[mask] - p0) / (p1 - p0)
        seg = (1 - t[:, :, None]) * np.array(c0) + t[:, :, None] * np.array(c1)
        out = np.where(mask[:, :, None], seg, out)
    return out


def render_overlay(img: RasterImage, hm: Heatmap, alpha: float) -> RasterImage:
    """Alpha-blend the colorized heatmap over the grayscale image."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if (hm.height, hm.width) != (img.height, img.width):
        raise ShapeError(
            f"heatmap {hm.height}x{hm.width} does not match image "
            f"{img.height}x{img.width}"
        )
    gray = to_grayscale(img).pixels  # (h, w, 1)
    base = np.repeat(gray, 3, axis=2)
    color = colorize(hm)
    blended = (1.0 - alpha) * base + alpha * color
    return RasterImage(np.clip(blended, 0.0, 1.0))


def heatmap_for_image(
    img: RasterImage, maps: FeatureMaps, class_weights: np.ndarray, alpha: float = 0.5
) -> tuple[Heatmap, RasterImage]:
    """Full chain: CAM, upscale to the image, normalize, overlay."""
    raw = compute_cam(maps, class_weights)
    scaled = upscale_bilinear(raw, img.width, img.height)
    hm = normalize(scaled)
    return hm, render_overlay(img, hm, alpha)
