"""Raster image container and PNG / binary-PGM I/O.

Pixels are float64 intensities in [0, 1], shaped (height, width, channels)
with 1 (gray) or 3 (RGB) channels.  Grayscale conversion uses the fixed
luma weights 0.299 / 0.587 / 0.114.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage

from .errors import FormatError, GeometryError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class RasterImage:
    pixels: np.ndarray  # (h, w, c) float64 in [0, 1]

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise GeometryError(f"expected (h, w, 1|3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise GeometryError("image must be at least 1x1")
        if not np.isfinite(px).all():
            raise GeometryError("pixel values must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise GeometryError("pixel values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def to_grayscale(img: RasterImage) -> RasterImage:
    if img.channels == 1:
        return img
    gray = np.clip(img.pixels @ LUMA_WEIGHTS, 0.0, 1.0)
    return RasterImage(gray[:, :, None])


def from_array(arr: np.ndarray) -> RasterImage:
    """Wrap a (h, w) or (h, w, c) float array, clipping to [0, 1]."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return RasterImage(np.clip(arr, 0.0, 1.0))


def read_image(path: str | Path) -> RasterImage:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return _read_pgm(path)
    with _PILImage.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if im.mode in ("P", "RGBA", "CMYK") else "L")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return RasterImage(arr)


def write_image(img: RasterImage, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        _write_pgm(img, path)
        return
    arr = np.rint(img.pixels * 255.0).astype(np.uint8)
    if img.channels == 1:
        _PILImage.fromarray(arr[:, :, 0], mode="L").save(path)
    else:
        _PILImage.fromarray(arr, mode="RGB").save(path)


def _read_pgm(path: Path) -> RasterImage:
    data = path.read_bytes()
    # P5 header: magic, width, height, maxval, separated by whitespace
    # (comment lines starting with '#' allowed), then one raster byte/pixel.
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos > start:
            fields.append(data[start:pos])
    if len(fields) < 4 or fields[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    except ValueError:
        raise FormatError(f"{path}: bad PGM header") from None
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise FormatError(f"{path}: truncated PGM raster")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return RasterImage(arr.astype(np.float64)[:, :, None] / 255.0)


def _write_pgm(img: RasterImage, path: Path) -> None:
    gray = to_grayscale(img)
    arr = np.rint(gray.pixels[:, :, 0] * 255.0).astype(np.uint8)
    header = f"P5\n{gray.width} {gray.height}\n255\n".encode("ascii")
    path.write_bytes(header + arr.tobytes())
