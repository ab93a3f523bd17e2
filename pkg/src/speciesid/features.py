"""Feature boundary: pooled descriptors, a deterministic extractor, and the
portable ``.fvec`` feature-file format.

``.fvec`` binary layout (little-endian throughout):

    magic  b"FVEC1\\n"
    u32    dims
    u32    row count
    per row:
        u16      sample_id byte length, then that many UTF-8 bytes
        u16      species_name byte length, then that many UTF-8 bytes
        dims*f64 feature values

Values are stored as 64-bit IEEE floats so cross-implementation
comparisons are exact.  A plain-CSV fallback with header
``sample_id,species_name,v0,...,v{dims-1}`` is accepted for ``.csv`` paths.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .dataset import KIND_ORIGINAL, KIND_ROTATED, SampleLabel
from .errors import FormatError, GeometryError, NumericError
from .image import RasterImage, read_image, to_grayscale

FVEC_MAGIC = b"FVEC1\n"

MOCK_STATS = ("mean", "std", "gradx", "grady", "edges4")


@dataclass(frozen=True)
class FeatureMaps:
    """C spatial activation maps of H x W."""

    values: np.ndarray  # (C, H, W)

    def __post_init__(self):
        v = self.values
        if v.ndim != 3 or min(v.shape) < 1:
            raise GeometryError(f"expected (C, H, W) maps, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise NumericError("feature maps must be finite")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    sample_id: str = ""
    label: SampleLabel | None = None
    provenance: str = KIND_ORIGINAL

    def __post_init__(self):
        if self.values.ndim != 1:
            raise GeometryError("feature vector must be 1-D")
        if not np.isfinite(self.values).all():
            raise NumericError(f"non-finite feature value in {self.sample_id!r}")

    @property
    def dims(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FeatureTable:
    rows: tuple[FeatureVector, ...] = field(repr=False)

    def __post_init__(self):
        if self.rows:
            dims = self.rows[0].dims
            for row in self.rows:
                if row.dims != dims:
                    raise FormatError(
                        f"row {row.sample_id!r} has {row.dims} dims, expected {dims}"
                    )
            ids = [r.sample_id for r in self.rows]
            if len(set(ids)) != len(ids):
                raise FormatError("duplicate sample_id in feature table")

    @property
    def dims(self) -> int:
        return self.rows[0].dims if self.rows else 0

    def __len__(self) -> int:
        return len(self.rows)

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.stack([r.values for r in self.rows]) if self.rows else np.zeros((0, 0))

    @cached_property
    def species_ids(self) -> np.ndarray:
        return np.array([r.label.species_id for r in self.rows], dtype=np.intp)

    def by_id(self, sample_id: str) -> FeatureVector:
        return {r.sample_id: r for r in self.rows}[sample_id]

    def class_rows(self, species_id: int) -> list[int]:
        return [i for i, r in enumerate(self.rows) if r.label.species_id == species_id]


def global_average_pool(
    maps: FeatureMaps, sample_id: str = "", label: SampleLabel | None = None
) -> FeatureVector:
    """Collapse each of the C maps to its arithmetic mean."""
    pooled = maps.values.mean(axis=(1, 2))
    return FeatureVector(values=pooled, sample_id=sample_id, label=label)


def mock_extract(
    img: RasterImage, grid: int = 7, stats: tuple[str, ...] = MOCK_STATS
) -> FeatureMaps:
    """Deterministic hand-crafted feature maps over a grid of image cells.

    Stand-in for a deep feature extractor so the pipeline can run with no
    learned weights: per cell it computes intensity mean and spread,
    horizontal/vertical gradient magnitudes, and a 4-bin oriented-edge
    histogram (8 maps with the default selector).  Same image in, same
    maps out, bit for bit.
    """
    if grid < 1:
        raise GeometryError("grid must be >= 1")
    unknown = set(stats) - set(MOCK_STATS)
    if unknown:
        raise ValueError(f"unknown stats {sorted(unknown)}; choose from {MOCK_STATS}")
    gray = to_grayscale(img).pixels[:, :, 0]
    h, w = gray.shape
    if h < grid or w < grid:
        raise GeometryError(f"image {h}x{w} smaller than grid {grid}")

    gy, gx = np.gradient(gray)
    magnitude = np.hypot(gx, gy)
    orient = np.mod(np.arctan2(gy, gx), np.pi)
    edge_bin = np.minimum((orient / (np.pi / 4.0)).astype(np.intp), 3)

    row_edges = [h * i // grid for i in range(grid + 1)]
    col_edges = [w * i // grid for i in range(grid + 1)]
    maps: dict[str, np.ndarray] = {
        name: np.zeros((grid, grid)) for name in ("mean", "std", "gradx", "grady")
    }
    edges = np.zeros((4, grid, grid))
    for i in range(grid):
        for j in range(grid):
            rs, re = row_edges[i], row_edges[i + 1]
            cs, ce = col_edges[j], col_edges[j + 1]
            cell = gray[rs:re, cs:ce]
            maps["mean"][i, j] = cell.mean()
            maps["std"][i, j] = cell.std()
            maps["gradx"][i, j] = np.abs(gx[rs:re, cs:ce]).mean()
            maps["grady"][i, j] = np.abs(gy[rs:re, cs:ce]).mean()
            cell_mag = magnitude[rs:re, cs:ce]
            cell_bin = edge_bin[rs:re, cs:ce]
            for b in range(4):
                edges[b, i, j] = cell_mag[cell_bin == b].sum() / cell.size

    stack = []
    for name in stats:
        if name == "edges4":
            stack.extend(edges)
        else:
            stack.append(maps[name])
    return FeatureMaps(np.stack(stack))


class FeatureSource:
    """Resolves manifest records to pooled feature vectors.

    Image payloads go through the deterministic extractor (rotated records
    load their parent image and rotate in memory); ``.fvec``/``.csv``
    payloads are looked up by sample id in the referenced feature file.
    Files and images are cached per source instance.
    """

    def __init__(self, base_dir: str | Path = ".", grid: int = 7,
                 stats: tuple[str, ...] = MOCK_STATS):
        self.base_dir = Path(base_dir)
        self.grid = grid
        self.stats = stats
        self._tables: dict[Path, FeatureTable] = {}
        self._images: dict[Path, RasterImage] = {}
        self._vectors: dict[str, FeatureVector] = {}

    def _resolve(self, payload: str) -> Path:
        path = Path(payload)
        return path if path.is_absolute() else self.base_dir / path

    def _table(self, path: Path) -> FeatureTable:
        if path not in self._tables:
            self._tables[path] = read_feature_table(path)
        return self._tables[path]

    def _image(self, path: Path) -> RasterImage:
        if path not in self._images:
            self._images[path] = read_image(path)
        return self._images[path]

    def vector(self, record, manifest) -> FeatureVector:
        """Feature vector for one SampleRecord, labeled from the manifest."""
        cached = self._vectors.get(record.sample_id)
        if cached is not None:
            return cached
        out = self._compute_vector(record, manifest)
        self._vectors[record.sample_id] = out
        return out

    def _compute_vector(self, record, manifest) -> FeatureVector:
        from .augment import rotate_image

        if record.provenance.kind == KIND_ROTATED:
            parent = manifest.by_id(record.parent_id)
            path = self._resolve(parent.payload)
            if path.suffix.lower() in (".fvec", ".csv"):
                raise FormatError(
                    f"{record.sample_id}: cannot rotate a feature-record payload"
                )
            img = rotate_image(self._image(path), record.provenance.angle_deg)
            maps = mock_extract(img, self.grid, self.stats)
            pooled = global_average_pool(maps, record.sample_id, record.label)
        else:
            path = self._resolve(record.payload)
            if path.suffix.lower() in (".fvec", ".csv"):
                stored = self._table(path).by_id(record.sample_id)
                pooled = FeatureVector(
                    values=stored.values,
                    sample_id=record.sample_id,
                    label=record.label,
                )
            else:
                maps = mock_extract(self._image(path), self.grid, self.stats)
                pooled = global_average_pool(maps, record.sample_id, record.label)
        return FeatureVector(
            values=pooled.values,
            sample_id=record.sample_id,
            label=record.label,
            provenance=record.provenance.kind,
        )

    def table(self, records, manifest) -> FeatureTable:
        return FeatureTable(tuple(self.vector(r, manifest) for r in records))


def write_feature_table(table: FeatureTable, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        _write_csv(table, path)
        return
    parts = [FVEC_MAGIC, struct.pack("<II", table.dims, len(table))]
    for row in table.rows:
        sid = row.sample_id.encode("utf-8")
        name = (row.label.species_name if row.label else "").encode("utf-8")
        parts.append(struct.pack("<H", len(sid)))
        parts.append(sid)
        parts.append(struct.pack("<H", len(name)))
        parts.append(name)
        parts.append(np.ascontiguousarray(row.values, dtype="<f8").tobytes())
    path.write_bytes(b"".join(parts))


def read_feature_table(path: str | Path) -> FeatureTable:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _read_csv(path)
    data = path.read_bytes()
    if len(data) < len(FVEC_MAGIC) + 8 or not data.startswith(FVEC_MAGIC):
        raise FormatError(f"{path}: missing FVEC1 magic")
    pos = len(FVEC_MAGIC)
    dims, n_rows = struct.unpack_from("<II", data, pos)
    pos += 8
    species_ids: dict[str, int] = {}
    rows: list[FeatureVector] = []
    for i in range(n_rows):
        try:
            (id_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            sample_id = data[pos : pos + id_len].decode("utf-8")
            pos += id_len
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            species_name = data[pos : pos + name_len].decode("utf-8")
            pos += name_len
        except struct.error:
            raise FormatError(f"{path}: truncated at row {i}") from None
        end = pos + dims * 8
        if end > len(data):
            raise FormatError(f"{path}: truncated values at row {i}")
        values = np.frombuffer(data[pos:end], dtype="<f8").astype(np.float64)
        pos = end
        if not np.isfinite(values).all():
            raise NumericError(f"{path}: non-finite value in row {sample_id!r}")
        sid = species_ids.setdefault(species_name, len(species_ids))
        rows.append(
            FeatureVector(
                values=values,
                sample_id=sample_id,
                label=SampleLabel(sid, species_name),
            )
        )
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    return FeatureTable(tuple(rows))


def _write_csv(table: FeatureTable, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sample_id", "species_name"] + [f"v{i}" for i in range(table.dims)]
        )
        for row in table.rows:
            name = row.label.species_name if row.label else ""
            writer.writerow([row.sample_id, name] + [repr(float(v)) for v in row.values])


def _read_csv(path: Path) -> FeatureTable:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty feature CSV") from None
        if header[:2] != ["sample_id", "species_name"]:
            raise FormatError(f"{path}: bad feature CSV header")
        dims = len(header) - 2
        species_ids: dict[str, int] = {}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dims + 2:
                raise FormatError(f"{path}:{lineno}: expected {dims + 2} fields")
            try:
                values = np.array([float(v) for v in row[2:]])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric value") from None
            if not np.isfinite(values).all():
                raise NumericError(f"{path}:{lineno}: non-finite value")
            sid = species_ids.setdefault(row[1], len(species_ids))
            rows.append(
                FeatureVector(
                    values=values,
                    sample_id=row[0],
                    label=SampleLabel(sid, row[1]),
                )
            )
    return FeatureTable(tuple(rows))
