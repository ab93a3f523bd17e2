"""Principal component analysis and cumulative-trait-variation selection.

The model keeps the full decomposition (all input dimensions) so explained
ratios sum to one; truncation happens at transform time.  Component signs
follow the largest-coefficient-positive rule so scores are reproducible
across implementations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DatasetError, FormatError, ShapeError, SweepError
from .features import FeatureTable, FeatureVector

CTV_GRID = tuple(range(10, 101, 10))


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (d, d), rows = principal directions, eigenvalue desc
    eigenvalues: np.ndarray  # (d,), nonincreasing, >= 0
    explained_ratio: np.ndarray  # (d,), sums to 1 for non-degenerate data

    @property
    def input_dims(self) -> int:
        return self.mean.shape[0]

    def components_count(self) -> int:
        """Number of components with nonzero variance."""
        return max(1, int(np.sum(self.explained_ratio > 1e-12)))


def fit_pca(table: FeatureTable) -> PcaModel:
    """Eigendecomposition of the sample covariance (divisor n-1)."""
    if len(table) < 2:
        raise DatasetError(f"PCA needs >= 2 rows, got {len(table)}")
    x = table.matrix
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (len(table) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    components = eigvecs[:, order].T
    # fix signs: the largest-magnitude coefficient of each component is positive
    flip = components[np.arange(len(components)), np.argmax(np.abs(components), axis=1)]
    components = components * np.where(flip < 0, -1.0, 1.0)[:, None]
    total = eigvals.sum()
    ratios = eigvals / total if total > 0 else np.zeros_like(eigvals)
    return PcaModel(
        mean=mean, components=components, eigenvalues=eigvals, explained_ratio=ratios
    )


def transform(model: PcaModel, table: FeatureTable, n_components: int) -> FeatureTable:
    """Center rows by the model mean and project onto the leading components."""
    if table.dims != model.input_dims:
        raise ShapeError(
            f"table dims {table.dims} != model input dims {model.input_dims}"
        )
    if not 1 <= n_components <= model.components.shape[0]:
        raise ShapeError(f"n_components {n_components} out of range")
    basis = model.components[:n_components]
    scores = (table.matrix - model.mean) @ basis.T
    rows = tuple(
        FeatureVector(
            values=scores[i],
            sample_id=row.sample_id,
            label=row.label,
            provenance=row.provenance,
        )
        for i, row in enumerate(table.rows)
    )
    return FeatureTable(rows)


def inverse_transform(model: PcaModel, scores: np.ndarray, n_components: int) -> np.ndarray:
    return scores @ model.components[:n_components] + model.mean


def components_for_ctv(model: PcaModel, ctv_percent: float) -> int:
    """Smallest component count whose cumulative explained ratio reaches the CTV."""
    if not 0 < ctv_percent <= 100:
        raise ValueError(f"ctv_percent must be in (0, 100], got {ctv_percent}")
    cumulative = np.cumsum(model.explained_ratio)
    target = ctv_percent / 100.0 - 1e-12
    n = int(np.searchsorted(cumulative, target) + 1)
    return max(1, min(n, model.components_count()))


@dataclass(frozen=True)
class SweepEntry:
    ctv_percent: int
    retained_components: int
    mean_accuracy: float


@dataclass(frozen=True)
class CtvSweepResult:
    entries: tuple[SweepEntry, ...]

    def __post_init__(self):
        ctvs = [e.ctv_percent for e in self.entries]
        if any(c not in CTV_GRID for c in ctvs) or ctvs != sorted(ctvs):
            raise ValueError(f"sweep entries must follow the 10%-grid, got {ctvs}")

    @property
    def best(self) -> SweepEntry:
        return best_entry(self.entries)


def best_entry(entries) -> SweepEntry:
    """Maximal accuracy; ties go to the smaller CTV (fewer retained features)."""
    best = entries[0]
    for entry in entries[1:]:
        if entry.mean_accuracy > best.mean_accuracy:
            best = entry
    return best


def ctv_sweep(
    model: PcaModel,
    evaluate: Callable[[int], float],
    grid: tuple[int, ...] = CTV_GRID,
) -> CtvSweepResult:
    """Evaluate ``evaluate(retained_components)`` along the CTV grid.

    ``evaluate`` maps a retained dimensionality to a mean accuracy; callback
    failures propagate as SweepError carrying the offending grid point.
    """
    entries = []
    for ctv in grid:
        n = components_for_ctv(model, ctv)
        try:
            accuracy = float(evaluate(n))
        except Exception as exc:
            raise SweepError(ctv, f"evaluation failed at ctv={ctv}%: {exc}") from exc
        entries.append(SweepEntry(ctv, n, accuracy))
    return CtvSweepResult(tuple(entries))


_PCA_MAGIC = b"PCA1"


def save_pca(model: PcaModel, path: str | Path) -> None:
    d = model.input_dims
    payload = np.concatenate(
        [model.mean, model.eigenvalues, model.explained_ratio, model.components.ravel()]
    )
    Path(path).write_bytes(
        _PCA_MAGIC
        + struct.pack("<II", d, model.components.shape[0])
        + np.ascontiguousarray(payload, dtype="<f8").tobytes()
    )


def load_pca(path: str | Path) -> PcaModel:
    data = Path(path).read_bytes()
    if not data.startswith(_PCA_MAGIC):
        raise FormatError(f"{path}: missing PCA1 magic")
    d, n_comp = struct.unpack_from("<II", data, 4)
    expected = 12 + 8 * (3 * d + n_comp * d)
    if len(data) != expected or n_comp != d:
        raise FormatError(f"{path}: bad PCA payload size")
    payload = np.frombuffer(data[12:], dtype="<f8").astype(np.float64)
    mean, eigvals, ratios = payload[:d], payload[d : 2 * d], payload[2 * d : 3 * d]
    components = payload[3 * d :].reshape(n_comp, d)
    return PcaModel(
        mean=mean, components=components, eigenvalues=eigvals, explained_ratio=ratios
    )
