"""SMOTE synthetic minority oversampling in the reduced feature space.

Classic interpolation SMOTE: each synthetic point sits on the segment
between a class row and one of its k nearest same-class neighbors.  Every
class draws from its own random stream seeded with ``seed XOR species_id``,
so per-class generation is order-independent and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import KIND_SMOTE, SampleLabel
from .errors import OversampleError
from .features import FeatureTable, FeatureVector
from .rng import Xoshiro256


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target: str | int = "match_majority"
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if isinstance(self.target, str) and self.target != "match_majority":
            raise ValueError(f"unknown target {self.target!r}")
        if isinstance(self.target, int) and self.target < 0:
            raise ValueError("fixed per-class target must be >= 0")


def knn_indices(
    table: FeatureTable, query_row: int, k: int, same_class_only: bool = False
) -> list[int]:
    """Row indices of the k nearest neighbors by Euclidean distance.

    The query row is excluded; distance ties break toward the lower row
    index.
    """
    query = table.rows[query_row]
    candidates = [
        i
        for i, row in enumerate(table.rows)
        if i != query_row
        and (not same_class_only or row.label.species_id == query.label.species_id)
    ]
    if k > len(candidates):
        raise OversampleError(
            f"need {k} neighbors but only {len(candidates)} eligible rows"
        )
    diffs = table.matrix[candidates] - query.values
    dists = np.einsum("ij,ij->i", diffs, diffs)
    order = np.argsort(dists, kind="stable")[:k]
    return [candidates[i] for i in order]


def smote_class(
    table: FeatureTable, species: SampleLabel, n_synthetic: int, cfg: SmoteConfig
) -> list[FeatureVector]:
    """Synthesize ``n_synthetic`` interpolated points for one class.

    Base rows cycle through the class in table order; for each, a neighbor
    is drawn uniformly among the k nearest same-class rows (k clamped to
    class size - 1 for tiny classes) and the interpolation coefficient is
    uniform in [0, 1].
    """
    class_rows = table.class_rows(species.species_id)
    if len(class_rows) < 2:
        raise OversampleError(
            f"class {species.species_name!r} has {len(class_rows)} row(s); "
            "cannot oversample"
        )
    if n_synthetic == 0:
        return []
    k = min(cfg.k_neighbors, len(class_rows) - 1)
    neighbors = {
        row: knn_indices(table, row, k, same_class_only=True) for row in class_rows
    }
    rng = Xoshiro256((cfg.seed ^ species.species_id) & 0xFFFFFFFFFFFFFFFF)
    synthetic = []
    for j in range(n_synthetic):
        base = class_rows[j % len(class_rows)]
        neighbor = neighbors[base][rng.randbelow(k)]
        u = rng.uniform01()
        x = table.rows[base].values
        values = x + u * (table.rows[neighbor].values - x)
        synthetic.append(
            FeatureVector(
                values=values,
                sample_id=f"{species.species_name}__smote{j}",
                label=species,
                provenance=KIND_SMOTE,
            )
        )
    return synthetic


def rebalance(
    table: FeatureTable, cfg: SmoteConfig, skip_small: bool = False
) -> FeatureTable:
    """Append synthetic rows until every class reaches the target count.

    ``match_majority`` lifts every class to the pre-call maximum count, so
    the largest class receives nothing.  Classes with fewer than 2 rows
    raise unless ``skip_small``.
    """
    ids = sorted({r.label.species_id for r in table.rows})
    labels = {r.label.species_id: r.label for r in table.rows}
    counts = {sid: len(table.class_rows(sid)) for sid in ids}
    target = max(counts.values()) if cfg.target == "match_majority" else cfg.target
    extra: list[FeatureVector] = []
    for sid in ids:
        n_synthetic = max(0, target - counts[sid])
        if counts[sid] < 2:
            if skip_small:
                continue
            raise OversampleError(
                f"class {labels[sid].species_name!r} has {counts[sid]} row(s); "
                "cannot oversample"
            )
        if n_synthetic:
            extra.extend(smote_class(table, labels[sid], n_synthetic, cfg))
    return FeatureTable(table.rows + tuple(extra))
