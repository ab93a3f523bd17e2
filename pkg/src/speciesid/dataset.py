"""Sample catalog: labels, provenance, manifest I/O and fold planning.

The manifest is a UTF-8 CSV with the exact header

    sample_id,species_name,kind,path,parent_id,angle_deg

where ``kind`` is ``original``, ``rotated`` or ``gan`` and ``path`` points
at a PNG/PGM image or at a ``.fvec`` feature file holding a row for the
sample.  Rotated rows must name an original parent and a rotation angle;
GAN rows are extra train-only material unless fold planning is told
otherwise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .errors import DatasetError, ManifestError
from .rng import Xoshiro256, derive_seed

MANIFEST_HEADER = ["sample_id", "species_name", "kind", "path", "parent_id", "angle_deg"]

KIND_ORIGINAL = "original"
KIND_ROTATED = "rotated"
KIND_GAN = "gan_ingested"
KIND_SMOTE = "smote_synthetic"

_CSV_KINDS = {"original": KIND_ORIGINAL, "rotated": KIND_ROTATED, "gan": KIND_GAN}


@dataclass(frozen=True)
class SampleLabel:
    species_id: int
    species_name: str


@dataclass(frozen=True)
class Provenance:
    kind: str
    angle_deg: float | None = None

    def __post_init__(self):
        if self.kind not in (KIND_ORIGINAL, KIND_ROTATED, KIND_GAN, KIND_SMOTE):
            raise ManifestError(f"unknown provenance kind {self.kind!r}")
        if self.kind == KIND_ROTATED and self.angle_deg is None:
            raise ManifestError("rotated provenance requires an angle")


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    label: SampleLabel
    payload: str | None
    provenance: Provenance
    parent_id: str | None = None

    @property
    def is_original(self) -> bool:
        return self.provenance.kind == KIND_ORIGINAL


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered record list with dense species ids (first-appearance order)."""

    records: tuple[SampleRecord, ...]

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.sample_id in seen:
                raise ManifestError(f"duplicate sample_id {rec.sample_id!r}")
            seen.add(rec.sample_id)
        ids = [r.label.species_id for r in self.records]
        if ids and sorted(set(ids)) != list(range(max(ids) + 1)):
            raise ManifestError("species ids are not dense")
        for sid, count in self.class_counts.items():
            if count == 0:
                raise ManifestError(
                    f"species {self.species_names[sid]!r} has no original records"
                )
        by_id = {r.sample_id: r for r in self.records}
        for rec in self.records:
            if rec.provenance.kind == KIND_ROTATED:
                parent = by_id.get(rec.parent_id)
                if parent is None or not parent.is_original:
                    raise ManifestError(
                        f"rotated record {rec.sample_id!r} lacks an original parent"
                    )

    @cached_property
    def species_names(self) -> tuple[str, ...]:
        names: dict[int, str] = {}
        for rec in self.records:
            names.setdefault(rec.label.species_id, rec.label.species_name)
        return tuple(names[i] for i in range(len(names)))

    @cached_property
    def class_counts(self) -> dict[int, int]:
        """Original-record count per species id."""
        counts = {r.label.species_id: 0 for r in self.records}
        for rec in self.records:
            if rec.is_original:
                counts[rec.label.species_id] += 1
        return counts

    @property
    def n_species(self) -> int:
        return len(self.species_names)

    def by_id(self, sample_id: str) -> SampleRecord:
        return {r.sample_id: r for r in self.records}[sample_id]

    def of_kind(self, kind: str) -> list[SampleRecord]:
        return [r for r in self.records if r.provenance.kind == kind]

    def children_of(self, parent_id: str) -> list[SampleRecord]:
        return [r for r in self.records if r.parent_id == parent_id]

    def counts_by_kind(self) -> dict[str, dict[int, int]]:
        """Per-provenance, per-species record counts (Table-style reporting)."""
        out: dict[str, dict[int, int]] = {}
        for rec in self.records:
            per = out.setdefault(rec.provenance.kind, {})
            per[rec.label.species_id] = per.get(rec.label.species_id, 0) + 1
        return out


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse a manifest CSV, assigning species ids in first-appearance order."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest") from None
        if [h.strip() for h in header] != MANIFEST_HEADER:
            raise ManifestError(
                f"{path}:1: bad header {header!r}, expected {','.join(MANIFEST_HEADER)}"
            )
        species_ids: dict[str, int] = {}
        records: list[SampleRecord] = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ManifestError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            sample_id, species_name, kind, payload, parent_id, angle = (
                v.strip() for v in row
            )
            if not sample_id or not species_name:
                raise ManifestError(f"{path}:{lineno}: empty sample_id or species_name")
            if sample_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate sample_id {sample_id!r}")
            seen.add(sample_id)
            if kind not in _CSV_KINDS:
                raise ManifestError(f"{path}:{lineno}: unknown kind {kind!r}")
            prov_kind = _CSV_KINDS[kind]
            if prov_kind == KIND_ROTATED:
                if not parent_id:
                    raise ManifestError(f"{path}:{lineno}: rotated row needs parent_id")
                try:
                    angle_deg = float(angle)
                except ValueError:
                    raise ManifestError(
                        f"{path}:{lineno}: bad angle_deg {angle!r}"
                    ) from None
                provenance = Provenance(KIND_ROTATED, angle_deg)
            else:
                if parent_id or angle:
                    raise ManifestError(
                        f"{path}:{lineno}: parent_id/angle_deg only valid on rotated rows"
                    )
                provenance = Provenance(prov_kind)
                parent_id = ""
            sid = species_ids.setdefault(species_name, len(species_ids))
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    label=SampleLabel(sid, species_name),
                    payload=payload or None,
                    provenance=provenance,
                    parent_id=parent_id or None,
                )
            )
    if not records:
        raise ManifestError(f"{path}: manifest has no data rows")
    return DatasetManifest(tuple(records))


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        reverse = {v: k for k, v in _CSV_KINDS.items()}
        for rec in manifest.records:
            if rec.provenance.kind == KIND_SMOTE:
                continue  # SMOTE rows exist only in feature space
            angle = "" if rec.provenance.angle_deg is None else repr(rec.provenance.angle_deg)
            writer.writerow(
                [
                    rec.sample_id,
                    rec.label.species_name,
                    reverse[rec.provenance.kind],
                    rec.payload or "",
                    rec.parent_id or "",
                    angle,
                ]
            )


def filter_min_count(manifest: DatasetManifest, min_per_class: int) -> DatasetManifest:
    """Drop species with fewer than ``min_per_class`` originals; re-densify ids."""
    if min_per_class < 1:
        raise ValueError("min_per_class must be >= 1")
    keep = {
        sid for sid, count in manifest.class_counts.items() if count >= min_per_class
    }
    if len(keep) < 2:
        raise DatasetError(
            f"filtering at min_per_class={min_per_class} leaves "
            f"{len(keep)} species; need at least 2"
        )
    new_ids: dict[int, int] = {}
    records = []
    for rec in manifest.records:
        if rec.label.species_id not in keep:
            continue
        nid = new_ids.setdefault(rec.label.species_id, len(new_ids))
        records.append(
            SampleRecord(
                sample_id=rec.sample_id,
                label=SampleLabel(nid, rec.label.species_name),
                payload=rec.payload,
                provenance=rec.provenance,
                parent_id=rec.parent_id,
            )
        )
    return DatasetManifest(tuple(records))


@dataclass(frozen=True)
class FoldPlan:
    """Per-repeat fold assignment of eligible (original / opted-in GAN) samples."""

    repeats: int
    k: int
    seed: int
    assignments: tuple[dict[str, int], ...] = field(repr=False)

    def test_ids(self, repeat: int, fold: int) -> list[str]:
        return [s for s, f in self.assignments[repeat].items() if f == fold]

    def train_ids(self, repeat: int, fold: int) -> list[str]:
        return [s for s, f in self.assignments[repeat].items() if f != fold]

    def splits(self):
        """Yield (repeat, fold) pairs in evaluation order."""
        for repeat in range(self.repeats):
            for fold in range(self.k):
                yield repeat, fold


def plan_folds(
    manifest: DatasetManifest,
    repeats: int = 10,
    k: int = 2,
    seed: int = 0,
    include_gan: bool = False,
) -> FoldPlan:
    """Stratified fold assignment: per class, seeded shuffle then round-robin deal.

    Only originals (plus GAN records when ``include_gan``) receive folds;
    rotated children always follow their parent at evaluation time so an
    original and its rotations cannot straddle the train/test boundary.
    Identical inputs and seed give bit-identical assignments.
    """
    if repeats < 1 or k < 2:
        raise ValueError("need repeats >= 1 and k >= 2")
    for sid, count in manifest.class_counts.items():
        if count < k:
            raise DatasetError(
                f"class {manifest.species_names[sid]!r} has {count} original "
                f"samples, cannot stratify into {k} folds"
            )
    eligible_kinds = {KIND_ORIGINAL, KIND_GAN} if include_gan else {KIND_ORIGINAL}
    per_class: dict[int, list[str]] = {i: [] for i in range(manifest.n_species)}
    for rec in manifest.records:
        if rec.provenance.kind in eligible_kinds:
            per_class[rec.label.species_id].append(rec.sample_id)
    assignments = []
    for repeat in range(repeats):
        rng = Xoshiro256(derive_seed(seed, repeat))
        folds: dict[str, int] = {}
        for sid in range(manifest.n_species):
            ids = list(per_class[sid])
            rng.shuffle(ids)
            for i, sample_id in enumerate(ids):
                folds[sample_id] = i % k
        assignments.append(folds)
    return FoldPlan(repeats=repeats, k=k, seed=seed, assignments=tuple(assignments))
