import numpy as np
import pytest

from speciesid.dataset import (
    KIND_GAN,
    KIND_ORIGINAL,
    DatasetManifest,
    Provenance,
    SampleLabel,
    SampleRecord,
)
from speciesid.features import FeatureTable, FeatureVector


def make_manifest(class_counts, kinds=None, payload=None):
    """Manifest with the given per-class original counts (species_00, ...)."""
    records = []
    counter = 0
    for sid, count in enumerate(class_counts):
        label = SampleLabel(sid, f"species_{sid:02d}")
        for _ in range(count):
            records.append(
                SampleRecord(
                    sample_id=f"s{counter:04d}",
                    label=label,
                    payload=payload,
                    provenance=Provenance(KIND_ORIGINAL),
                )
            )
            counter += 1
    for sid, count in (kinds or {}).get(KIND_GAN, {}).items():
        label = SampleLabel(sid, f"species_{sid:02d}")
        for _ in range(count):
            records.append(
                SampleRecord(
                    sample_id=f"g{counter:04d}",
                    label=label,
                    payload=payload,
                    provenance=Provenance(KIND_GAN),
                )
            )
            counter += 1
    return DatasetManifest(tuple(records))


def make_table(points, species_ids, prefix="r"):
    """FeatureTable from a 2-D array of points and parallel class ids."""
    points = np.asarray(points, dtype=np.float64)
    rows = []
    for i, (values, sid) in enumerate(zip(points, species_ids)):
        rows.append(
            FeatureVector(
                values=np.atleast_1d(values),
                sample_id=f"{prefix}{i:04d}",
                label=SampleLabel(int(sid), f"species_{int(sid):02d}"),
            )
        )
    return FeatureTable(tuple(rows))


@pytest.fixture
def tiny_manifest():
    return make_manifest([3, 2, 4])
