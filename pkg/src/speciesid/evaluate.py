"""Accuracy metric, confusion accounting, and the repeated stratified
cross-validation harness.

Per split the harness assembles the training set (train-fold originals,
their rotated children, opted-in GAN records), extracts or loads features,
fits PCA on the training rows only, truncates at the configured CTV,
optionally SMOTE-rebalances, standardizes, trains the SVM, and scores the
test-fold originals.  Test samples are never augmented, oversampled or
used for PCA/standardizer fitting; the harness asserts this structurally
on every split and records which samples each stage touched.

All per-split randomness derives from (master seed, repeat, fold), so the
serial and parallel paths produce byte-identical reports.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classify, reduce
from .config import PipelineConfig
from .dataset import (
    KIND_GAN,
    KIND_ORIGINAL,
    KIND_ROTATED,
    DatasetManifest,
    FoldPlan,
    SampleLabel,
)
from .errors import ShapeError, StageError
from .features import FeatureSource, FeatureTable
from .oversample import SmoteConfig, rebalance
from .rng import derive_seed


def accuracy(truth, predicted) -> float:
    """Fraction of positions where prediction equals truth."""
    t = _as_ids(truth)
    p = _as_ids(predicted)
    if len(t) != len(p):
        raise ShapeError(f"length mismatch: {len(t)} truth vs {len(p)} predicted")
    if len(t) == 0:
        raise ShapeError("accuracy needs at least one sample")
    return float(np.mean(t == p))


def _as_ids(seq) -> np.ndarray:
    return np.array(
        [v.species_id if isinstance(v, SampleLabel) else int(v) for v in seq],
        dtype=np.intp,
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # (S, S): rows = truth, columns = predicted

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def per_class(self, species_id: int) -> dict[str, int]:
        tp = int(self.counts[species_id, species_id])
        fn = int(self.counts[species_id].sum()) - tp
        fp = int(self.counts[:, species_id].sum()) - tp
        tn = self.total - tp - fn - fp
        return {"tp": tp, "tn": tn, "fp": fp, "fn": fn}

    def accuracy_from_counts(self) -> float:
        """(TP + TN) / (TP + TN + FP + FN) seen as multiclass micro accuracy."""
        return float(np.trace(self.counts) / self.total)


def confusion_matrix(truth, predicted, labels: tuple[str, ...]) -> ConfusionMatrix:
    t, p = _as_ids(truth), _as_ids(predicted)
    if len(t) != len(p):
        raise ShapeError("length mismatch")
    s = len(labels)
    counts = np.zeros((s, s), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(labels=labels, counts=counts)


@dataclass(frozen=True)
class SplitResult:
    repeat: int
    fold: int
    ctv_percent: int
    retained_components: int
    accuracy: float
    n_train: int
    n_test: int
    confusion: np.ndarray = field(repr=False)
    stage_samples: dict = field(repr=False)
    converged: bool = True


@dataclass(frozen=True)
class EvalReport:
    config: dict
    ctv_percent: int
    splits: tuple[SplitResult, ...]
    ctv_rows: tuple[reduce.SweepEntry, ...]
    labels: tuple[str, ...]

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([s.accuracy for s in self.splits])

    @property
    def mean_accuracy(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std_accuracy(self) -> float:
        return float(self.accuracies.std())

    @property
    def retained_components(self) -> int:
        for row in self.ctv_rows:
            if row.ctv_percent == self.ctv_percent:
                return row.retained_components
        return self.splits[0].retained_components

    @property
    def n_convergence_warnings(self) -> int:
        return sum(1 for s in self.splits if not s.converged)

    def total_confusion(self) -> ConfusionMatrix:
        counts = np.zeros((len(self.labels), len(self.labels)), dtype=np.int64)
        for s in self.splits:
            counts += s.confusion
        return ConfusionMatrix(labels=self.labels, counts=counts)

    def to_dict(self) -> dict:
        confusion = self.total_confusion()
        return {
            "config": self.config,
            "ctv_percent": self.ctv_percent,
            "retained_components": self.retained_components,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "splits": [
                {
                    "repeat": s.repeat,
                    "fold": s.fold,
                    "accuracy": s.accuracy,
                    "n_train": s.n_train,
                    "n_test": s.n_test,
                    "retained_components": s.retained_components,
                    "converged": s.converged,
                }
                for s in self.splits
            ],
            "ctv_rows": [
                {
                    "ctv_percent": e.ctv_percent,
                    "retained_components": e.retained_components,
                    "mean_accuracy": e.mean_accuracy,
                }
                for e in self.ctv_rows
            ],
            "confusion": {
                "labels": list(self.labels),
                "matrix": confusion.counts.tolist(),
                "per_class": {
                    name: confusion.per_class(i) for i, name in enumerate(self.labels)
                },
            },
            "convergence_warnings": self.n_convergence_warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _split_records(cfg: PipelineConfig, manifest: DatasetManifest, plan: FoldPlan,
                   repeat: int, fold: int):
    """Train/test record lists for one split, in manifest order."""
    index = {rec.sample_id: i for i, rec in enumerate(manifest.records)}
    test_ids = set(plan.test_ids(repeat, fold))
    train_ids = set(plan.train_ids(repeat, fold))

    test_records = [
        rec
        for rec in manifest.records
        if rec.sample_id in test_ids and rec.provenance.kind == KIND_ORIGINAL
    ]
    train_records = []
    for rec in manifest.records:
        kind = rec.provenance.kind
        if kind == KIND_ORIGINAL and rec.sample_id in train_ids:
            train_records.append(rec)
        elif kind == KIND_ROTATED and rec.parent_id in train_ids:
            train_records.append(rec)
        elif kind == KIND_GAN and cfg.gan_ingest:
            if cfg.gan_in_folds:
                if rec.sample_id in train_ids:
                    train_records.append(rec)
            else:
                train_records.append(rec)
    train_records.sort(key=lambda r: index[r.sample_id])
    test_records.sort(key=lambda r: index[r.sample_id])
    return train_records, test_records


def _evaluate_split(cfg: PipelineConfig, manifest: DatasetManifest, plan: FoldPlan,
                    source: FeatureSource, repeat: int, fold: int,
                    global_pca: reduce.PcaModel | None):
    train_records, test_records = _split_records(cfg, manifest, plan, repeat, fold)
    test_id_set = {r.sample_id for r in test_records}

    # structural leakage guard: the training assembly must be disjoint from
    # the test fold, and test rows must all be first-hand samples
    touched_parents = {r.parent_id for r in train_records if r.parent_id}
    if any(r.sample_id in test_id_set or (r.parent_id in test_id_set) for r in train_records):
        raise StageError("assemble", f"test sample leaked into split {repeat}/{fold}")
    if any(r.provenance.kind != KIND_ORIGINAL for r in test_records):
        raise StageError("assemble", "non-original record in a test fold")

    train_table = source.table(train_records, manifest)
    test_table = source.table(test_records, manifest)

    pca = global_pca if global_pca is not None else reduce.fit_pca(train_table)
    stage_samples = {
        "augment": tuple(sorted(touched_parents)),
        "train_assembly": tuple(r.sample_id for r in train_records),
        "pca_fit": tuple(r.sample_id for r in train_table.rows)
        if global_pca is None
        else ("<global>",),
        "test_predict": tuple(r.sample_id for r in test_records),
    }

    per_ctv = {}
    for ctv in cfg.ctv_grid:
        n = reduce.components_for_ctv(pca, ctv)
        train_r = reduce.transform(pca, train_table, n)
        test_r = reduce.transform(pca, test_table, n)
        if cfg.smote:
            smote_cfg = SmoteConfig(
                k_neighbors=cfg.smote_k,
                target=cfg.smote_target,
                seed=derive_seed(cfg.seed, repeat, fold, ctv),
            )
            train_r = rebalance(train_r, smote_cfg, skip_small=cfg.smote_skip_small)
        model = classify.train_multiclass(
            train_r,
            C=cfg.svm_c,
            tol=cfg.svm_tol,
            max_iter=cfg.svm_max_iter,
            n_classes=manifest.n_species,
        )
        predictions = [classify.predict(model, row) for row in test_r.rows]
        truth = [row.label for row in test_r.rows]
        confusion = confusion_matrix(truth, predictions, manifest.species_names)
        per_ctv[ctv] = SplitResult(
            repeat=repeat,
            fold=fold,
            ctv_percent=ctv,
            retained_components=n,
            accuracy=accuracy(truth, predictions),
            n_train=len(train_r),
            n_test=len(test_r),
            confusion=confusion.counts,
            stage_samples={
                **stage_samples,
                "smote_input": tuple(r.sample_id for r in train_table.rows)
                if cfg.smote
                else (),
                "standardizer_fit": tuple(r.sample_id for r in train_table.rows),
            },
            converged=model.converged,
        )
    return per_ctv


def cross_validate(
    cfg: PipelineConfig, manifest: DatasetManifest, plan: FoldPlan
) -> EvalReport:
    """Run every (repeat, fold) split across the configured CTV grid.

    PCA is fit once per split and shared by all CTV truncations; the
    reported splits are those of the best grid point (maximal mean
    accuracy, ties to the smaller CTV).
    """
    base_dir = Path(cfg.manifest).parent if cfg.manifest else Path(".")
    source = FeatureSource(base_dir=base_dir, grid=cfg.mock_grid)

    global_pca = None
    if not cfg.pca_refit_per_fold:
        all_train_kinds = {KIND_ORIGINAL, KIND_ROTATED} | (
            {KIND_GAN} if cfg.gan_ingest else set()
        )
        records = [r for r in manifest.records if r.provenance.kind in all_train_kinds]
        global_pca = reduce.fit_pca(source.table(records, manifest))

    pairs = list(plan.splits())
    if cfg.parallel > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallel) as pool:
            results = list(
                pool.map(
                    lambda rf: _evaluate_split(
                        cfg, manifest, plan, source, rf[0], rf[1], global_pca
                    ),
                    pairs,
                )
            )
    else:
        results = [
            _evaluate_split(cfg, manifest, plan, source, r, f, global_pca)
            for r, f in pairs
        ]
    if not results:
        raise StageError("evaluate", "no splits were evaluated")

    ctv_rows = []
    for ctv in cfg.ctv_grid:
        split_results = [res[ctv] for res in results]
        mean_acc = float(np.mean([s.accuracy for s in split_results]))
        retained = int(round(float(np.mean([s.retained_components for s in split_results]))))
        ctv_rows.append(reduce.SweepEntry(ctv, retained, mean_acc))
    best = reduce.best_entry(ctv_rows)
    return EvalReport(
        config=cfg.echo(),
        ctv_percent=best.ctv_percent,
        splits=tuple(res[best.ctv_percent] for res in results),
        ctv_rows=tuple(ctv_rows),
        labels=manifest.species_names,
    )
