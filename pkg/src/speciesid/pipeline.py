"""Experiment orchestration: stage sequencing, ablation ladders, artifacts.

Stages always run in the fixed order ingest -> rotation augment -> feature
extraction/loading -> pooling -> per-fold PCA -> CTV truncation -> SMOTE ->
standardize -> SVM -> evaluation; each stage consumes the previous stage's
output type, so reorderings are not expressible.  Outputs (`report.json`,
`table.txt`, `ctv_curve.csv`) carry no timestamps and rerunning an
unchanged config reproduces them byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import augment, classify, explain, reduce
from .config import PipelineConfig
from .dataset import (
    KIND_GAN,
    KIND_ORIGINAL,
    KIND_ROTATED,
    DatasetManifest,
    filter_min_count,
    load_manifest,
    plan_folds,
)
from .errors import ConfigError, SpeciesIdError, StageError
from .evaluate import EvalReport, cross_validate
from .features import (
    FeatureSource,
    FeatureTable,
    FeatureVector,
    global_average_pool,
    mock_extract,
    write_feature_table,
)
from .image import read_image, write_image
from .oversample import SmoteConfig, rebalance


def _ingest(cfg: PipelineConfig) -> DatasetManifest:
    try:
        manifest = load_manifest(cfg.manifest)
    except OSError as exc:
        raise StageError("ingest", f"cannot read manifest {cfg.manifest}: {exc}") from exc
    except SpeciesIdError as exc:
        raise StageError("ingest", str(exc)) from exc
    if cfg.min_per_class > 1:
        manifest = filter_min_count(manifest, cfg.min_per_class)
    _check_payloads(cfg, manifest)
    return manifest


def _check_payloads(cfg: PipelineConfig, manifest: DatasetManifest) -> None:
    feature_suffixes = (".fvec", ".csv")
    kinds = {
        rec.sample_id: (rec.payload or "").lower().endswith(feature_suffixes)
        for rec in manifest.records
        if rec.provenance.kind != KIND_ROTATED
    }
    if cfg.feature_source == "fvec" and not all(kinds.values()):
        raise ConfigError("feature_source=fvec but manifest contains image payloads")
    if cfg.feature_source == "mock" and any(kinds.values()):
        raise ConfigError("feature_source=mock but manifest contains feature payloads")
    if cfg.rotation and any(kinds.values()):
        raise ConfigError("rotation requires image payloads for every original")


def prepare_manifest(cfg: PipelineConfig) -> DatasetManifest:
    """Ingest plus (optional) rotation augmentation at the manifest level."""
    manifest = _ingest(cfg)
    if cfg.rotation and not manifest.of_kind(KIND_ROTATED):
        angles = augment.rotation_set(cfg.rotation_max_deg, cfg.rotation_step_deg)
        manifest = augment.augment_dataset(manifest, angles)
    return manifest


def run_experiment(cfg: PipelineConfig) -> EvalReport:
    """One configured experiment: ingest, augment, cross-validate."""
    manifest = prepare_manifest(cfg)
    plan = plan_folds(
        manifest,
        repeats=cfg.repeats,
        k=cfg.k,
        seed=cfg.seed,
        include_gan=cfg.gan_ingest and cfg.gan_in_folds,
    )
    return cross_validate(cfg, manifest, plan)


@dataclass(frozen=True)
class AblationRung:
    name: str
    report: EvalReport | None
    notice: str = ""


def run_ablation(cfg: PipelineConfig) -> list[AblationRung]:
    """Flag ladder with shared seeds: baseline, +rotation, +gan, +all+smote."""
    base_manifest = _ingest(cfg.with_overrides(rotation=False))
    has_images = not any(
        (rec.payload or "").lower().endswith((".fvec", ".csv"))
        for rec in base_manifest.records
    )
    has_gan = bool(base_manifest.of_kind(KIND_GAN))

    ladder = [
        ("baseline", {"rotation": False, "gan_ingest": False, "smote": False}),
        ("+rotation", {"rotation": True, "gan_ingest": False, "smote": False}),
        ("+gan", {"rotation": False, "gan_ingest": True, "smote": False}),
        (
            "+rotation+gan+smote",
            {"rotation": True, "gan_ingest": True, "smote": True},
        ),
    ]
    rungs: list[AblationRung] = []
    for name, flags in ladder:
        notice = ""
        flags = dict(flags)
        if flags["rotation"] and not has_images:
            if name == "+rotation":
                rungs.append(
                    AblationRung(name, None, "skipped: no image payloads to rotate")
                )
                continue
            flags["rotation"] = False
            notice = "rotation dropped: no image payloads"
        if flags["gan_ingest"] and not has_gan:
            if name == "+gan":
                rungs.append(
                    AblationRung(name, None, "skipped: manifest has no gan records")
                )
                continue
            flags["gan_ingest"] = False
            notice = (notice + "; " if notice else "") + "gan dropped: no gan records"
        report = run_experiment(cfg.with_overrides(**flags))
        rungs.append(AblationRung(name, report, notice))
    return rungs


def ablation_table(rungs: list[AblationRung]) -> str:
    """Aligned-text accuracy table with deltas against the baseline rung."""
    baseline = next((r.report for r in rungs if r.report is not None), None)
    header = f"{'Method':<24}{'Accuracy (%)':>14}{'CTV (%)':>9}{'Delta':>8}  Notes"
    lines = [header, "-" * len(header)]
    for rung in rungs:
        if rung.report is None:
            lines.append(f"{rung.name:<24}{'--':>14}{'--':>9}{'--':>8}  {rung.notice}")
            continue
        acc = 100.0 * rung.report.mean_accuracy
        delta = (
            "NA"
            if rung.report is baseline
            else f"{acc - 100.0 * baseline.mean_accuracy:+.2f}"
        )
        lines.append(
            f"{rung.name:<24}{acc:>14.2f}{rung.report.ctv_percent:>9}{delta:>8}"
            f"  {rung.notice}"
        )
    return "\n".join(lines) + "\n"


def report_table(report: EvalReport, method: str = "run") -> str:
    header = f"{'Method':<24}{'Accuracy (%)':>14}{'Std (%)':>9}{'CTV (%)':>9}"
    line = (
        f"{method:<24}{100.0 * report.mean_accuracy:>14.2f}"
        f"{100.0 * report.std_accuracy:>9.2f}{report.ctv_percent:>9}"
    )
    return "\n".join([header, "-" * len(header), line]) + "\n"


def ctv_curve_csv(report: EvalReport) -> str:
    lines = ["ctv_percent,retained_components,mean_accuracy"]
    for row in report.ctv_rows:
        lines.append(
            f"{row.ctv_percent},{row.retained_components},{row.mean_accuracy:.6f}"
        )
    return "\n".join(lines) + "\n"


def emit_run_artifacts(report: EvalReport, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out_dir / "report.json",
        "table": out_dir / "table.txt",
        "curve": out_dir / "ctv_curve.csv",
    }
    paths["report"].write_text(report.to_json(), encoding="utf-8")
    paths["table"].write_text(report_table(report), encoding="utf-8")
    paths["curve"].write_text(ctv_curve_csv(report), encoding="utf-8")
    return paths


def emit_ablation_artifacts(rungs: list[AblationRung], out_dir: str | Path):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "table.txt").write_text(ablation_table(rungs), encoding="utf-8")
    for rung in rungs:
        if rung.report is None:
            continue
        slug = rung.name.replace("+", "plus_")
        (out_dir / f"report_{slug}.json").write_text(
            rung.report.to_json(), encoding="utf-8"
        )
        (out_dir / f"ctv_curve_{slug}.csv").write_text(
            ctv_curve_csv(rung.report), encoding="utf-8"
        )


def extract_mock_features(cfg: PipelineConfig, out_path: str | Path) -> Path:
    """Run the deterministic extractor over every manifest record -> .fvec."""
    manifest = prepare_manifest(cfg)
    source = FeatureSource(base_dir=Path(cfg.manifest).parent, grid=cfg.mock_grid)
    table = source.table(manifest.records, manifest)
    out_path = Path(out_path)
    write_feature_table(table, out_path)
    return out_path


def render_heatmaps(
    cfg: PipelineConfig,
    out_dir: str | Path,
    sample_ids: list[str] | None = None,
    per_class: bool = False,
    alpha: float = 0.5,
    ctv_percent: int | None = None,
) -> list[Path]:
    """Train on the full manifest, then emit CAM overlays as PNGs.

    Per-sample maps use each sample's predicted class; per-class maps
    average the raw CAMs of the class's original images.
    """
    manifest = prepare_manifest(cfg)
    if any(
        (rec.payload or "").lower().endswith((".fvec", ".csv"))
        for rec in manifest.records
    ):
        raise StageError("heatmap", "heatmaps need image payloads")
    base_dir = Path(cfg.manifest).parent
    source = FeatureSource(base_dir=base_dir, grid=cfg.mock_grid)
    train_records = [
        r
        for r in manifest.records
        if r.provenance.kind != KIND_GAN or cfg.gan_ingest
    ]
    table = source.table(train_records, manifest)
    pca = reduce.fit_pca(table)
    ctv = ctv_percent if ctv_percent is not None else cfg.ctv_grid[0]
    n = reduce.components_for_ctv(pca, ctv)
    reduced = reduce.transform(pca, table, n)
    if cfg.smote:
        reduced = rebalance(
            reduced,
            SmoteConfig(cfg.smote_k, cfg.smote_target, cfg.seed),
            skip_small=cfg.smote_skip_small,
        )
    model = classify.train_multiclass(
        reduced, C=cfg.svm_c, tol=cfg.svm_tol, max_iter=cfg.svm_max_iter,
        n_classes=manifest.n_species,
    )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    originals = [r for r in manifest.records if r.provenance.kind == KIND_ORIGINAL]
    if sample_ids:
        wanted = set(sample_ids)
        originals = [r for r in originals if r.sample_id in wanted]
        if not originals:
            raise StageError("heatmap", f"no original records match {sample_ids}")
    written: list[Path] = []

    def raw_cam_for(record):
        path = Path(record.payload)
        img = read_image(path if path.is_absolute() else base_dir / path)
        maps = mock_extract(img, cfg.mock_grid)
        pooled = global_average_pool(maps, record.sample_id, record.label)
        score_row = reduce.transform(pca, FeatureTable((pooled,)), n)
        predicted = classify.predict(model, score_row.rows[0])
        weights = explain.cam_weights(model, pca, predicted.species_id)
        return img, explain.compute_cam(maps, weights), predicted

    if per_class:
        sums: dict[int, np.ndarray] = {}
        counts: dict[int, int] = {}
        any_img: dict[int, object] = {}
        for record in originals:
            img, raw, _ = raw_cam_for(record)
            sid = record.label.species_id
            sums[sid] = sums.get(sid, 0) + raw
            counts[sid] = counts.get(sid, 0) + 1
            any_img[sid] = img
        for sid in sorted(sums):
            img = any_img[sid]
            scaled = explain.upscale_bilinear(sums[sid] / counts[sid], img.width, img.height)
            hm = explain.normalize(scaled)
            overlay = explain.render_overlay(img, hm, alpha)
            path = out_dir / f"class_{manifest.species_names[sid]}.png"
            write_image(overlay, path)
            written.append(path)
    else:
        for record in originals:
            img, raw, _ = raw_cam_for(record)
            scaled = explain.upscale_bilinear(raw, img.width, img.height)
            hm = explain.normalize(scaled)
            overlay = explain.render_overlay(img, hm, alpha)
            path = out_dir / f"{record.sample_id}.png"
            write_image(overlay, path)
            written.append(path)
    return written
