"""Few-sample species identification pipeline.

Library surface: dataset manifests and fold planning, rotation-only image
augmentation, pooled feature descriptors with a portable file format, PCA
with cumulative-trait-variation selection, SMOTE oversampling, a squared
hinge linear SVM, a repeated stratified cross-validation harness, and CAM
heatmaps.  See the README for file formats and the CLI.
"""

from .augment import augment_dataset, rotate_image, rotation_set
from .classify import SvmModel, objective, predict, train_binary, train_multiclass
from .config import PipelineConfig, load_config
from .dataset import (
    DatasetManifest,
    FoldPlan,
    SampleLabel,
    SampleRecord,
    filter_min_count,
    load_manifest,
    plan_folds,
)
from .evaluate import EvalReport, accuracy, confusion_matrix, cross_validate
from .explain import Heatmap, compute_cam, render_overlay, upscale_bilinear
from .features import (
    FeatureMaps,
    FeatureTable,
    FeatureVector,
    global_average_pool,
    mock_extract,
    read_feature_table,
    write_feature_table,
)
from .image import RasterImage, read_image, write_image
from .oversample import SmoteConfig, knn_indices, rebalance, smote_class
from .pipeline import run_ablation, run_experiment
from .reduce import (
    CtvSweepResult,
    PcaModel,
    components_for_ctv,
    ctv_sweep,
    fit_pca,
    transform,
)

__version__ = "0.1.0"
