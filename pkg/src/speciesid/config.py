"""Pipeline configuration: dataclass, key=value file parser, overrides.

Config files are flat ``key = value`` lines (TOML-style scalars): ``#``
starts a comment, booleans are ``true``/``false``, strings may be quoted,
integer lists are bracketed like ``ctv_grid = [10, 20, 30]``.  Every key
maps 1:1 onto a PipelineConfig field and can equally be given on the CLI
as ``--set key=value``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .reduce import CTV_GRID

FEATURE_SOURCES = ("auto", "mock", "fvec")


@dataclass(frozen=True)
class PipelineConfig:
    manifest: str
    out_dir: str = "out"
    feature_source: str = "auto"
    rotation: bool = False
    rotation_max_deg: float = 20.0
    rotation_step_deg: float = 5.0
    gan_ingest: bool = False
    gan_in_folds: bool = False
    smote: bool = False
    smote_k: int = 5
    smote_target: str | int = "match_majority"
    smote_skip_small: bool = True
    svm_c: float = 1.0
    svm_tol: float = 1e-2
    svm_max_iter: int = 5000
    ctv_grid: tuple[int, ...] = CTV_GRID
    pca_refit_per_fold: bool = True
    repeats: int = 10
    k: int = 2
    seed: int = 0
    min_per_class: int = 1
    mock_grid: int = 7
    parallel: int = 1

    def __post_init__(self):
        if not self.manifest:
            raise ConfigError("manifest path is required")
        if self.feature_source not in FEATURE_SOURCES:
            raise ConfigError(
                f"feature_source must be one of {FEATURE_SOURCES}, "
                f"got {self.feature_source!r}"
            )
        if self.feature_source == "fvec" and self.rotation:
            raise ConfigError(
                "rotation augmentation needs image payloads; it cannot be "
                "combined with feature_source = fvec"
            )
        grid = tuple(self.ctv_grid)
        if not grid or any(c not in CTV_GRID for c in grid) or list(grid) != sorted(grid):
            raise ConfigError(
                f"ctv_grid must be a sorted subset of {list(CTV_GRID)}, got {grid}"
            )
        object.__setattr__(self, "ctv_grid", grid)
        if self.repeats < 1 or self.k < 2:
            raise ConfigError("need repeats >= 1 and k >= 2")
        if self.rotation_step_deg <= 0 or self.rotation_max_deg <= 0:
            raise ConfigError("rotation parameters must be positive")
        if self.svm_c <= 0:
            raise ConfigError("svm_c must be positive")
        if self.parallel < 1:
            raise ConfigError("parallel must be >= 1")

    def echo(self) -> dict:
        """JSON-ready view of the configuration.

        Excludes ``parallel``: worker count is execution machinery, and
        serial/parallel runs must emit byte-identical reports.
        """
        out = asdict(self)
        out["ctv_grid"] = list(self.ctv_grid)
        del out["parallel"]
        return out

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)


_BOOL_WORDS = {"true": True, "false": False}


def _parse_scalar(raw: str):
    raw = raw.strip()
    if raw.lower() in _BOOL_WORDS:
        return _BOOL_WORDS[raw.lower()]
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        return tuple(int(v.strip()) for v in inner.split(",")) if inner else ()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        values[key.strip()] = _parse_scalar(raw)
    return values


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = parse_config_text(text, str(path))
    if overrides:
        values.update(overrides)
    return config_from_mapping(values)


def config_from_mapping(values: dict) -> PipelineConfig:
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
