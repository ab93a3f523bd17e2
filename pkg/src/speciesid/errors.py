"""Exception types shared across the pipeline."""

from __future__ import annotations


class SpeciesIdError(Exception):
    """Base class for all pipeline errors."""


class ManifestError(SpeciesIdError):
    """Malformed manifest row, duplicate id, or orphaned record."""


class DatasetError(SpeciesIdError):
    """Dataset unusable: too few species, class too small to stratify, ..."""


class GeometryError(SpeciesIdError, ValueError):
    """Image geometry violates an operation's preconditions."""


class ShapeError(SpeciesIdError, ValueError):
    """Dimension mismatch between model and data."""


class FormatError(SpeciesIdError):
    """A binary or CSV artifact does not conform to its documented layout."""


class OversampleError(SpeciesIdError):
    """A class cannot be oversampled (too few members)."""


class NumericError(SpeciesIdError, ValueError):
    """Non-finite values where finite ones are required."""


class SweepError(SpeciesIdError):
    """CTV sweep callback failed; carries the offending grid point."""

    def __init__(self, ctv_percent: int, message: str = ""):
        self.ctv_percent = ctv_percent
        super().__init__(message or f"CTV sweep failed at ctv={ctv_percent}%")


class ConfigError(SpeciesIdError):
    """Invalid pipeline configuration."""


class StageError(SpeciesIdError):
    """Failure inside a named pipeline stage."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class ConvergenceWarning(UserWarning):
    """Optimizer hit max_iter before the gradient tolerance; carries the
    last iterate in ``args[1]`` as ``(weights, bias)``."""

    def __str__(self) -> str:  # keep the iterate out of the printed text
        return str(self.args[0]) if self.args else ""

    @property
    def last_iterate(self):
        return self.args[1] if len(self.args) > 1 else None
