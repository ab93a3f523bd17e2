"""Linear SVM with squared hinge loss and L2 weight regularization.

Binary objective (labels y in {-1, +1}, penalty C > 0):

    f(w, b) = 0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i (w . x_i + b))^2

The loss is convex and differentiable, so the solver is plain full-batch
gradient descent with Armijo backtracking; instance sizes here (hundreds
of rows, a few hundred dims) never justify anything fancier and the simple
iteration is easy to check against brute-force oracles.  The bias is not
regularized.  Multiclass is one-vs-rest with all class problems advanced
in lockstep (their objectives are independent, so the trajectories are
identical to training each class alone).

Features are standardized with train means/variances before training; the
standardizer travels with the model.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import SampleLabel
from .errors import ConvergenceWarning, DatasetError, FormatError, NumericError, ShapeError
from .features import FeatureTable, FeatureVector

_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class SvmModel:
    weights: np.ndarray  # (S, d), in standardized feature space
    biases: np.ndarray  # (S,)
    penalty: float
    classes: tuple[SampleLabel, ...]
    feature_mean: np.ndarray  # (d,)
    feature_scale: np.ndarray  # (d,)
    converged: bool = True

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dims(self) -> int:
        return self.weights.shape[1]


def _as_xy(rows, labels=None):
    if isinstance(rows, FeatureTable):
        x = rows.matrix
    else:
        x = np.asarray(rows, dtype=np.float64)
    y = None if labels is None else np.asarray(labels, dtype=np.float64)
    return x, y


def objective(w, b, rows, labels, C: float) -> float:
    """Regularized squared-hinge objective at (w, b)."""
    x, y = _as_xy(rows, labels)
    w = np.asarray(w, dtype=np.float64)
    if C <= 0:
        raise ValueError("C must be positive")
    if not (np.isfinite(x).all() and np.isfinite(w).all() and np.isfinite(b)):
        raise NumericError("objective requires finite inputs")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be +-1")
    margins = y * (x @ w + b)
    viol = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * w @ w + C * np.sum(viol**2))


def objective_gradient(w, b, rows, labels, C: float):
    """Analytic gradient of ``objective`` (d/dw, d/db)."""
    x, y = _as_xy(rows, labels)
    w = np.asarray(w, dtype=np.float64)
    viol = np.maximum(0.0, 1.0 - y * (x @ w + b))
    grad_w = w - 2.0 * C * x.T @ (viol * y)
    grad_b = -2.0 * C * float(np.sum(viol * y))
    return grad_w, grad_b


def _solve_joint(x, y_signs, C, tol, max_iter, w0=None, b0=None):
    """Descend all S independent class objectives in lockstep.

    x: (n, d); y_signs: (n, S) of +-1.  Returns (W, b, converged_mask).
    Works on the augmented parameter (w, b) with an appended ones column;
    the bias coordinate is excluded from the regularizer.
    """
    n, d = x.shape
    s = y_signs.shape[1]
    xa = np.hstack([x, np.ones((n, 1))])
    wa = np.zeros((s, d + 1))
    if w0 is not None:
        wa[:, :d] = w0
    if b0 is not None:
        wa[:, d] = b0
    steps = np.ones(s)
    done = np.zeros(s, dtype=bool)

    def objective_cols(params, cols):
        viol = np.maximum(0.0, 1.0 - y_signs[:, cols] * (xa @ params.T))
        return 0.5 * np.einsum("ij,ij->i", params[:, :d], params[:, :d]) + C * np.einsum(
            "is,is->s", viol, viol
        )

    prev_wa = None
    prev_grad = None
    active = np.arange(s)
    for _ in range(max_iter):
        wa_act = wa[active]
        viol = np.maximum(0.0, 1.0 - y_signs[:, active] * (xa @ wa_act.T))
        grad = -2.0 * C * (viol * y_signs[:, active]).T @ xa
        grad[:, :d] += wa_act[:, :d]
        grad_sq = np.einsum("ij,ij->i", grad, grad)
        converged = grad_sq < tol * tol
        if converged.any():
            done[active[converged]] = True
            keep = ~converged
            active = active[keep]
            if active.size == 0:
                break
            wa_act = wa_act[keep]
            viol = viol[:, keep]
            grad = grad[keep]
            grad_sq = grad_sq[keep]
            if prev_wa is not None:
                prev_wa = prev_wa[keep]
                prev_grad = prev_grad[keep]
        obj = 0.5 * np.einsum("ij,ij->i", wa_act[:, :d], wa_act[:, :d]) + C * np.einsum(
            "is,is->s", viol, viol
        )
        # trial step: short Barzilai-Borwein spectral estimate where
        # available, otherwise grow the last accepted step; Armijo
        # backtracking below guarantees descent either way
        trial = steps[active] * 2.0
        if prev_wa is not None:
            dw = wa_act - prev_wa
            dg = grad - prev_grad
            num = np.einsum("ij,ij->i", dw, dg)
            den = np.einsum("ij,ij->i", dg, dg)
            bb = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
            trial = np.where(bb > 0, bb, trial)
        prev_wa = wa_act.copy()
        prev_grad = grad
        accepted = np.zeros(active.size, dtype=bool)
        current = wa_act.copy()
        for _ in range(_MAX_BACKTRACKS):
            candidate = current - trial[:, None] * grad
            ok = objective_cols(candidate, active) <= obj - _ARMIJO_C1 * trial * grad_sq
            newly = ok & ~accepted
            if newly.any():
                idx = active[newly]
                wa[idx] = candidate[newly]
                steps[idx] = trial[newly]
                accepted |= newly
            if accepted.all():
                break
            trial = np.where(accepted, trial, trial * 0.5)
        else:
            # no descent step representable: numerically at the optimum
            stuck = active[~accepted]
            done[stuck] = True
            active = active[accepted]
            if active.size == 0:
                break
            prev_wa = prev_wa[accepted]
            prev_grad = prev_grad[accepted]
    return wa[:, :d], wa[:, d], done


def train_binary(
    rows,
    labels,
    C: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 5000,
    init: tuple[np.ndarray, float] | None = None,
):
    """Minimize the binary objective; returns (w, b).

    Warns (ConvergenceWarning, carrying the last iterate) if the gradient
    norm is still above ``tol`` after ``max_iter`` iterations.
    """
    x, y = _as_xy(rows, labels)
    if C <= 0:
        raise ValueError("C must be positive")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DatasetError("both labels must be present to train")
    w0 = b0 = None
    if init is not None:
        w0, b0 = np.asarray(init[0], dtype=np.float64)[None, :], np.array([init[1]])
    w, b, done = _solve_joint(x, y[:, None], C, tol, max_iter, w0, b0)
    if not done.all():
        warnings.warn(
            ConvergenceWarning(
                f"gradient tolerance {tol} not reached in {max_iter} iterations",
                (w[0].copy(), float(b[0])),
            ),
            stacklevel=2,
        )
    return w[0], float(b[0])


def standardizer(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and standard deviations; zero-variance columns scale 1."""
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    return mean, scale


def train_multiclass(
    table: FeatureTable,
    C: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 5000,
    n_classes: int | None = None,
) -> SvmModel:
    """One-vs-rest training: class s gets label +1, all others -1."""
    present = {r.label.species_id: r.label for r in table.rows}
    s = max(present) + 1 if n_classes is None else n_classes
    missing = [i for i in range(s) if i not in present]
    if missing:
        raise DatasetError(f"classes {missing} absent from training rows")
    if s < 2:
        raise DatasetError("need at least 2 classes")
    mean, scale = standardizer(table.matrix)
    x = (table.matrix - mean) / scale
    ids = table.species_ids
    y_signs = np.where(ids[:, None] == np.arange(s)[None, :], 1.0, -1.0)
    w, b, done = _solve_joint(x, y_signs, C, tol, max_iter)
    if not done.all():
        bad = [present[i].species_name for i in np.nonzero(~done)[0]]
        warnings.warn(
            ConvergenceWarning(
                f"classes {bad} not converged in {max_iter} iterations",
                (w.copy(), b.copy()),
            ),
            stacklevel=2,
        )
    return SvmModel(
        weights=w,
        biases=b,
        penalty=C,
        classes=tuple(present[i] for i in range(s)),
        feature_mean=mean,
        feature_scale=scale,
        converged=bool(done.all()),
    )


def decision_values(model: SvmModel, values: np.ndarray) -> np.ndarray:
    """Per-class scores w_s . z + b_s for standardized z."""
    z = (values - model.feature_mean) / model.feature_scale
    return model.weights @ z + model.biases


def predict(model: SvmModel, x: FeatureVector | np.ndarray) -> SampleLabel:
    """Argmax of the per-class decision values; ties go to the lowest id."""
    values = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)
    if values.shape[0] != model.dims:
        raise ShapeError(f"input dims {values.shape[0]} != model dims {model.dims}")
    return model.classes[int(np.argmax(decision_values(model, values)))]


_SVM_MAGIC = b"SVM1"


def save_svm(model: SvmModel, path: str | Path) -> None:
    parts = [
        _SVM_MAGIC,
        struct.pack("<IId", model.n_classes, model.dims, model.penalty),
        np.ascontiguousarray(
            np.concatenate(
                [
                    model.weights.ravel(),
                    model.biases,
                    model.feature_mean,
                    model.feature_scale,
                ]
            ),
            dtype="<f8",
        ).tobytes(),
    ]
    for label in model.classes:
        name = label.species_name.encode("utf-8")
        parts.append(struct.pack("<H", len(name)))
        parts.append(name)
    Path(path).write_bytes(b"".join(parts))


def load_svm(path: str | Path) -> SvmModel:
    data = Path(path).read_bytes()
    if not data.startswith(_SVM_MAGIC):
        raise FormatError(f"{path}: missing SVM1 magic")
    s, d, c = struct.unpack_from("<IId", data, 4)
    pos = 4 + struct.calcsize("<IId")
    count = s * d + s + 2 * d
    payload = np.frombuffer(data[pos : pos + count * 8], dtype="<f8").astype(np.float64)
    if payload.shape[0] != count:
        raise FormatError(f"{path}: truncated SVM payload")
    pos += count * 8
    weights = payload[: s * d].reshape(s, d)
    biases = payload[s * d : s * d + s]
    mean = payload[s * d + s : s * d + s + d]
    scale = payload[s * d + s + d :]
    classes = []
    for i in range(s):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        classes.append(SampleLabel(i, data[pos : pos + name_len].decode("utf-8")))
        pos += name_len
    return SvmModel(
        weights=weights,
        biases=biases,
        penalty=float(c),
        classes=tuple(classes),
        feature_mean=mean,
        feature_scale=scale,
    )
