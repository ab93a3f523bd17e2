"""Independent brute-force oracles.

These deliberately avoid the library-under-test's code paths (and numpy's
eigensolvers) so the main implementations have something honest to be
checked against.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(matrix: np.ndarray, sweeps: int = 100, tol: float = 1e-14):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns (eigenvalues desc, eigenvectors as rows), the classic
    rotate-away-the-off-diagonal iteration.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = math.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta**2 + 1.0))
                c = 1.0 / math.sqrt(t**2 + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    eigvals = np.diag(a).copy()
    order = np.argsort(eigvals)[::-1]
    return eigvals[order], v[:, order].T


def covariance_by_hand(rows: np.ndarray) -> np.ndarray:
    """Sample covariance (divisor n-1) computed definitionally."""
    n, d = rows.shape
    mean = rows.sum(axis=0) / n
    cov = np.zeros((d, d))
    for row in rows:
        diff = row - mean
        cov += np.outer(diff, diff)
    return cov / (n - 1)


def knn_brute_force(points: np.ndarray, query: int, k: int, eligible=None):
    """All-pairs nearest neighbors with lowest-index tie break."""
    candidates = [
        i for i in (eligible if eligible is not None else range(len(points)))
        if i != query
    ]
    scored = sorted(
        candidates,
        key=lambda i: (float(np.sum((points[i] - points[query]) ** 2)), i),
    )
    return scored[:k]


def svm_grid_search(x: np.ndarray, y: np.ndarray, C: float,
                    lo: float = -3.0, hi: float = 3.0, step: float = 0.01) -> float:
    """Exhaustive minimum of the squared-hinge objective over a (w1, w2, b) grid."""
    n_pts = int(round((hi - lo) / step)) + 1
    grid = lo + step * np.arange(n_pts)
    w1 = grid[:, None]
    w2 = grid[None, :]
    reg = 0.5 * (w1**2 + w2**2)
    scores = [y[i] * (x[i, 0] * w1 + x[i, 1] * w2) for i in range(len(x))]
    best = math.inf
    for b in grid:
        total = reg.copy()
        for i in range(len(x)):
            viol = 1.0 - scores[i] - y[i] * b
            np.maximum(viol, 0.0, out=viol)
            total += C * viol**2
        best = min(best, float(total.min()))
    return best


def bilinear_by_hand(raw, target_w, target_h):
    """Scalar-loop corner-aligned bilinear interpolation."""
    raw = np.asarray(raw, dtype=np.float64)
    h, w = raw.shape
    out = np.zeros((target_h, target_w))
    for i in range(target_h):
        for j in range(target_w):
            sy = i * (h - 1) / (target_h - 1) if target_h > 1 else 0.0
            sx = j * (w - 1) / (target_w - 1) if target_w > 1 else 0.0
            y0, x0 = int(sy), int(sx)
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            fy, fx = sy - y0, sx - x0
            out[i, j] = (
                raw[y0, x0] * (1 - fy) * (1 - fx)
                + raw[y0, x1] * (1 - fy) * fx
                + raw[y1, x0] * fy * (1 - fx)
                + raw[y1, x1] * fy * fx
            )
    return out
