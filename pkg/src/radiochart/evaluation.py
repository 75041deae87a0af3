"""Chart quality metrics.

Continuity and trustworthiness score neighborhood preservation between an
original-space distance matrix and an embedding-space one; both are
rank-based, live in [0, 1] and equal 1 exactly when the neighbor structure
is identical. Positioning error is measured after registering the chart to
ground truth with a least-squares affine transform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .charting import Embedding
from .graphs import DistanceMatrix


@dataclass
class AffineTransform:
    """2x3 matrix applied to homogeneous chart points (x, y, 1)."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (2, 3):
            raise ValueError(f"expected a 2x3 matrix, got {self.matrix.shape}")
        if not np.isfinite(self.matrix).all():
            raise ValueError("non-finite transform")

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix[:, :2].T + self.matrix[:, 2]


@dataclass
class EvalReport:
    method: str
    ct: float
    tw: float
    k_neighbors: int
    mae: float
    ce90: float
    transform: AffineTransform
    n: int
    extras: dict | None = None

    def __post_init__(self):
        if not (0.0 <= self.ct <= 1.0 and 0.0 <= self.tw <= 1.0):
            raise ValueError(f"CT/TW out of range: {self.ct}, {self.tw}")
        if self.mae < 0 or self.ce90 < 0:
            raise ValueError("errors must be nonnegative")

    def to_dict(self):
        d = {
            "method": self.method,
            "ct": self.ct,
            "tw": self.tw,
            "k_neighbors": self.k_neighbors,
            "mae": self.mae,
            "ce90": self.ce90,
            "transform": self.transform.matrix.tolist(),
            "n": self.n,
        }
        if self.extras:
            d["extras"] = self.extras
        return d

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    CSV_HEADER = "method,ct,tw,mae,ce90,n,k"

    def csv_row(self) -> str:
        return (
            f"{self.method},{self.ct:.9g},{self.tw:.9g},"
            f"{self.mae:.9g},{self.ce90:.9g},{self.n},{self.k_neighbors}"
        )


def default_k(n: int) -> int:
    """Neighborhood size for CT/TW: 5% of the samples, at least 1."""
    return max(1, int(0.05 * n))


def _check_k(n: int, k: int):
    if n < 3:
        raise ValueError("need at least 3 samples")
    if not 1 <= k <= (2 * n - 2) // 3:
        raise ValueError(f"K must satisfy 1 <= K <= {(2 * n - 2) // 3} for n={n}, got {k}")


def _rank_tables(values: np.ndarray):
    """Neighbor order and 1-based ranks per row; self excluded, ties by index."""
    d = values.astype(float).copy()
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")
    n = d.shape[0]
    ranks = np.empty((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    ranks[rows, order] = np.arange(1, n + 1)[None, :]
    return order, ranks


def _penalty_normalizer(n: int, k: int) -> float:
    # exact worst-case rank penalty; the second branch covers k >= n/2
    if k < n / 2:
        return float(n * k * (2 * n - 3 * k - 1))
    return float(n * (n - k) * (n - k - 1))


def _neighborhood_score(d_reference: np.ndarray, d_ranked: np.ndarray, k: int) -> float:
    order_ref, _ = _rank_tables(d_reference)
    _, ranks = _rank_tables(d_ranked)
    n = d_reference.shape[0]
    neigh = order_ref[:, :k]
    r = ranks[np.arange(n)[:, None], neigh]
    penalty = float(np.maximum(0, r - k).sum())
    return 1.0 - 2.0 * penalty / _penalty_normalizer(n, k)


def _as_values(matrix) -> np.ndarray:
    return matrix.values if isinstance(matrix, DistanceMatrix) else np.asarray(matrix, dtype=float)


def continuity(d_orig, d_emb, k: int) -> float:
    """How well original-space neighborhoods survive in the embedding.

    Every original K-nearest neighbor that the embedding ranks beyond K is
    penalized by its excess rank.
    """
    a, b = _as_values(d_orig), _as_values(d_emb)
    if a.shape != b.shape:
        raise ValueError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    _check_k(a.shape[0], k)
    return _neighborhood_score(a, b, k)


def trustworthiness(d_orig, d_emb, k: int) -> float:
    """How trustworthy embedding neighborhoods are w.r.t. the original space.

    Mirror of continuity: embedding K-nearest neighbors are penalized by
    their excess rank in the original space.
    """
    a, b = _as_values(d_orig), _as_values(d_emb)
    if a.shape != b.shape:
        raise ValueError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    _check_k(a.shape[0], k)
    return _neighborhood_score(b, a, k)


def fit_affine(chart, ground_truth) -> AffineTransform:
    """Least-squares affine registration of chart points onto ground truth."""
    pts = chart.points if isinstance(chart, Embedding) else np.asarray(chart, dtype=float)
    gt = np.asarray(ground_truth, dtype=float)
    if pts.shape[0] != gt.shape[0]:
        raise ValueError("chart and ground truth sizes differ")
    if pts.shape[0] < 3:
        raise ValueError("need at least 3 points to fit an affine transform")
    h = np.column_stack([pts, np.ones(pts.shape[0])])
    if np.linalg.matrix_rank(h) < 3:
        raise ValueError("chart points are collinear; affine fit is degenerate")
    sol, *_ = np.linalg.lstsq(h, gt, rcond=None)
    return AffineTransform(sol.T)


def position_errors(chart, transform: AffineTransform, ground_truth):
    """(MAE, CE90, per-point errors) of a registered chart, in meters.

    CE90 is the empirical 90th percentile with linear interpolation between
    order statistics.
    """
    pts = chart.points if isinstance(chart, Embedding) else np.asarray(chart, dtype=float)
    gt = np.asarray(ground_truth, dtype=float)
    if pts.shape != gt.shape:
        raise ValueError("chart and ground truth sizes differ")
    errors = np.linalg.norm(transform.apply(pts) - gt, axis=1)
    return float(errors.mean()), float(np.percentile(errors, 90.0)), errors


def euclidean_matrix(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def evaluate_chart(
    chart: Embedding,
    ground_truth: np.ndarray,
    d_orig,
    k: int | None = None,
    transform: AffineTransform | None = None,
) -> EvalReport:
    """Full quality report for one chart.

    CT/TW compare the original-space matrix `d_orig` (normally the pairwise
    CIR distance matrix) against Euclidean distances between chart points.
    When ground truth is available, CT/TW against true Euclidean distances
    are reported as extras for diagnostics. The affine transform is fitted
    on this chart unless one (e.g. fitted on a training split) is supplied.
    """
    gt = np.asarray(ground_truth, dtype=float)
    n = len(chart.points)
    k = default_k(n) if k is None else k
    d_emb = euclidean_matrix(chart.points)
    ct = continuity(d_orig, d_emb, k)
    tw = trustworthiness(d_orig, d_emb, k)
    if transform is None:
        transform = fit_affine(chart, gt)
    mae, ce90, _ = position_errors(chart, transform, gt)
    d_true = euclidean_matrix(gt)
    extras = {
        "ct_vs_ground_truth": continuity(d_true, d_emb, k),
        "tw_vs_ground_truth": trustworthiness(d_true, d_emb, k),
    }
    return EvalReport(
        method=chart.method,
        ct=ct,
        tw=tw,
        k_neighbors=k,
        mae=mae,
        ce90=ce90,
        transform=transform,
        n=n,
        extras=extras,
    )
