"""Warning-level grading: K-Means on association degrees, midpoint thresholds
and level assignment."""

import bisect
import enum
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import EmptyInputError


class WarningLevel(enum.IntEnum):
    MINOR = 1
    WARNING = 2
    SEVERE = 3


@dataclass(frozen=True)
class GradingModel:
    k: int
    centers: np.ndarray  # (k, d), ascending by first coordinate
    thresholds: np.ndarray  # midpoints of adjacent first coordinates
    assignments: np.ndarray
    iterations: int
    sse: float
    sse_history: tuple

    @property
    def sizes(self):
        return np.bincount(self.assignments, minlength=self.k)

    def levels(self):
        return self.assignments + 1

    def to_dict(self):
        return {
            "k": self.k,
            "centers": self.centers[:, 0].tolist() if self.centers.shape[1] == 1 else self.centers.tolist(),
            "thresholds": self.thresholds.tolist(),
            "cluster_sizes": self.sizes.tolist(),
            "iterations": self.iterations,
            "sse": self.sse,
        }


def quantile_init(points, k):
    """Points at ranks ceil((2j-1) n / 2k), j = 1..k, ordered by first coordinate."""
    n = len(points)
    order = np.argsort(points[:, 0], kind="stable")
    ranks = [math.ceil((2 * j - 1) * n / (2 * k)) for j in range(1, k + 1)]
    return points[order[[r - 1 for r in ranks]]].copy()


def _assign(points, centers):
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    # argmin keeps the first minimum, so ties go to the lower index
    return np.argmin(d2, axis=1), d2


def _sse(points, centers, labels):
    return float(((points - centers[labels]) ** 2).sum())


def lloyd(points, centers, max_iter=300):
    """Lloyd iteration from the given centers.

    Returns ``(centers, labels, iterations, sse_history)``. An emptied cluster
    is reseeded at the point farthest from its current center.
    """
    centers = np.array(centers, dtype=float)
    k = len(centers)
    labels, d2 = _assign(points, centers)
    history = [_sse(points, centers, labels)]
    it = 0
    while it < max_iter:
        it += 1
        new = centers.copy()
        for j in range(k):
            members = points[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
            else:
                far = int(np.argmax(d2[np.arange(len(points)), labels]))
                new[j] = points[far]
        new_labels, d2 = _assign(points, new)
        history.append(_sse(points, new, new_labels))
        converged = np.array_equal(new, centers) and np.array_equal(new_labels, labels)
        centers, labels = new, new_labels
        if converged:
            break
    return centers, labels, it, tuple(history)


def kmeans(points, k=3, seed=0, max_iter=300, n_restarts=0):
    """K-Means with quantile seeding.

    ``points`` is a 1-D sequence of scalars or an (n, d) array. The quantile
    start is run first; ``n_restarts`` extra runs start from distinct random
    points drawn with ``seed`` and the lowest SSE wins (ties to the earliest
    run). Centers are returned sorted ascending by first coordinate.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or len(pts) == 0:
        raise EmptyInputError("k-means needs at least one point")
    if not 1 <= k <= len(pts):
        raise ValueError(f"k must lie in [1, {len(pts)}], got {k}")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")

    rng = np.random.default_rng(seed)
    starts = [quantile_init(pts, k)]
    for _ in range(n_restarts):
        starts.append(pts[rng.choice(len(pts), size=k, replace=False)])

    best = None
    for start in starts:
        run = lloyd(pts, start, max_iter)
        if best is None or run[3][-1] < best[3][-1]:
            best = run
    centers, labels, iterations, history = best

    order = np.lexsort(centers.T[::-1])
    rank = np.empty(k, dtype=int)
    rank[order] = np.arange(k)
    centers = centers[order]
    labels = rank[labels]
    thresholds = derive_thresholds(centers[:, 0]) if k > 1 else np.empty(0)
    return GradingModel(k, centers, thresholds, labels, iterations, history[-1], history)


def derive_thresholds(centers):
    """Midpoints between adjacent ascending centers."""
    c = np.asarray(centers, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("need at least 2 scalar centers")
    if np.any(np.diff(c) <= 0):
        raise ValueError(f"centers must be strictly ascending, got {c.tolist()}")
    return (c[:-1] + c[1:]) / 2


def classify(degree, thresholds):
    """Level code for a degree; a value equal to a threshold goes to the higher level."""
    thresholds = list(np.asarray(thresholds, dtype=float))
    code = 1 + bisect.bisect_right(thresholds, float(degree))
    if len(thresholds) == 2:
        return WarningLevel(code)
    return code


class WarningGrader(ClassifierMixin, BaseEstimator):
    """Cluster association degrees and grade them by the midpoint thresholds.

    ``predict`` returns level codes ``1..k`` (1 = Minor for k = 3).
    """

    def __init__(self, n_clusters=3, random_state=0, max_iter=300, n_restarts=0):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.max_iter = max_iter
        self.n_restarts = n_restarts

    def fit(self, X, y=None):
        x = np.asarray(X, dtype=float).reshape(-1)
        self.model_ = kmeans(x, self.n_clusters, self.random_state, self.max_iter, self.n_restarts)
        self.cluster_centers_ = self.model_.centers[:, 0]
        self.thresholds_ = self.model_.thresholds
        self.labels_ = self.model_.levels()
        self.classes_ = np.arange(1, self.n_clusters + 1)
        return self

    def predict(self, X):
        check_is_fitted(self)
        x = np.asarray(X, dtype=float).reshape(-1)
        return np.array([int(classify(v, self.thresholds_)) for v in x])
