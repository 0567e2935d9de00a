"""Indicator screening: Pearson redundancy pruning, per-group PCA with
retention thresholds, and the information contribution rate."""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import INDICATOR_GROUPS, IndicatorMatrix, column_stats, standardize
from .exceptions import GroupTooSmallError, UndefinedCorrelationError

EIGEN_ZERO_TOL = 1e-10


def pearson(a, b, names=("a", "b")):
    """Pearson correlation of two equal-length sequences."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"sequences must be 1-D with equal length, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise ValueError("correlation needs at least 2 observations")
    da = a - a.mean()
    db = b - b.mean()
    saa = np.dot(da, da)
    sbb = np.dot(db, db)
    for s, name in ((saa, names[0]), (sbb, names[1])):
        if s == 0:
            raise UndefinedCorrelationError(f"correlation undefined: indicator {name} is constant", name)
    # product under a single sqrt keeps pearson(a, b) == pearson(b, a) bit-for-bit
    r = np.dot(da, db) / np.sqrt(saa * sbb)
    return float(np.clip(r, -1.0, 1.0))


def correlation_matrix(m):
    ids = m.indicator_ids
    p = len(ids)
    R = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            R[i, j] = R[j, i] = pearson(m.values[:, i], m.values[:, j], (ids[i], ids[j]))
    return R


@dataclass(frozen=True)
class PruneResult:
    correlation: np.ndarray
    dropped: tuple  # (kept_id, dropped_id, r)
    retained_ids: tuple


def prune_correlated(m, threshold=0.85):
    """Drop one indicator of every pair with ``|r| >= threshold``.

    Pairs are visited in column order; the later indicator of a flagged pair
    is dropped unless one member is already gone.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    R = correlation_matrix(m)
    ids = m.indicator_ids
    alive = [True] * len(ids)
    dropped = []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if alive[i] and alive[j] and abs(R[i, j]) >= threshold:
                alive[j] = False
                dropped.append((ids[i], ids[j], float(R[i, j])))
    retained = tuple(c for c, keep in zip(ids, alive) if keep)
    return PruneResult(R, tuple(dropped), retained)


@dataclass(frozen=True)
class PCASummary:
    indicator_ids: tuple
    eigenvalues: np.ndarray
    contributions: np.ndarray
    components: np.ndarray  # columns are unit eigenvectors
    loadings: np.ndarray  # indicators x components

    @property
    def cumulative(self):
        return np.cumsum(self.contributions)


def pca_group(m, group):
    """PCA on the correlation matrix of a group of indicators."""
    group = tuple(group)
    if len(group) < 2:
        raise GroupTooSmallError(f"PCA group needs at least 2 indicators, got {list(group)}")
    if m.shape[0] < 2:
        raise GroupTooSmallError("PCA group needs at least 2 time slices")
    sub = m.select(group)
    R = correlation_matrix(sub)
    evals, evecs = np.linalg.eigh(R)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    evals = np.where(np.abs(evals) <= EIGEN_ZERO_TOL, 0.0, evals)
    evals = np.clip(evals, 0.0, None)
    for j in range(evecs.shape[1]):
        col = evecs[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            evecs[:, j] = -col
    contributions = evals / evals.sum()
    loadings = evecs * np.sqrt(evals)
    return PCASummary(group, evals, contributions, evecs, loadings)


def n_components_for(summary, var_threshold=0.8):
    """Smallest component count whose cumulative contribution exceeds the threshold."""
    cum = summary.cumulative
    above = np.flatnonzero(cum > var_threshold)
    # rounding can leave the full sum a hair under a threshold of 1.0
    return int(above[0]) + 1 if above.size else len(cum)


def select_by_loading(summary, var_threshold=0.8, load_threshold=0.8):
    """Map each indicator to True (retain) or False (delete)."""
    if not 0 < var_threshold <= 1 or not 0 < load_threshold <= 1:
        raise ValueError("thresholds must lie in (0, 1]")
    q = n_components_for(summary, var_threshold)
    best = np.abs(summary.loadings[:, :q]).max(axis=1)
    return {c: bool(v > load_threshold) for c, v in zip(summary.indicator_ids, best)}


def information_contribution(filtered_sds, original_sds):
    """Mean standard deviation of the kept indicators over that of all indicators."""
    filtered_sds = np.asarray(filtered_sds, dtype=float)
    original_sds = np.asarray(original_sds, dtype=float)
    if filtered_sds.size == 0 or original_sds.size == 0:
        raise ValueError("standard deviation sequences must be non-empty")
    if np.any(filtered_sds < 0) or np.any(original_sds < 0):
        raise ValueError("standard deviations must be non-negative")
    denom = original_sds.mean()
    if denom == 0:
        raise ZeroDivisionError("mean standard deviation of the original indicators is zero")
    return float(filtered_sds.mean() / denom)


@dataclass(frozen=True)
class ScreeningReport:
    indicator_ids: tuple
    correlation: np.ndarray
    dropped_by_correlation: tuple
    pca_groups: dict  # group name -> PCASummary | None (singleton)
    verdicts: dict  # indicator -> "retained" | "correlation" | "loading"
    retained_ids: tuple
    in_rate: float
    thresholds: dict = field(default_factory=dict)

    def to_dict(self):
        groups = {}
        for name, s in self.pca_groups.items():
            if s is None:
                continue
            q = n_components_for(s, self.thresholds.get("variance", 0.8))
            groups[name] = {
                "indicators": list(s.indicator_ids),
                "eigenvalues": s.eigenvalues.tolist(),
                "variance_contribution": s.contributions.tolist(),
                "cumulative_contribution": s.cumulative.tolist(),
                "retained_components": q,
                "first_component_loadings": dict(zip(s.indicator_ids, s.loadings[:, 0].tolist())),
                "selection": {c: self.verdicts[c] for c in s.indicator_ids},
            }
        return {
            "indicator_ids": list(self.indicator_ids),
            "correlation": self.correlation.tolist(),
            "thresholds": dict(self.thresholds),
            "dropped_by_correlation": [
                {"kept": a, "dropped": b, "r": r} for a, b, r in self.dropped_by_correlation
            ],
            "pca_groups": groups,
            "verdicts": dict(self.verdicts),
            "retained_ids": list(self.retained_ids),
            "information_contribution": self.in_rate,
        }


def _group_members(ids, groups):
    """Partition ``ids`` by ``groups``; unlisted indicators form their own group."""
    out = {}
    seen = set()
    for name, members in groups.items():
        present = tuple(c for c in ids if c in members)
        if present:
            out[name] = present
            seen.update(present)
    for c in ids:
        if c not in seen:
            out[c] = (c,)
    return out


def screen(raw, corr_threshold=0.85, var_threshold=0.8, load_threshold=0.8, groups=None):
    """Full screening of a raw (unstandardized) matrix.

    Correlation and PCA run on the standardized data; the information
    contribution rate uses the raw standard deviations, since standardized
    columns all have unit spread.
    """
    groups = INDICATOR_GROUPS if groups is None else groups
    z = raw if raw.standardized else standardize(raw)
    pruned = prune_correlated(z, corr_threshold)

    verdicts = {c: "retained" for c in z.indicator_ids}
    for _, c, _ in pruned.dropped:
        verdicts[c] = "correlation"

    summaries = {}
    for name, members in _group_members(pruned.retained_ids, groups).items():
        if len(members) < 2:
            summaries[name] = None
            continue
        s = pca_group(z, members)
        summaries[name] = s
        for c, keep in select_by_loading(s, var_threshold, load_threshold).items():
            if not keep:
                verdicts[c] = "loading"

    retained = tuple(c for c in z.indicator_ids if verdicts[c] == "retained")
    _, sd = column_stats(raw.values)
    idx = [raw.indicator_ids.index(c) for c in retained]
    in_rate = information_contribution(sd[idx], sd)
    return ScreeningReport(
        indicator_ids=z.indicator_ids,
        correlation=pruned.correlation,
        dropped_by_correlation=pruned.dropped,
        pca_groups=summaries,
        verdicts=verdicts,
        retained_ids=retained,
        in_rate=in_rate,
        thresholds={"correlation": corr_threshold, "variance": var_threshold, "loading": load_threshold},
    )


class IndicatorScreener(TransformerMixin, BaseEstimator):
    """Select indicator columns by redundancy pruning and group PCA.

    ``feature_names`` name the columns of ``X`` (defaults to ``x0..xN``).
    ``groups`` maps a primary-indicator name to member ids.
    """

    def __init__(self, corr_threshold=0.85, var_threshold=0.8, load_threshold=0.8,
                 groups=None, feature_names=None):
        self.corr_threshold = corr_threshold
        self.var_threshold = var_threshold
        self.load_threshold = load_threshold
        self.groups = groups
        self.feature_names = feature_names

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        names = self.feature_names
        if names is None:
            names = [f"x{j}" for j in range(X.shape[1])]
        if len(names) != X.shape[1]:
            raise ValueError("feature_names length does not match X")
        raw = IndicatorMatrix(tuple(range(X.shape[0])), tuple(names), X)
        self.report_ = screen(raw, self.corr_threshold, self.var_threshold,
                              self.load_threshold, self.groups)
        self.n_features_in_ = X.shape[1]
        self.support_ = np.array([c in self.report_.retained_ids for c in raw.indicator_ids])
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        return X[:, self.support_]

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        return np.asarray(self.report_.retained_ids, dtype=object)
