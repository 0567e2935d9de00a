"""Indicator matrices: CSV ingestion, z-score standardization and a seeded
synthetic event generator."""

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ConstantColumnWarning, EmptyInputError, MatrixParseError

#: Final screened indicator set of the case study, in indicator-table order.
FINAL_INDICATORS = ("C1", "C3", "C5", "C6", "C7", "C10", "C13", "C16", "C18", "C23")

#: Primary indicator groups (heat, intensity, direction, subject).
INDICATOR_GROUPS = {
    "B1": ("C1", "C2", "C3", "C4", "C5", "C6"),
    "B2": ("C7", "C8", "C9", "C10", "C11", "C12", "C13"),
    "B3": ("C14", "C15", "C16", "C17", "C18", "C19"),
    "B4": ("C20", "C21", "C22", "C23"),
}

ALL_INDICATORS = tuple(c for group in INDICATOR_GROUPS.values() for c in group)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IndicatorMatrix:
    """Time slices (rows) by indicators (columns).

    Labels are opaque strings; ``values`` is a read-only float array.
    """

    slice_labels: tuple
    indicator_ids: tuple
    values: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        object.__setattr__(self, "slice_labels", tuple(str(s) for s in self.slice_labels))
        object.__setattr__(self, "indicator_ids", tuple(str(s) for s in self.indicator_ids))
        if values.shape != (len(self.slice_labels), len(self.indicator_ids)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(self.slice_labels)} labels x {len(self.indicator_ids)} indicators"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("indicator matrix contains NaN or infinite entries")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def shape(self):
        return self.values.shape

    def column(self, indicator_id):
        return self.values[:, self.indicator_ids.index(indicator_id)]

    def select(self, indicator_ids):
        """Column subset in the given order."""
        idx = [self.indicator_ids.index(i) for i in indicator_ids]
        return replace(self, indicator_ids=tuple(indicator_ids), values=self.values[:, idx])

    def rows(self, start=None, stop=None):
        sl = slice(start, stop)
        return replace(self, slice_labels=self.slice_labels[sl], values=self.values[sl])


def load_matrix(path):
    """Read ``label,<id1>,<id2>,...`` CSV into an unstandardized matrix."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise EmptyInputError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise MatrixParseError(f"{path}: header needs a label column and at least one indicator", row=1)
    ids = header[1:]
    if len(rows) == 1:
        raise EmptyInputError(f"{path}: header present but no data rows")

    labels, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MatrixParseError(
                f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}", row=lineno
            )
        labels.append(row[0].strip())
        parsed = []
        for col, cell in zip(ids, row[1:]):
            try:
                x = float(cell)
            except ValueError:
                raise MatrixParseError(
                    f"{path}: row {lineno}, column {col}: non-numeric cell {cell!r}",
                    row=lineno, column=col,
                ) from None
            if not math.isfinite(x):
                raise MatrixParseError(
                    f"{path}: row {lineno}, column {col}: non-finite value {cell!r}",
                    row=lineno, column=col,
                )
            parsed.append(x)
        values.append(parsed)
    return IndicatorMatrix(tuple(labels), tuple(ids), np.array(values))


def save_matrix(m, path):
    """Write a matrix as CSV. Floats use ``repr`` so a reload is exact."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *m.indicator_ids])
        for label, row in zip(m.slice_labels, m.values):
            w.writerow([label, *(repr(float(x)) for x in row)])


def _zscore(values, mean, scale, ids):
    const = scale == 0
    if np.any(const):
        names = ", ".join(ids[j] for j in np.flatnonzero(const))
        warnings.warn(f"constant column(s) standardized to 0: {names}", ConstantColumnWarning, stacklevel=3)
    safe = np.where(const, 1.0, scale)
    return np.where(const, 0.0, (values - mean) / safe)


def column_stats(values):
    """Column means and sample (n-1) standard deviations."""
    values = np.asarray(values, dtype=float)
    return values.mean(axis=0), values.std(axis=0, ddof=1)


def standardize(m):
    """Per-column z-score with the sample standard deviation.

    Constant columns become 0 and emit :class:`ConstantColumnWarning`.
    """
    if m.standardized:
        raise ValueError("matrix is already standardized")
    if m.shape[0] < 2:
        raise ValueError("standardization needs at least 2 time slices")
    mean, sd = column_stats(m.values)
    z = _zscore(m.values, mean, sd, m.indicator_ids)
    return replace(m, values=z, standardized=True)


class Standardizer(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Estimator form of :func:`standardize`; statistics come from ``fit``.

    Fitting on a subset of slices and transforming the rest is how a
    train/test protocol with held-out statistics is expressed.
    """

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        self.mean_, self.scale_ = column_stats(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, fitted with {self.n_features_in_}")
        ids = tuple(f"x{j}" for j in range(X.shape[1]))
        return _zscore(X, self.mean_, self.scale_, ids)


@dataclass(frozen=True)
class SynthEventConfig:
    """Shape of a single-event public-opinion series.

    Column ``j`` is ``baseline_j + m_j * exp(-decay * r_j * (t - event_day))``
    after the event, plus a small pre-event build-up, aftershocks and
    Gaussian noise of standard deviation ``noise_scale * magnitude``. Each
    ``(lag, rel)`` in ``aftershocks`` adds a fast-decaying bump ``lag`` days
    after the event, of size ``rel`` times the part of the main spike that has
    already decayed by then, so a noiseless column always peaks on the event
    day. The per-column magnitude ``m_j``, baseline and decay multiplier
    ``r_j`` are drawn from ``seed`` so indicators move together without being
    collinear.
    """

    n_slices: int = 36
    event_day: int = 3
    decay: float = 0.2
    noise_scale: float = 0.15
    seed: int = 0
    magnitude: float = 4.0
    aftershocks: tuple = ((7, 0.3), (18, 0.3), (27, 0.35))
    indicator_ids: tuple = field(default=FINAL_INDICATORS)

    def __post_init__(self):
        if self.n_slices < 1:
            raise ValueError("n_slices must be positive")
        if not 0 <= self.event_day < self.n_slices:
            raise ValueError("event_day must lie in [0, n_slices)")
        if not self.decay > 0:
            raise ValueError("decay must be positive")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")
        if not self.magnitude > 0:
            raise ValueError("magnitude must be positive")
        for lag, rel in self.aftershocks:
            if lag < 1 or not 0 <= rel < 0.4:
                raise ValueError("aftershocks need lag >= 1 and relative size in [0, 0.4)")


AFTERSHOCK_DECAY = 1.0


def synth_event(cfg):
    """Deterministic synthetic indicator matrix for one event (unstandardized)."""
    rng = np.random.default_rng(cfg.seed)
    p = len(cfg.indicator_ids)
    t = np.arange(cfg.n_slices, dtype=float)
    lag = t - cfg.event_day

    magnitude = cfg.magnitude * rng.uniform(0.6, 1.4, size=p)
    baseline = rng.uniform(0.5, 2.0, size=p)
    decay = cfg.decay * rng.uniform(0.5, 2.5, size=p)
    # pre-event build-up stays strictly below the spike
    ramp = rng.uniform(0.05, 0.3, size=p)
    shock_scale = rng.uniform(0.7, 1.3, size=(len(cfg.aftershocks), p))
    noise = rng.standard_normal((cfg.n_slices, p))

    after = magnitude * np.exp(-np.outer(np.clip(lag, 0, None), decay))
    before = magnitude * ramp * np.exp(np.outer(np.clip(lag, None, 0), np.ones(p)))
    values = baseline + np.where((lag >= 0)[:, None], after, before)
    for (lag_k, rel), scale in zip(cfg.aftershocks, shock_scale):
        d = lag - lag_k
        profile = np.where(d >= 0, np.exp(-AFTERSHOCK_DECAY * np.clip(d, 0, None)), 0.0)
        decayed = 1.0 - np.exp(-decay * lag_k)
        values += np.outer(profile, rel * scale * decayed * magnitude)
    values += cfg.noise_scale * cfg.magnitude * noise
    labels = tuple(f"t{i:02d}" for i in range(cfg.n_slices))
    return IndicatorMatrix(labels, tuple(cfg.indicator_ids), values)


#: Near-copy sources for the non-final indicators of :func:`synth_indicator_system`.
REDUNDANT_SOURCES = {
    "C2": "C1", "C4": "C3", "C8": "C7", "C9": "C7", "C11": "C10", "C12": "C10",
    "C15": "C13", "C17": "C16", "C19": "C18", "C20": "C13", "C21": "C7", "C22": "C10",
}


def synth_indicator_system(cfg=None, copy_noise=0.1, weak_mix=0.45):
    """Raw 23-indicator matrix with built-in redundancy.

    The final indicators come from :func:`synth_event`. Each indicator in
    :data:`REDUNDANT_SOURCES` is a rescaled copy of an earlier final indicator
    plus noise of ``copy_noise`` of its spread, so correlation pruning removes
    it. C14 mixes the event signal at weight ``weak_mix`` with independent
    noise on a small scale, giving it a weak loading in its group.
    """
    cfg = cfg or SynthEventConfig()
    base = synth_event(replace(cfg, indicator_ids=FINAL_INDICATORS))
    rng = np.random.default_rng([cfg.seed, 23])
    cols = {c: base.column(c) for c in FINAL_INDICATORS}
    for c in ALL_INDICATORS:
        if c in cols:
            continue
        if c in REDUNDANT_SOURCES:
            src = cols[REDUNDANT_SOURCES[c]]
            scale = rng.uniform(0.5, 1.5)
            cols[c] = scale * src + copy_noise * scale * src.std() * rng.standard_normal(src.size)
        else:
            signal = np.mean([standardize_column(cols[s]) for s in ("C16", "C18")], axis=0)
            mixed = weak_mix * signal + np.sqrt(1 - weak_mix**2) * rng.standard_normal(signal.size)
            cols[c] = 0.2 * mixed
    values = np.column_stack([cols[c] for c in ALL_INDICATORS])
    return IndicatorMatrix(base.slice_labels, ALL_INDICATORS, values)


def standardize_column(x):
    x = np.asarray(x, dtype=float)
    sd = x.std(ddof=1)
    return (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)
