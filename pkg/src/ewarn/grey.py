"""Grey relational analysis of time slices against a reference sequence."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import EmptyInputError

DEFAULT_RHO = 0.5


def reference_sequence(m):
    """Column-wise maximum over all slices."""
    values = m.values if hasattr(m, "values") else np.asarray(m, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise EmptyInputError("reference sequence of an empty matrix")
    return values.max(axis=0)


def relational_coefficients(reference, comparatives, rho=DEFAULT_RHO):
    """Grey relational coefficients of each comparative row against ``reference``.

    ``delta_min`` and ``delta_max`` are taken over all rows and components.
    When every deviation is zero all coefficients are 1.
    """
    if not 0 < rho < 1:
        raise ValueError("resolution factor rho must lie in (0, 1)")
    reference = np.asarray(reference, dtype=float)
    comparatives = np.atleast_2d(np.asarray(comparatives, dtype=float))
    if comparatives.size == 0:
        raise EmptyInputError("no comparative sequences")
    if comparatives.shape[1] != reference.shape[0]:
        raise ValueError(
            f"reference has {reference.shape[0]} components, comparatives have {comparatives.shape[1]}"
        )
    delta = np.abs(reference - comparatives)
    dmin = delta.min()
    dmax = delta.max()
    if dmax == 0:
        return np.ones_like(delta)
    # dividing through by dmax first avoids 0/0 when rho * dmax underflows
    return (dmin / dmax + rho) / (delta / dmax + rho)


def association_degrees(coefficients):
    coefficients = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if coefficients.size == 0:
        raise EmptyInputError("empty coefficient matrix")
    return coefficients.mean(axis=1)


def rank_degrees(degrees, labels):
    """Labels ordered by descending degree, ties kept in input order."""
    degrees = np.asarray(degrees, dtype=float)
    labels = list(labels)
    if degrees.shape != (len(labels),):
        raise ValueError("degrees and labels differ in length")
    order = np.argsort(-degrees, kind="stable")
    return [(labels[i], float(degrees[i])) for i in order]


@dataclass(frozen=True)
class GraResult:
    slice_labels: tuple
    reference: np.ndarray
    rho: float
    coefficients: np.ndarray
    degrees: np.ndarray

    @property
    def ranking(self):
        return [label for label, _ in rank_degrees(self.degrees, self.slice_labels)]

    def to_dict(self):
        return {
            "reference": self.reference.tolist(),
            "rho": self.rho,
            "degrees": dict(zip(self.slice_labels, self.degrees.tolist())),
            "ranking": self.ranking,
        }


def grey_relational(m, rho=DEFAULT_RHO, reference=None):
    """Run the whole analysis on a standardized matrix."""
    ref = reference_sequence(m) if reference is None else np.asarray(reference, dtype=float)
    coef = relational_coefficients(ref, m.values, rho)
    return GraResult(m.slice_labels, ref, rho, coef, association_degrees(coef))


class GreyRelationalAnalysis(TransformerMixin, BaseEstimator):
    """Transform slices into their degree of association with a reference.

    ``fit`` stores the reference (column maxima unless ``reference`` is given)
    together with the deviation range ``delta_min``/``delta_max`` over the
    fitted rows, so transforming new rows scores them on the same scale.
    ``fit_transform`` on a full matrix gives the plain analysis.
    """

    def __init__(self, rho=DEFAULT_RHO, reference=None):
        self.rho = rho
        self.reference = reference

    def fit(self, X, y=None):
        X = check_array(X)
        if not 0 < self.rho < 1:
            raise ValueError("resolution factor rho must lie in (0, 1)")
        ref = X.max(axis=0) if self.reference is None else np.asarray(self.reference, dtype=float)
        if ref.shape != (X.shape[1],):
            raise ValueError("reference length does not match X")
        delta = np.abs(ref - X)
        self.reference_ = ref
        self.delta_min_ = float(delta.min())
        self.delta_max_ = float(delta.max())
        self.n_features_in_ = X.shape[1]
        return self

    def coefficients(self, X):
        check_is_fitted(self)
        X = check_array(X)
        delta = np.abs(self.reference_ - X)
        if self.delta_max_ == 0:
            return np.where(delta == 0, 1.0, 0.0)
        return (self.delta_min_ / self.delta_max_ + self.rho) / (delta / self.delta_max_ + self.rho)

    def transform(self, X):
        return association_degrees(self.coefficients(X))[:, None]
