"""Interpretation of a trained network: input sensitivity, permutation
importance and a local weighted-linear surrogate."""

from dataclasses import dataclass

import numpy as np

from .exceptions import RankDeficientError
from .network import _check_inputs, evaluate, forward


def sensitivity(model, x):
    """Gradient of the (first) output with respect to the inputs at ``x``."""
    X, _ = _check_inputs(model, x)
    if len(X) != 1:
        raise ValueError("sensitivity is evaluated at a single point")
    a = np.tanh(model.w_hidden @ X[0] + model.b_hidden)
    return (model.w_out[0] * (1.0 - a * a)) @ model.w_hidden


def _score(model, X, labels, metric):
    if metric == "accuracy":
        return evaluate(model, X, labels)
    if metric == "mse":
        e = forward(model, X)[:, 0] - np.asarray(labels, dtype=float)
        return -float(np.mean(e * e))
    raise ValueError(f"unknown metric {metric!r}; use 'accuracy' or 'mse'")


def permutation_importance(model, X, labels, seed=0, repeats=10, metric="accuracy"):
    """Mean drop in performance when one feature column is shuffled.

    With ``metric="mse"`` the drop is the increase in mean squared error.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) < 2:
        raise ValueError("permutation importance needs at least 2 samples")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rng = np.random.default_rng(seed)
    baseline = _score(model, X, labels, metric)
    out = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        drops = []
        for _ in range(repeats):
            Xp = X.copy()
            Xp[:, j] = X[rng.permutation(len(X)), j]
            drops.append(baseline - _score(model, Xp, labels, metric))
        out[j] = np.mean(drops)
    return out


@dataclass(frozen=True)
class LocalSurrogate:
    coefficients: np.ndarray
    intercept: float
    fit_quality: float  # weighted R^2


def lime_explain(model, x, n_samples=1000, kernel_width=0.75, seed=0):
    """Weighted least-squares linear fit to the model around ``x``.

    Perturbations are ``x + kernel_width * N(0, I)``; each is weighted by
    ``exp(-d^2 / kernel_width^2)`` with ``d`` its distance to ``x``.
    """
    x = np.asarray(x, dtype=float)
    _check_inputs(model, x)
    p = x.size
    if n_samples < p + 2:
        raise ValueError(f"n_samples must be at least {p + 2}")
    if not kernel_width > 0:
        raise ValueError("kernel_width must be positive")
    rng = np.random.default_rng(seed)
    Z = x + kernel_width * rng.standard_normal((n_samples, p))
    y = forward(model, Z)[:, 0]
    d2 = ((Z - x) ** 2).sum(axis=1)
    w = np.exp(-d2 / kernel_width**2)
    # weights are relative; rescaling keeps them clear of underflow
    w = w / w.max()

    # centering on x conditions the design; the intercept is then f(x) estimate
    D = np.column_stack([np.ones(n_samples), Z - x])
    sw = np.sqrt(w)
    A = D * sw[:, None]
    rank = np.linalg.matrix_rank(A)
    if rank < p + 1:
        raise RankDeficientError(
            f"weighted design has rank {rank} < {p + 1}; increase n_samples"
        )
    beta, *_ = np.linalg.lstsq(A, y * sw, rcond=None)
    fitted = D @ beta
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    ss_res = np.sum(w * (y - fitted) ** 2)
    # output flat to rounding: the intercept alone reproduces it
    flat = np.sum(w) * (np.finfo(float).eps * max(1.0, np.abs(y).max())) ** 2
    quality = 1.0 if ss_tot <= flat else 1.0 - ss_res / ss_tot
    coef = beta[1:]
    intercept = float(beta[0] - coef @ x)
    return LocalSurrogate(coef, intercept, float(quality))


@dataclass(frozen=True)
class Explanation:
    indicator_ids: tuple
    sensitivity: np.ndarray
    importance: np.ndarray
    local: LocalSurrogate

    def to_dict(self):
        per = {
            c: {
                "sensitivity": float(s),
                "importance": float(i),
                "local_coef": float(l),
            }
            for c, s, i, l in zip(self.indicator_ids, self.sensitivity, self.importance,
                                  self.local.coefficients)
        }
        return {
            "indicators": per,
            "local_intercept": self.local.intercept,
            "local_fit_quality": self.local.fit_quality,
        }


def explain_model(model, X, labels, x, indicator_ids, seed=0, repeats=10,
                  n_samples=1000, kernel_width=0.75, metric="accuracy"):
    """All three interpretations: sensitivity and surrogate at ``x``,
    importance over ``X``."""
    return Explanation(
        tuple(indicator_ids),
        sensitivity(model, x),
        permutation_importance(model, X, labels, seed, repeats, metric),
        lime_explain(model, x, n_samples, kernel_width, seed),
    )
