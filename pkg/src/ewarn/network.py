"""Single-hidden-layer network (tanh hidden, linear output) trained by
Levenberg-Marquardt, plus level prediction and accuracy."""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import EmptyInputError, NumericalFailure
from .grading import WarningLevel

MODEL_FORMAT = "ewarn-mlp"
MODEL_VERSION = 1


@dataclass(frozen=True)
class MlpModel:
    w_hidden: np.ndarray  # (n_hidden, n_in)
    b_hidden: np.ndarray  # (n_hidden,)
    w_out: np.ndarray  # (n_out, n_hidden)
    b_out: np.ndarray  # (n_out,)

    def __post_init__(self):
        for name in ("w_hidden", "b_hidden", "w_out", "b_out"):
            a = np.array(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite entries")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        h, i = self.w_hidden.shape
        o = self.w_out.shape[0]
        if self.b_hidden.shape != (h,) or self.w_out.shape != (o, h) or self.b_out.shape != (o,):
            raise ValueError("inconsistent layer shapes")

    @property
    def n_in(self):
        return self.w_hidden.shape[1]

    @property
    def n_hidden(self):
        return self.w_hidden.shape[0]

    @property
    def n_out(self):
        return self.w_out.shape[0]

    @property
    def n_params(self):
        return self.w_hidden.size + self.b_hidden.size + self.w_out.size + self.b_out.size

    def flat(self):
        """Parameters as one vector: w_hidden (row-major), b_hidden, w_out, b_out."""
        return np.concatenate([self.w_hidden.ravel(), self.b_hidden, self.w_out.ravel(), self.b_out])

    @classmethod
    def from_flat(cls, theta, n_in, n_hidden, n_out):
        theta = np.asarray(theta, dtype=float)
        a = n_hidden * n_in
        b = a + n_hidden
        c = b + n_out * n_hidden
        if theta.shape != (c + n_out,):
            raise ValueError(f"expected {c + n_out} parameters, got {theta.shape}")
        return cls(theta[:a].reshape(n_hidden, n_in), theta[a:b],
                   theta[b:c].reshape(n_out, n_hidden), theta[c:])

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "n_in": self.n_in,
            "n_hidden": self.n_hidden,
            "n_out": self.n_out,
            "activations": {"hidden": "tansig", "output": "purelin"},
            "w_hidden": self.w_hidden.ravel().tolist(),
            "b_hidden": self.b_hidden.tolist(),
            "w_out": self.w_out.ravel().tolist(),
            "b_out": self.b_out.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model document: {d.get('format')!r} v{d.get('version')}")
        if d.get("activations") != {"hidden": "tansig", "output": "purelin"}:
            raise ValueError(f"unsupported activations {d.get('activations')}")
        i, h, o = d["n_in"], d["n_hidden"], d["n_out"]
        return cls(np.reshape(d["w_hidden"], (h, i)), d["b_hidden"],
                   np.reshape(d["w_out"], (o, h)), d["b_out"])


@dataclass(frozen=True)
class TrainParams:
    goal_mse: float = 1e-5
    max_epochs: int = 1000
    mu_init: float = 0.01
    mu_inc: float = 10.0
    mu_dec: float = 0.1
    mu_max: float = 1e10
    seed: int = 0

    def __post_init__(self):
        if not self.goal_mse > 0:
            raise ValueError("goal_mse must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")
        if not self.mu_init > 0:
            raise ValueError("mu_init must be positive")
        if not self.mu_inc > 1:
            raise ValueError("mu_inc must exceed 1")
        if not 0 < self.mu_dec < 1:
            raise ValueError("mu_dec must lie in (0, 1)")
        if not self.mu_max > self.mu_init:
            raise ValueError("mu_max must exceed mu_init")


@dataclass
class TrainingTrace:
    mse: list = field(default_factory=list)  # index = epoch, 0 is the initial model
    mu: list = field(default_factory=list)
    epoch: int = 0
    gradient_norm: float = math.nan
    stop_reason: str = ""

    def to_csv(self):
        lines = ["epoch,mse"]
        lines += [f"{e},{m!r}" for e, m in enumerate(self.mse)]
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "epochs": self.epoch,
            "final_mse": self.mse[-1] if self.mse else None,
            "gradient_norm": self.gradient_norm,
            "stop_reason": self.stop_reason,
        }


def hidden_candidates(n_in, n_out):
    """Hidden sizes from sqrt(n_in + n_out) + a, a in [1, 10].

    Returns ``(candidates, default)``; the default is 6 for the 10-input
    single-output case study and the smallest candidate otherwise.
    """
    if n_in < 1 or n_out < 1:
        raise ValueError("node counts must be positive")
    root = math.sqrt(n_in + n_out)
    lo = math.ceil(root + 1)
    hi = math.floor(root + 10)
    candidates = list(range(lo, hi + 1))
    default = 6 if (n_in, n_out) == (10, 1) else lo
    return candidates, default


def init_network(n_in, n_hidden, n_out=1, seed=0):
    """Weights and biases uniform on [-0.5, 0.5] from a seeded generator."""
    if min(n_in, n_hidden, n_out) < 1:
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    n = n_hidden * n_in + n_hidden + n_out * n_hidden + n_out
    return MlpModel.from_flat(rng.uniform(-0.5, 0.5, size=n), n_in, n_hidden, n_out)


def _check_inputs(model, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.n_in:
        raise ValueError(f"input has {X.shape[1]} features, network expects {model.n_in}")
    return X, single


def forward(model, x):
    """Network output for one sample (1-D) or a batch (2-D, one row per sample)."""
    X, single = _check_inputs(model, x)
    Y = np.tanh(X @ model.w_hidden.T + model.b_hidden) @ model.w_out.T + model.b_out
    return Y[0] if single else Y


def jacobian(model, X):
    """Derivatives of every output w.r.t. every parameter.

    Rows are ordered sample-major (sample s, output o -> row s*n_out + o);
    columns follow :meth:`MlpModel.flat`.
    """
    X, _ = _check_inputs(model, X)
    S, n_in = X.shape
    H, O = model.n_hidden, model.n_out
    A = np.tanh(X @ model.w_hidden.T + model.b_hidden)  # (S, H)
    dA = 1.0 - A * A
    # back-propagated signal into each hidden pre-activation, per output: (S, O, H)
    delta = model.w_out[None, :, :] * dA[:, None, :]
    J_wh = delta[:, :, :, None] * X[:, None, None, :]  # (S, O, H, n_in)
    J_bh = delta
    J_wo = np.zeros((S, O, O, H))
    J_bo = np.zeros((S, O, O))
    for o in range(O):
        J_wo[:, o, o, :] = A
        J_bo[:, o, o] = 1.0
    J = np.concatenate([
        J_wh.reshape(S, O, H * n_in),
        J_bh.reshape(S, O, H),
        J_wo.reshape(S, O, O * H),
        J_bo.reshape(S, O, O),
    ], axis=2)
    return J.reshape(S * O, -1)


def _mse(model, X, Y):
    e = forward(model, X) - Y
    return float(np.mean(e * e)), e.reshape(-1)


def train_lm(model, X, Y, params=None):
    """Levenberg-Marquardt on the mean squared error.

    Each epoch solves ``(J'J + mu I) dw = -J'e`` by Cholesky. A step is kept
    only if it lowers the MSE (then ``mu *= mu_dec``); otherwise
    ``mu *= mu_inc`` and the step is retried. Training stops when the MSE
    reaches ``goal_mse``, after ``max_epochs`` epochs, or once ``mu`` passes
    ``mu_max``.
    """
    p = params or TrainParams()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(X) == 0:
        raise EmptyInputError("no training samples")
    if len(X) != len(Y):
        raise ValueError(f"{len(X)} input rows but {len(Y)} targets")
    if Y.shape[1] != model.n_out:
        raise ValueError(f"targets have {Y.shape[1]} columns, network has {model.n_out} outputs")

    dims = (model.n_in, model.n_hidden, model.n_out)
    theta = model.flat()
    mse, e = _mse(model, X, Y)
    mu = p.mu_init
    trace = TrainingTrace(mse=[mse], mu=[mu])
    eye = np.eye(theta.size)

    while True:
        J = jacobian(MlpModel.from_flat(theta, *dims), X)
        g = J.T @ e
        trace.gradient_norm = float(2.0 * np.linalg.norm(g) / e.size)
        if mse <= p.goal_mse:
            trace.stop_reason = "goal"
            break
        if trace.epoch >= p.max_epochs:
            trace.stop_reason = "max_epochs"
            break
        JtJ = J.T @ J
        accepted = False
        singular = False
        while mu <= p.mu_max:
            try:
                step = -scipy.linalg.cho_solve(scipy.linalg.cho_factor(JtJ + mu * eye), g)
                singular = False
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
                singular = True
                mu *= p.mu_inc
                continue
            cand = theta + step
            cand_mse, cand_e = _mse(MlpModel.from_flat(cand, *dims), X, Y)
            if cand_mse < mse:
                theta, mse, e = cand, cand_mse, cand_e
                mu *= p.mu_dec
                accepted = True
                break
            mu *= p.mu_inc
        if not accepted:
            if singular:
                trace.stop_reason = "singular"
                raise NumericalFailure("damped normal equations remained singular", trace)
            trace.stop_reason = "mu_overflow"
            break
        trace.epoch += 1
        trace.mse.append(mse)
        trace.mu.append(mu)

    return MlpModel.from_flat(theta, *dims), trace


def predict_level(model, x):
    """Round the scalar output to the nearest level code, clamped to 1..3."""
    y = np.asarray(forward(model, x), dtype=float)
    if y.ndim == 2:
        return [predict_level(model, row) for row in np.asarray(x, dtype=float)]
    code = int(np.clip(np.floor(y[0] + 0.5), 1, 3))
    return WarningLevel(code)


def evaluate(model, X, labels):
    """Fraction of samples whose predicted level equals the label."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = [int(v) for v in labels]
    if len(X) == 0 or len(labels) == 0:
        raise EmptyInputError("no samples to evaluate")
    if len(X) != len(labels):
        raise ValueError(f"{len(X)} samples but {len(labels)} labels")
    predicted = predict_level(model, X)
    return sum(int(a) == b for a, b in zip(predicted, labels)) / len(labels)


class BPWarningNetwork(ClassifierMixin, BaseEstimator):
    """Levenberg-Marquardt trained network regressing level codes.

    ``predict`` rounds and clamps the raw output (``decision_function``) to
    the level codes 1..3; ``score`` is accuracy.
    """

    def __init__(self, n_hidden=6, goal_mse=1e-5, max_epochs=1000, mu_init=0.01,
                 mu_inc=10.0, mu_dec=0.1, mu_max=1e10, random_state=0):
        self.n_hidden = n_hidden
        self.goal_mse = goal_mse
        self.max_epochs = max_epochs
        self.mu_init = mu_init
        self.mu_inc = mu_inc
        self.mu_dec = mu_dec
        self.mu_max = mu_max
        self.random_state = random_state

    def _params(self):
        return TrainParams(self.goal_mse, self.max_epochs, self.mu_init, self.mu_inc,
                           self.mu_dec, self.mu_max, self.random_state)

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        params = self._params()
        init = init_network(X.shape[1], self.n_hidden, 1, params.seed)
        self.model_, self.trace_ = train_lm(init, X, y.astype(float), params)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([1, 2, 3])
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        return forward(self.model_, check_array(X))[:, 0]

    def predict(self, X):
        raw = self.decision_function(X)
        return np.clip(np.floor(raw + 0.5), 1, 3).astype(int)
