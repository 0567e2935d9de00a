import json
import math

import numpy as np
import pytest
import scipy.linalg
from sklearn.base import clone

from ewarn.exceptions import EmptyInputError, NumericalFailure
from ewarn.grading import WarningLevel
from ewarn.network import (
    BPWarningNetwork, MlpModel, TrainParams, evaluate, forward, hidden_candidates,
    init_network, jacobian, predict_level, train_lm,
)
from oracles import finite_difference_jacobian, mlp_forward_scalar


def constant_model(n_in, c):
    return MlpModel(np.zeros((2, n_in)), np.zeros(2), np.zeros((1, 2)), [c])


class TestHiddenCandidates:
    def test_case_study(self):
        cands, default = hidden_candidates(10, 1)
        assert cands == list(range(5, 14))
        assert default == 6

    def test_exact_roots(self):
        assert hidden_candidates(3, 1)[0] == list(range(3, 13))
        assert hidden_candidates(8, 1)[0] == list(range(4, 14))

    def test_invalid(self):
        with pytest.raises(ValueError):
            hidden_candidates(0, 1)


class TestInit:
    def test_deterministic(self):
        a, b = init_network(10, 6, 1, seed=3), init_network(10, 6, 1, seed=3)
        np.testing.assert_array_equal(a.flat(), b.flat())

    def test_seeds_differ(self):
        assert not np.array_equal(init_network(10, 6, 1, 1).flat(), init_network(10, 6, 1, 2).flat())

    def test_shapes(self):
        m = init_network(10, 6, 1, seed=0)
        assert m.w_hidden.shape == (6, 10)
        assert m.b_hidden.shape == (6,)
        assert m.w_out.shape == (1, 6)
        assert m.b_out.shape == (1,)
        assert m.n_params == 10 * 6 + 6 + 6 + 1
        assert np.all(np.abs(m.flat()) <= 0.5)

    def test_flat_round_trip(self):
        m = init_network(4, 3, 2, seed=1)
        again = MlpModel.from_flat(m.flat(), 4, 3, 2)
        np.testing.assert_array_equal(again.flat(), m.flat())


class TestForward:
    def test_zero_network(self):
        assert forward(constant_model(3, 1.25), [9.0, -4.0, 2.0])[0] == 1.25

    def test_tanh_zero(self):
        m = MlpModel([[1.0]], [0.0], [[1.0]], [0.0])
        assert forward(m, [0.0])[0] == 0.0

    def test_hand_oracle(self):
        wh = [[0.3, -1.2], [0.8, 0.5]]
        bh = [0.1, -0.4]
        wo = [[1.5, -0.7]]
        bo = [0.25]
        x = [0.6, -0.9]
        expected = 1.5 * math.tanh(0.3 * 0.6 + 1.2 * 0.9 + 0.1) - 0.7 * math.tanh(0.8 * 0.6 - 0.5 * 0.9 - 0.4) + 0.25
        assert forward(MlpModel(wh, bh, wo, bo), x)[0] == pytest.approx(expected, abs=1e-12)
        assert mlp_forward_scalar(wh, bh, wo, bo, x) == pytest.approx(expected, abs=1e-15)

    def test_batch_matches_single(self):
        m = init_network(4, 3, 1, seed=0)
        X = np.random.default_rng(0).normal(size=(5, 4))
        np.testing.assert_allclose(forward(m, X)[:, 0], [forward(m, x)[0] for x in X], rtol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="expects 10"):
            forward(init_network(10, 6), np.zeros(9))

    def test_bounded(self):
        m = init_network(10, 6, seed=0)
        y = forward(m, np.full((3, 10), 1e6))
        assert np.all(np.isfinite(y))
        assert np.all(np.abs(y) <= np.abs(m.w_out).sum() + np.abs(m.b_out).sum())


@pytest.mark.parametrize("seed", range(20))
def test_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n_in, n_h, n_out = rng.integers(1, 5), rng.integers(1, 6), rng.integers(1, 3)
    m = init_network(n_in, n_h, n_out, seed=seed)
    X = rng.normal(size=(4, n_in))
    J = jacobian(m, X)
    fd = finite_difference_jacobian(
        lambda th: forward(MlpModel.from_flat(th, n_in, n_h, n_out), X).reshape(-1), m.flat())
    assert np.linalg.norm(J - fd) / np.linalg.norm(J) < 1e-4


class TestTrain:
    def test_already_fitted(self):
        m = constant_model(2, 2.0)
        net, trace = train_lm(m, np.zeros((3, 2)), np.full(3, 2.0))
        assert trace.epoch == 0 and trace.stop_reason == "goal"
        np.testing.assert_array_equal(net.flat(), m.flat())

    def test_linear_target(self):
        x = np.linspace(-1, 1, 10)[:, None]
        y = 2 * x[:, 0] + 1
        net, trace = train_lm(init_network(1, 3, 1, seed=0), x, y, TrainParams(max_epochs=100))
        assert trace.stop_reason == "goal"
        assert trace.mse[-1] <= 1e-5
        assert trace.epoch <= 100

    def test_accepted_steps_never_increase(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 3))
        y = np.sin(X).sum(axis=1)
        _, trace = train_lm(init_network(3, 4, 1, seed=1), X, y, TrainParams(goal_mse=1e-12, max_epochs=60))
        assert np.all(np.diff(trace.mse) <= 0)
        assert trace.epoch == len(trace.mse) - 1

    def test_max_epochs(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        _, trace = train_lm(init_network(2, 2, 1, seed=0), X, y, TrainParams(goal_mse=1e-12, max_epochs=3))
        assert trace.stop_reason in ("max_epochs", "mu_overflow")
        assert trace.epoch <= 3

    def test_mu_overflow_at_local_minimum(self):
        # one hidden unit cannot fit random targets; LM stalls and mu escalates
        rng = np.random.default_rng(3)
        X = rng.normal(size=(12, 2))
        y = rng.normal(size=12)
        p = TrainParams(goal_mse=1e-12, max_epochs=1000, mu_max=1e4)
        _, trace = train_lm(init_network(2, 1, 1, seed=0), X, y, p)
        assert trace.stop_reason == "mu_overflow"
        assert trace.epoch < 1000

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(15, 3))
        y = X[:, 0] ** 2
        a, _ = train_lm(init_network(3, 4, 1, seed=9), X, y)
        b, _ = train_lm(init_network(3, 4, 1, seed=9), X, y)
        assert a.flat().tobytes() == b.flat().tobytes()

    def test_singular_raises_with_trace(self, monkeypatch):
        def boom(*args, **kwargs):
            raise np.linalg.LinAlgError("not positive definite")

        monkeypatch.setattr(scipy.linalg, "cho_factor", boom)
        with pytest.raises(NumericalFailure) as exc:
            train_lm(init_network(2, 2, 1, seed=0), np.eye(2), np.array([1.0, 2.0]))
        assert exc.value.trace is not None
        assert exc.value.trace.stop_reason == "singular"

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            train_lm(init_network(2, 2), np.empty((0, 2)), np.empty(0))
        with pytest.raises(ValueError):
            train_lm(init_network(2, 2), np.zeros((3, 2)), np.zeros(2))

    @pytest.mark.parametrize("kwargs", [
        {"goal_mse": 0}, {"mu_inc": 1.0}, {"mu_dec": 1.0}, {"mu_dec": 0.0}, {"mu_init": 0},
    ])
    def test_param_invariants(self, kwargs):
        with pytest.raises(ValueError):
            TrainParams(**kwargs)

    def test_trace_csv(self):
        x = np.linspace(-1, 1, 10)[:, None]
        _, trace = train_lm(init_network(1, 3, 1, seed=0), x, 2 * x[:, 0] + 1)
        lines = trace.to_csv().splitlines()
        assert lines[0] == "epoch,mse"
        assert len(lines) == trace.epoch + 2
        assert float(lines[-1].split(",")[1]) == trace.mse[-1]


class TestPredictLevel:
    @pytest.mark.parametrize("raw, level", [
        (0.9, WarningLevel.MINOR), (2.4, WarningLevel.WARNING), (3.7, WarningLevel.SEVERE),
        (-4.0, WarningLevel.MINOR), (1.5, WarningLevel.WARNING),
    ])
    def test_rounding(self, raw, level):
        assert predict_level(constant_model(3, raw), np.zeros(3)) is level

    def test_batch(self):
        assert predict_level(constant_model(2, 2.2), np.zeros((3, 2))) == [WarningLevel.WARNING] * 3


class TestEvaluate:
    def test_ten_of_eleven(self):
        labels = [1] * 10 + [2]
        assert evaluate(constant_model(2, 1.0), np.zeros((11, 2)), labels) == pytest.approx(0.9091, abs=1e-4)

    def test_all_and_none(self):
        assert evaluate(constant_model(2, 3.0), np.zeros((4, 2)), [3] * 4) == 1.0
        assert evaluate(constant_model(2, 3.0), np.zeros((4, 2)), [1] * 4) == 0.0

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            evaluate(constant_model(2, 1.0), np.zeros((0, 2)), [])


class TestSerialization:
    def test_json_round_trip(self):
        m = init_network(10, 6, 1, seed=7)
        doc = json.loads(json.dumps(m.to_dict()))
        assert doc["activations"] == {"hidden": "tansig", "output": "purelin"}
        assert len(doc["w_hidden"]) == 60
        again = MlpModel.from_dict(doc)
        assert again.flat().tobytes() == m.flat().tobytes()

    def test_rejects_foreign_document(self):
        doc = init_network(2, 2).to_dict()
        doc["version"] = 99
        with pytest.raises(ValueError):
            MlpModel.from_dict(doc)


class TestEstimator:
    def test_fit_predict_score(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 3))
        y = 1 + (X[:, 0] > 0).astype(int) + (X[:, 0] > 1).astype(int)
        est = BPWarningNetwork(n_hidden=5).fit(X, y)
        assert est.score(X, y) == 1.0
        assert set(est.predict(X)) <= {1, 2, 3}
        assert est.trace_.stop_reason == "goal"

    def test_clone(self):
        est = BPWarningNetwork(n_hidden=4, random_state=3)
        assert clone(est).get_params() == est.get_params()
