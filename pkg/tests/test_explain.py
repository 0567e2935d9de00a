import numpy as np
import pytest

from ewarn.exceptions import RankDeficientError
from ewarn.explain import explain_model, lime_explain, permutation_importance, sensitivity
from ewarn.network import MlpModel, forward, init_network
from oracles import finite_difference_gradient


def disconnect(model, j):
    wh = model.w_hidden.copy()
    wh[:, j] = 0.0
    return MlpModel(wh, model.b_hidden, model.w_out, model.b_out)


def near_linear(coefs, bias=2.0):
    """tanh(eps * z) / eps is linear to O(eps^2) around the origin."""
    eps = 1e-3
    coefs = np.asarray(coefs, dtype=float)
    return MlpModel(eps * coefs[None, :], [0.0], [[1.0 / eps]], [bias])


class TestSensitivity:
    def test_disconnected_feature_is_zero(self):
        m = disconnect(init_network(5, 4, seed=1), 2)
        s = sensitivity(m, np.random.default_rng(0).normal(size=5))
        assert s[2] == 0.0
        assert np.all(s[[0, 1, 3, 4]] != 0)

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(1, 11))
        m = init_network(p, int(rng.integers(1, 8)), seed=seed)
        x = rng.normal(size=p)
        s = sensitivity(m, x)
        fd = finite_difference_gradient(lambda z: forward(m, z)[0], x)
        np.testing.assert_allclose(s, fd, rtol=1e-5, atol=1e-8)

    def test_linear_regime(self):
        c = [0.5, -1.0, 2.0]
        np.testing.assert_allclose(sensitivity(near_linear(c), np.zeros(3)), c, rtol=1e-12)

    def test_single_point_only(self):
        with pytest.raises(ValueError):
            sensitivity(init_network(2, 2), np.zeros((2, 2)))


class TestPermutationImportance:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.X = rng.normal(size=(40, 4))
        # output depends on the second column alone
        self.model = near_linear([0.0, 1.0, 0.0, 0.0], bias=2.0)
        self.labels = [int(v) for v in np.clip(np.floor(forward(self.model, self.X)[:, 0] + 0.5), 1, 3)]

    def test_only_used_feature_matters(self):
        imp = permutation_importance(self.model, self.X, self.labels, seed=0)
        assert imp[1] > 0.2
        assert np.all(imp[[0, 2, 3]] == 0)
        assert np.argmax(imp) == 1

    def test_mse_metric(self):
        imp = permutation_importance(self.model, self.X, self.labels, metric="mse")
        assert imp[1] > 0 and np.all(imp[[0, 2, 3]] == 0)

    def test_deterministic(self):
        a = permutation_importance(self.model, self.X, self.labels, seed=5)
        b = permutation_importance(self.model, self.X, self.labels, seed=5)
        assert a.tobytes() == b.tobytes()

    def test_disconnected_zero_for_random_network(self):
        m = disconnect(init_network(4, 5, seed=2), 0)
        imp = permutation_importance(m, self.X, self.labels, metric="mse")
        assert imp[0] == 0.0

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            permutation_importance(self.model, self.X, self.labels, metric="f1")
        with pytest.raises(ValueError):
            permutation_importance(self.model, self.X, self.labels, repeats=0)


class TestLime:
    def test_recovers_linear_model(self):
        c = [0.4, -1.3, 0.0, 2.2]
        x = np.array([0.1, -0.2, 0.3, 0.05])
        s = lime_explain(near_linear(c, bias=1.5), x, n_samples=1000, seed=0)
        np.testing.assert_allclose(s.coefficients, c, atol=1e-2)
        assert s.intercept == pytest.approx(1.5, abs=1e-2)
        assert s.fit_quality > 0.999

    def test_constant_model(self):
        m = MlpModel(np.zeros((2, 3)), np.zeros(2), np.zeros((1, 2)), [2.0])
        s = lime_explain(m, np.zeros(3))
        np.testing.assert_allclose(s.coefficients, 0, atol=1e-12)
        assert s.intercept == pytest.approx(2.0)
        assert s.fit_quality == 1.0

    def test_disconnected_feature_small(self):
        m = disconnect(init_network(5, 4, seed=3), 1)
        s = lime_explain(m, np.zeros(5), n_samples=2000)
        assert abs(s.coefficients[1]) < 0.05

    def test_deterministic(self):
        m = init_network(3, 3, seed=0)
        a = lime_explain(m, np.ones(3), seed=4)
        b = lime_explain(m, np.ones(3), seed=4)
        assert a.coefficients.tobytes() == b.coefficients.tobytes()
        assert a.fit_quality == b.fit_quality

    def test_rank_deficient(self):
        # every perturbation far beyond the kernel gets weight that underflows to 0
        m = init_network(3, 2, seed=0)
        with pytest.raises((RankDeficientError, ValueError)):
            lime_explain(m, np.zeros(3), n_samples=3)

    def test_rank_deficient_design(self, monkeypatch):
        monkeypatch.setattr(np.linalg, "matrix_rank", lambda A: 1)
        with pytest.raises(RankDeficientError):
            lime_explain(init_network(3, 2, seed=0), np.zeros(3))


def test_explain_model_dict():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 3))
    m = init_network(3, 4, seed=0)
    doc = explain_model(m, X, [1] * 10, X[-1], ("A", "B", "C"), n_samples=200).to_dict()
    assert set(doc["indicators"]) == {"A", "B", "C"}
    assert set(doc["indicators"]["A"]) == {"sensitivity", "importance", "local_coef"}
    assert "local_fit_quality" in doc and "local_intercept" in doc
