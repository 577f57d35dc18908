import math

import numpy as np
import pytest

from gols.model import (MlpSpec, backprop_gradient, forward_loss,
                        forward_outputs, hidden_units_heuristic, param_count)


def random_problem(seed, layers, activation, head, batch=5):
    rng = np.random.default_rng(seed)
    spec = MlpSpec(layers, activation, head)
    x = rng.uniform(-0.5, 0.5, param_count(spec))
    feats = rng.uniform(-1.0, 1.0, (batch, spec.n_inputs))
    targets = np.zeros((batch, spec.n_outputs))
    targets[np.arange(batch), rng.integers(0, spec.n_outputs, batch)] = 1.0
    return spec, x, feats, targets


def central_difference(spec, x, feats, targets, h=1e-6):
    fd = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd[i] = (forward_loss(spec, x + e, feats, targets)
                 - forward_loss(spec, x - e, feats, targets)) / (2 * h)
    return fd


class TestForwardLoss:
    def test_zero_weights_mse_symmetry(self):
        # zero weights make every sigmoid output 0.5
        spec = MlpSpec((4, 5, 3), "sigmoid", "mse")
        x = np.zeros(param_count(spec))
        feats = np.random.default_rng(0).normal(size=(7, 4))
        targets = np.zeros((7, 3))
        targets[:, 1] = 1.0
        assert forward_loss(spec, x, feats, targets) == pytest.approx(0.25, abs=1e-15)

    def test_zero_weights_ce_uniform_softmax(self):
        spec = MlpSpec((6, 4, 10), "tanh", "ce")
        x = np.zeros(param_count(spec))
        feats = np.random.default_rng(1).normal(size=(3, 6))
        targets = np.zeros((3, 10))
        targets[:, 4] = 1.0
        assert forward_loss(spec, x, feats, targets) == pytest.approx(
            math.log(10.0), rel=1e-12)

    def test_hand_computed_1_1_1_net(self):
        # tanh hidden unit, sigmoid/MSE head, all scalars done by hand
        spec = MlpSpec((1, 1, 1), "tanh", "mse")
        w1, b1, w2, b2 = 0.3, -0.2, 1.7, 0.05
        x = np.array([w1, b1, w2, b2])
        u, t = 0.8, 1.0
        a = math.tanh(w1 * u + b1)
        y = 1.0 / (1.0 + math.exp(-(w2 * a + b2)))
        expected = (y - t) ** 2
        got = forward_loss(spec, x, np.array([[u]]), np.array([[t]]))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_deterministic(self):
        spec, x, feats, targets = random_problem(3, (4, 6, 3), "relu", "ce")
        a = forward_loss(spec, x, feats, targets)
        b = forward_loss(spec, x, feats, targets)
        assert a == b

    def test_empty_batch_rejected(self):
        spec = MlpSpec((2, 2), "sigmoid", "mse")
        with pytest.raises(ValueError):
            forward_loss(spec, np.zeros(param_count(spec)),
                         np.empty((0, 2)), np.empty((0, 2)))

    def test_nonfinite_weights_propagate(self):
        spec = MlpSpec((2, 3, 2), "relu", "mse")
        x = np.full(param_count(spec), np.nan)
        loss = forward_loss(spec, x, np.ones((1, 2)), np.array([[1.0, 0.0]]))
        assert not math.isfinite(loss)


class TestBackprop:
    @pytest.mark.parametrize("activation", ["sigmoid", "tanh", "relu"])
    @pytest.mark.parametrize("head", ["mse", "ce"])
    def test_matches_finite_differences(self, activation, head):
        spec, x, feats, targets = random_problem(11, (3, 4, 4, 2), activation, head)
        g = backprop_gradient(spec, x, feats, targets).gradient
        fd = central_difference(spec, x, feats, targets)
        rel = np.abs(g - fd) / np.maximum(1.0, np.abs(g))
        assert rel.max() <= 1e-6

    def test_duplicated_sample_equals_single(self):
        spec, x, feats, targets = random_problem(5, (3, 5, 2), "sigmoid", "mse",
                                                 batch=1)
        single = backprop_gradient(spec, x, feats, targets).gradient
        dup = backprop_gradient(spec, x, np.repeat(feats, 4, axis=0),
                                np.repeat(targets, 4, axis=0)).gradient
        assert dup == pytest.approx(single, rel=1e-12, abs=1e-15)

    def test_two_sample_batch_averages(self):
        spec, x, feats, targets = random_problem(6, (3, 5, 2), "tanh", "ce",
                                                 batch=2)
        pair = backprop_gradient(spec, x, feats, targets).gradient
        g0 = backprop_gradient(spec, x, feats[:1], targets[:1]).gradient
        g1 = backprop_gradient(spec, x, feats[1:], targets[1:]).gradient
        assert pair == pytest.approx((g0 + g1) / 2, rel=1e-12, abs=1e-15)

    def test_perfect_fit_zero_gradient(self):
        spec, x, feats, _ = random_problem(7, (4, 6, 3), "sigmoid", "mse")
        fitted_targets = forward_outputs(spec, x, feats)
        g = backprop_gradient(spec, x, feats, fitted_targets).gradient
        assert np.abs(g).max() <= 1e-12

    def test_batch_order_invariance(self):
        spec, x, feats, targets = random_problem(8, (4, 5, 3), "relu", "ce",
                                                 batch=16)
        perm = np.random.default_rng(9).permutation(16)
        a = backprop_gradient(spec, x, feats, targets)
        b = backprop_gradient(spec, x, feats[perm], targets[perm])
        assert a.loss == pytest.approx(b.loss, rel=1e-12)
        assert a.gradient == pytest.approx(b.gradient, rel=1e-12, abs=1e-12)

    def test_loss_matches_forward(self):
        spec, x, feats, targets = random_problem(10, (3, 4, 2), "sigmoid", "ce")
        assert backprop_gradient(spec, x, feats, targets).loss == \
            forward_loss(spec, x, feats, targets)


class TestMlpSpec:
    def test_param_count(self):
        # (4+1)*10 + (10+1)*3 = 83
        assert param_count(MlpSpec((4, 10, 3))) == 83

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            MlpSpec((4, 0, 3))
        with pytest.raises(ValueError):
            MlpSpec((4,))

    def test_bad_activation(self):
        with pytest.raises(ValueError):
            MlpSpec((2, 2), hidden_activation="gelu")

    def test_weight_length_checked(self):
        spec = MlpSpec((2, 2))
        with pytest.raises(ValueError):
            forward_loss(spec, np.zeros(5), np.ones((1, 2)), np.ones((1, 2)))


class TestHiddenUnitsHeuristic:
    @pytest.mark.parametrize("m,d,k,expected", [
        (150, 4, 3, 3),      # iris
        (699, 9, 2, 8),      # cancer1
        (7200, 21, 3, 20),   # thyroid1
    ])
    def test_published_rows(self, m, d, k, expected):
        assert hidden_units_heuristic(m, d, k, 1.5) == expected

    def test_clamped_to_one(self):
        # tiny M drives the capacity bound non-positive
        assert hidden_units_heuristic(4, 5, 3, 1.5) == 1

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            hidden_units_heuristic(0, 4, 3)
        with pytest.raises(ValueError):
            hidden_units_heuristic(10, 4, 3, cr=0.0)
