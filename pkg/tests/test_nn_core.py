"""
Tests for the dense training stack: tensors, losses, optimizer, schedules,
network state and the training loop.
"""

import math
import sys
import os
import unittest
from concurrent.futures import ThreadPoolExecutor

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from ensembench.backend.exceptions import DimensionError, LabelIndexError, NonFiniteError
from ensembench.data.synth import iterate_minibatches
from ensembench.models.config import TrainConfig
from ensembench.nn import (
    Adam,
    AdamState,
    DenseLayer,
    Network,
    ReLU,
    ScheduleKind,
    adam_step,
    as_tensor,
    check_finite,
    cycle_end_epochs,
    fit,
    lr_at,
    multi_head_cross_entropy,
    softmax,
    softmax_cross_entropy,
)
from ensembench.nn.layers import dense_forward
from tests.helpers import toy_dataset


class TestTensorHelpers(unittest.TestCase):
    """Test tensor conversion and checks."""

    def test_as_tensor_is_float64(self):
        t = as_tensor([[1, 2], [3, 4]])
        self.assertEqual(t.dtype, np.float64)
        self.assertTrue(t.flags['C_CONTIGUOUS'])

    def test_check_finite(self):
        check_finite("ok", np.zeros(3))
        with self.assertRaises(NonFiniteError):
            check_finite("bad", np.array([0.0, np.nan]))
        with self.assertRaises(ArithmeticError):
            check_finite("bad", np.array([np.inf]))

    def test_dense_shape_mismatch(self):
        layer = DenseLayer.initialize(3, 2, np.random.default_rng(0))
        with self.assertRaises(DimensionError):
            layer.forward(np.zeros((4, 5)))
        with self.assertRaises(ValueError):
            layer.forward(np.zeros(3))


class TestDenseForward(unittest.TestCase):
    """Test the affine forward pass against hand-computed values."""

    def test_two_by_two(self):
        layer = DenseLayer(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(dense_forward(layer, [[1.0, 1.0]]), [[5.0, 7.0]])

    def test_matches_scalar_loops(self):
        rng = np.random.default_rng(4)
        layer = DenseLayer(rng.normal(size=(4, 3)), rng.normal(size=3))
        x = rng.normal(size=(5, 4))
        out = dense_forward(layer, x)
        weight, bias = layer.weight.value, layer.bias.value
        for b in range(5):
            for j in range(3):
                total = bias[j]
                for i in range(4):
                    total += x[b, i] * weight[i, j]
                self.assertAlmostEqual(out[b, j], total, delta=1e-12)

    def test_relu_forward_is_safe_across_threads(self):
        network = Network([DenseLayer.initialize(16, 32, np.random.default_rng(0)), ReLU(),
                           DenseLayer.initialize(32, 4, np.random.default_rng(1))])
        inputs = [np.random.default_rng(seed).normal(size=(64, 16)) for seed in range(16)]
        expected = [network.forward(x) for x in inputs]
        with ThreadPoolExecutor(max_workers=8) as pool:
            for _ in range(5):
                results = list(pool.map(network.forward, inputs))
                for got, want in zip(results, expected):
                    np.testing.assert_array_equal(got, want)


class TestLosses(unittest.TestCase):
    """Test softmax and cross-entropy."""

    def test_softmax_rows_sum_to_one(self):
        logits = np.random.default_rng(1).normal(size=(6, 4)) * 50
        probs = softmax(logits)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        self.assertTrue(np.all(probs >= 0))

    def test_zero_logits_give_ln_k(self):
        loss, grad = softmax_cross_entropy(np.zeros((3, 2)), np.array([0, 1, 0]))
        self.assertAlmostEqual(loss, math.log(2), places=12)
        np.testing.assert_allclose(grad, np.array([[-0.5, 0.5], [0.5, -0.5], [-0.5, 0.5]]) / 3)

    def test_confident_correct_logits(self):
        loss, _ = softmax_cross_entropy(np.array([[10.0, 0.0]]), np.array([0]))
        self.assertAlmostEqual(loss, 4.54e-5, delta=1e-7)
        self.assertAlmostEqual(loss, math.log1p(math.exp(-10.0)), places=15)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        logits = rng.normal(size=(3, 4))
        labels = np.array([0, 3, 1])
        _, grad = softmax_cross_entropy(logits, labels)
        eps = 1e-5
        numeric = np.zeros_like(logits)
        for index in np.ndindex(*logits.shape):
            bumped = logits.copy()
            bumped[index] += eps
            upper, _ = softmax_cross_entropy(bumped, labels)
            bumped[index] -= 2 * eps
            lower, _ = softmax_cross_entropy(bumped, labels)
            numeric[index] = (upper - lower) / (2 * eps)
        self.assertLessEqual(np.max(np.abs(grad - numeric)), 1e-6)

    def test_label_out_of_range(self):
        with self.assertRaises(LabelIndexError):
            softmax_cross_entropy(np.zeros((2, 3)), np.array([0, 3]))
        with self.assertRaises(IndexError):
            softmax_cross_entropy(np.zeros((2, 3)), np.array([-1, 0]))

    def test_multi_head_sums_heads(self):
        logits = np.zeros((4, 6))
        labels = np.zeros((4, 2), dtype=np.int64)
        loss, grad = multi_head_cross_entropy(logits, labels, heads=2)
        self.assertAlmostEqual(loss, 2 * math.log(3), places=12)
        self.assertEqual(grad.shape, (4, 6))

    def test_multi_head_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            multi_head_cross_entropy(np.zeros((4, 5)), np.zeros((4, 2), dtype=np.int64), heads=2)


class TestSchedules(unittest.TestCase):
    """Test learning-rate schedules."""

    def test_constant(self):
        self.assertEqual(lr_at(ScheduleKind.CONSTANT, 7, 10, 0.01), 0.01)

    def test_cycle_ends(self):
        self.assertEqual(cycle_end_epochs(40, 4), [10, 20, 30, 40])
        self.assertEqual(cycle_end_epochs(10, 4), [3, 6, 9, 10])

    def test_cosine_restarts_at_cycle_start(self):
        rates = [lr_at(ScheduleKind.COSINE_CYCLIC, e, 40, 0.1, 4) for e in range(40)]
        for start in (0, 10, 20, 30):
            self.assertAlmostEqual(rates[start], 0.1, places=15)
        # decreasing inside a cycle
        for e in range(1, 10):
            self.assertLess(rates[e], rates[e - 1])
        self.assertAlmostEqual(rates[5], 0.05, places=12)
        self.assertGreater(rates[9], 0.0)

    def test_short_final_cycle(self):
        rates = [lr_at(ScheduleKind.COSINE_CYCLIC, e, 10, 1.0, 4) for e in range(10)]
        self.assertAlmostEqual(rates[9], 1.0)
        self.assertAlmostEqual(rates[7], 0.75)

    def test_epoch_out_of_range(self):
        with self.assertRaises(LabelIndexError):
            lr_at(ScheduleKind.CONSTANT, 10, 10, 0.1)
        with self.assertRaises(LabelIndexError):
            lr_at(ScheduleKind.COSINE_CYCLIC, -1, 10, 0.1, 2)


class TestAdam(unittest.TestCase):
    """Test the Adam update."""

    def test_first_step_moves_by_lr(self):
        theta = np.array([1.0, -2.0, 3.0])
        grad = np.array([0.5, -4.0, 0.0])
        state = AdamState()
        adam_step([theta], [grad], state, lr=0.1, l2=0.0)
        # bias-corrected first step is lr * sign(g) for nonzero g
        np.testing.assert_allclose(theta, [0.9, -1.9, 3.0], atol=1e-6)
        self.assertEqual(state.t, 1)

    def test_l2_is_added_to_gradient(self):
        theta = np.array([2.0])
        state = AdamState()
        adam_step([theta], [np.zeros(1)], state, lr=0.1, l2=0.5)
        np.testing.assert_allclose(theta, [1.9], atol=1e-6)

    def test_lr_scale(self):
        rng = np.random.default_rng(0)
        a = DenseLayer.initialize(2, 2, rng)
        a.weight.lr_scale = 0.5
        before = a.weight.value.copy()
        a.weight.grad[...] = 1.0
        optimizer = Adam(a.parameters(), lr=0.1)
        optimizer.step()
        np.testing.assert_allclose(before - a.weight.value, 0.05, atol=1e-6)

    def test_mismatched_lengths(self):
        with self.assertRaises(DimensionError):
            adam_step([np.zeros(2)], [], AdamState(), lr=0.1, l2=0.0)

    def test_minimises_quadratic(self):
        theta = np.array([3.0, -2.0])
        state = AdamState()
        for _ in range(2000):
            adam_step([theta], [2.0 * theta], state, lr=0.05, l2=0.0)
        np.testing.assert_allclose(theta, 0.0, atol=0.1)


class TestNetworkState(unittest.TestCase):
    """Test parameter naming, counting and state restore."""

    def setUp(self):
        rng = np.random.default_rng(4)
        self.network = Network([DenseLayer.initialize(5, 3, rng), ReLU(),
                                DenseLayer.initialize(3, 2, rng)])

    def test_named_parameters(self):
        names = [name for name, _ in self.network.named_parameters()]
        self.assertEqual(names, ["layers.0.weight", "layers.0.bias",
                                 "layers.2.weight", "layers.2.bias"])
        self.assertEqual(self.network.parameter_count, 5 * 3 + 3 + 3 * 2 + 2)

    def test_state_round_trip(self):
        x = np.random.default_rng(5).normal(size=(4, 5))
        expected = self.network.forward(x)
        state = self.network.state()
        for p in self.network.parameters():
            p.value[...] = 0.0
        self.network.load_state(state)
        np.testing.assert_array_equal(self.network.forward(x), expected)

    def test_state_is_a_copy(self):
        state = self.network.state()
        state["layers.0.bias"][...] = 9.0
        self.assertFalse(np.any(self.network.parameters()[1].value == 9.0))

    def test_load_state_mismatch(self):
        state = self.network.state()
        del state["layers.2.bias"]
        with self.assertRaises(DimensionError):
            self.network.load_state(state)
        state = self.network.state()
        state["layers.0.weight"] = np.zeros((2, 2))
        with self.assertRaises(DimensionError):
            self.network.load_state(state)


class TestFit(unittest.TestCase):
    """Test the shared training loop."""

    def _problem(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(64, 2))
        y = (x[:, 0] + x[:, 1] > 0).astype(np.int64)
        network = Network([DenseLayer.initialize(2, 2, rng)])

        def batches(batch_rng):
            order = batch_rng.permutation(len(x))
            for start in range(0, len(x), 16):
                index = order[start:start + 16]
                yield x[index], y[index]

        return network, batches, x, y

    def test_loss_decreases_and_hook_runs(self):
        network, batches, x, y = self._problem()
        seen = []
        config = TrainConfig(epochs=30, batch_size=16, initial_lr=0.05, l2_penalty=0.0)
        history = fit(network, config, batches, softmax_cross_entropy,
                      np.random.default_rng(1), lambda epoch, net: seen.append(epoch))
        self.assertEqual(seen, list(range(1, 31)))
        self.assertEqual(len(history.losses), 30)
        self.assertLess(history.final_loss, history.losses[0])
        accuracy = np.mean(network.forward(x).argmax(axis=1) == y)
        self.assertGreater(accuracy, 0.9)

    def test_separable_set_reaches_low_loss(self):
        dataset = toy_dataset(seed=2)
        rng = np.random.default_rng(0)
        network = Network([DenseLayer.initialize(16, 2, rng)])
        config = TrainConfig(epochs=200, batch_size=16, initial_lr=1e-2, l2_penalty=0.0)

        def batches(batch_rng):
            return iterate_minibatches(dataset.train_x, dataset.train_y, 16, batch_rng)

        history = fit(network, config, batches, softmax_cross_entropy, rng)
        self.assertLess(history.final_loss, 0.1)

    def test_records_schedule(self):
        network, batches, _, _ = self._problem()
        config = TrainConfig(epochs=8, batch_size=16, initial_lr=0.02,
                             schedule=ScheduleKind.COSINE_CYCLIC, num_cycles=2)
        history = fit(network, config, batches, softmax_cross_entropy, np.random.default_rng(1))
        self.assertEqual(history.learning_rates[0], 0.02)
        self.assertEqual(history.learning_rates[4], 0.02)

    def test_non_finite_loss_aborts(self):
        network, batches, _, _ = self._problem()
        config = TrainConfig(epochs=2, batch_size=16)

        def broken_loss(logits, labels):
            return float('nan'), np.zeros_like(logits)

        with self.assertRaises(NonFiniteError):
            fit(network, config, batches, broken_loss, np.random.default_rng(1))

    def test_deterministic(self):
        config = TrainConfig(epochs=5, batch_size=16, initial_lr=0.05)
        first, batches, x, _ = self._problem()
        fit(first, config, batches, softmax_cross_entropy, np.random.default_rng(7))
        second, batches, _, _ = self._problem()
        fit(second, config, batches, softmax_cross_entropy, np.random.default_rng(7))
        np.testing.assert_array_equal(first.forward(x), second.forward(x))


if __name__ == "__main__":
    unittest.main()
