"""
Tests for ensemble averaging, uncertainty decomposition, NLL and accuracy.
"""

import math
import sys
import os
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from ensembench.backend.exceptions import DimensionError, LabelIndexError, ValidationError
from ensembench.metrics.uncertainty import accuracy, decompose, ensemble_mean, entropy_bits, nll


def random_members(rng, members=4, rows=50, classes=5):
    logits = rng.normal(size=(members, rows, classes)) * 3
    exp = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return exp / exp.sum(axis=-1, keepdims=True)


class TestEnsembleMean(unittest.TestCase):

    def test_single_member_is_identity(self):
        probs = random_members(np.random.default_rng(0), members=1)
        np.testing.assert_array_equal(ensemble_mean(probs), probs[0])

    def test_opposite_members_average_to_uniform(self):
        probs = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
        np.testing.assert_array_equal(ensemble_mean(probs), [[0.5, 0.5]])

    def test_matches_loop(self):
        probs = random_members(np.random.default_rng(1))
        expected = np.zeros(probs.shape[1:])
        for b in range(probs.shape[1]):
            for k in range(probs.shape[2]):
                expected[b, k] = sum(probs[m, b, k] for m in range(probs.shape[0])) / probs.shape[0]
        np.testing.assert_allclose(ensemble_mean(probs), expected, atol=1e-12, rtol=0)

    def test_rejects_wrong_rank(self):
        with self.assertRaises(DimensionError):
            ensemble_mean(np.full((3, 2), 0.5))


class TestDecompose(unittest.TestCase):
    """Test TU/AU/EU decomposition."""

    def test_worked_examples(self):
        # one column per example, four members each
        probs = np.array([
            [[1.0, 0.0], [0.5, 0.5], [1.0, 0.0]],
            [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]],
            [[1.0, 0.0], [0.5, 0.5], [1.0, 0.0]],
            [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]],
        ])
        triple = decompose(probs)
        np.testing.assert_allclose(triple.tu, [0.0, 1.0, 1.0], atol=1e-9, rtol=0)
        np.testing.assert_allclose(triple.au, [0.0, 1.0, 0.0], atol=1e-9, rtol=0)
        np.testing.assert_allclose(triple.eu, [0.0, 0.0, 1.0], atol=1e-9, rtol=0)
        self.assertEqual(len(triple), 3)

    def test_single_member_has_no_epistemic_uncertainty(self):
        triple = decompose(random_members(np.random.default_rng(2), members=1))
        self.assertTrue(np.all(triple.eu == 0.0))

    def test_bounds_and_additivity(self):
        for seed in range(20):
            with self.subTest(seed=seed):
                triple = decompose(random_members(np.random.default_rng(seed)))
                upper = math.log2(5)
                self.assertTrue(np.all(triple.tu >= 0) and np.all(triple.tu <= upper + 1e-9))
                self.assertTrue(np.all(triple.au >= 0) and np.all(triple.au <= upper + 1e-9))
                self.assertTrue(np.all(triple.eu >= 0))
                np.testing.assert_allclose(triple.tu, triple.au + triple.eu, atol=1e-9, rtol=0)

    def test_uniform_prediction_is_maximal(self):
        triple = decompose(np.full((3, 2, 5), 0.2))
        np.testing.assert_allclose(triple.tu, math.log2(5), atol=1e-12)

    def test_member_permutation_invariance(self):
        probs = random_members(np.random.default_rng(3))
        base = decompose(probs)
        permuted = decompose(probs[[2, 0, 3, 1]])
        for a, b in ((base.tu, permuted.tu), (base.au, permuted.au), (base.eu, permuted.eu)):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_member_duplication_invariance(self):
        probs = random_members(np.random.default_rng(4))
        base = decompose(probs)
        doubled = decompose(np.concatenate([probs, probs]))
        for a, b in ((base.tu, doubled.tu), (base.au, doubled.au), (base.eu, doubled.eu)):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_rejects_non_stochastic_rows(self):
        with self.assertRaises(ValidationError):
            decompose(np.array([[[0.7, 0.7]]]))
        with self.assertRaises(ValidationError):
            decompose(np.array([[[1.5, -0.5]]]))

    def test_entropy_zero_log_zero(self):
        self.assertEqual(float(entropy_bits(np.array([1.0, 0.0, 0.0]))), 0.0)


class TestNLL(unittest.TestCase):

    def test_perfect_predictions(self):
        self.assertEqual(nll(np.eye(3), [0, 1, 2]), 0.0)

    def test_uniform(self):
        self.assertAlmostEqual(nll(np.full((4, 5), 0.2), [0, 1, 2, 3]), math.log(5), places=12)

    def test_confident_correct(self):
        probs = np.array([[0.9, 0.1], [0.1, 0.9]])
        self.assertAlmostEqual(nll(probs, [0, 1]), -math.log(0.9), places=12)
        self.assertAlmostEqual(nll(probs, [0, 1]), 0.1054, places=4)

    def test_probability_floor(self):
        self.assertAlmostEqual(nll(np.array([[1.0, 0.0]]), [1]), -math.log(1e-12), places=9)

    def test_invalid_labels(self):
        with self.assertRaises(LabelIndexError):
            nll(np.eye(2), [0, 2])
        with self.assertRaises(LabelIndexError):
            nll(np.eye(2), [0, -1])
        with self.assertRaises(DimensionError):
            nll(np.eye(2), [0])


class TestAccuracy(unittest.TestCase):

    def test_all_and_half_correct(self):
        probs = np.array([[0.8, 0.2], [0.3, 0.7], [0.6, 0.4], [0.1, 0.9]])
        self.assertEqual(accuracy(probs, [0, 1, 0, 1]), 1.0)
        self.assertEqual(accuracy(probs, [0, 0, 0, 0]), 0.5)

    def test_tie_goes_to_lowest_index(self):
        self.assertEqual(accuracy(np.array([[0.5, 0.5]]), [0]), 1.0)
        self.assertEqual(accuracy(np.array([[0.5, 0.5]]), [1]), 0.0)

    def test_ood_labels_never_match(self):
        probs = np.array([[0.8, 0.2], [0.3, 0.7]])
        self.assertEqual(accuracy(probs, [0, -1]), 0.5)


if __name__ == "__main__":
    unittest.main()
