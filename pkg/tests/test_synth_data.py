"""
Tests for shape rendering and synthetic dataset generation.
"""

import math
import sys
import os
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from ensembench.backend.exceptions import ConfigurationError, DimensionError, ValidationError
from ensembench.data import OOD_LABEL, ShapePose, augment_flips, generate, iterate_minibatches, render_shape
from ensembench.data.shapes import SHAPES
from ensembench.models.config import DatasetSpec, TrainConfig
from ensembench.nn import DenseLayer, Network, fit, softmax_cross_entropy


class TestRenderShape(unittest.TestCase):
    """Test shape rasterisation."""

    def test_disk_centre_pixel(self):
        image = render_shape("disk", ShapePose(intensity=0.7), 15)
        self.assertEqual(image.shape, (225,))
        self.assertEqual(image[7 * 15 + 7], 0.7)

    def test_zero_intensity(self):
        for kind in SHAPES:
            with self.subTest(kind=kind):
                self.assertFalse(np.any(render_shape(kind, ShapePose(intensity=0.0), 16)))

    def test_every_shape_draws_something(self):
        for kind in SHAPES:
            with self.subTest(kind=kind):
                image = render_shape(kind, ShapePose(), 16)
                self.assertGreater(np.count_nonzero(image), 0)
                self.assertTrue(np.all((image >= 0.0) & (image <= 1.0)))

    def test_rotated_bar_is_transposed_bar(self):
        plain = render_shape("bar", ShapePose(), 16).reshape(16, 16)
        rotated = render_shape("bar", ShapePose(rotation=math.pi / 2), 16).reshape(16, 16)
        self.assertLessEqual(np.count_nonzero(rotated != plain.T), 2)
        self.assertGreater(np.count_nonzero(plain != plain.T), 2)

    def test_unknown_kind(self):
        with self.assertRaises(ValidationError):
            render_shape("hexagon", ShapePose(), 16)

    def test_invalid_pose(self):
        with self.assertRaises(ValidationError):
            render_shape("disk", ShapePose(center=(1.5, 0.5)), 16)
        with self.assertRaises(ValidationError):
            render_shape("disk", ShapePose(intensity=1.5), 16)


class TestGenerate(unittest.TestCase):
    """Test dataset generation."""

    @classmethod
    def setUpClass(cls):
        cls.spec = DatasetSpec(image_side=8, per_class_train=20, per_class_id_test=4,
                               per_class_ood_test=3, seed=11)
        cls.dataset = generate(cls.spec)

    def test_split_counts(self):
        self.assertEqual(self.dataset.counts(),
                         {'train': 85, 'validation': 15, 'id_test': 20, 'ood_test': 15})
        self.assertEqual(self.dataset.train_x.shape, (85, 64))
        self.assertEqual(self.dataset.input_dim, 64)
        self.assertEqual(self.dataset.num_classes, 5)

    def test_stratified(self):
        np.testing.assert_array_equal(np.bincount(self.dataset.train_y), [17] * 5)
        np.testing.assert_array_equal(np.bincount(self.dataset.val_y), [3] * 5)
        np.testing.assert_array_equal(np.bincount(self.dataset.ood_test_kind), [3] * 5)

    def test_pixel_range(self):
        for array in (self.dataset.train_x, self.dataset.val_x,
                      self.dataset.id_test_x, self.dataset.ood_test_x):
            self.assertTrue(np.all((array >= 0.0) & (array <= 1.0)))

    def test_deterministic(self):
        again = generate(self.spec)
        np.testing.assert_array_equal(again.train_x, self.dataset.train_x)
        np.testing.assert_array_equal(again.ood_test_x, self.dataset.ood_test_x)
        other = generate(DatasetSpec(image_side=8, per_class_train=20, per_class_id_test=4,
                                     per_class_ood_test=3, seed=12))
        self.assertFalse(np.array_equal(other.train_x, self.dataset.train_x))

    def test_combined_test(self):
        x, y = self.dataset.combined_test()
        self.assertEqual(x.shape, (35, 64))
        np.testing.assert_array_equal(y[:20], self.dataset.id_test_y)
        self.assertTrue(np.all(y[20:] == OOD_LABEL))

    def test_invalid_spec(self):
        with self.assertRaises(ConfigurationError):
            generate(DatasetSpec(id_classes=["disk"]))

    def test_ood_classes_never_labelled_in_training_data(self):
        self.assertFalse(set(self.spec.id_classes) & set(self.spec.ood_classes))
        for labels in (self.dataset.train_y, self.dataset.val_y, self.dataset.id_test_y):
            self.assertNotIn(OOD_LABEL, labels)
            self.assertTrue(np.all((labels >= 0) & (labels < len(self.spec.id_classes))))
        # OOD kinds index the OOD class list, not the ID labels
        self.assertEqual(len(self.dataset.ood_test_kind), len(self.dataset.ood_test_x))
        self.assertLess(self.dataset.ood_test_kind.max(), len(self.spec.ood_classes))


class TestLinearSeparability(unittest.TestCase):
    """A linear softmax classifier must learn the ID shapes."""

    def test_linear_classifier_accuracy(self):
        dataset = generate(DatasetSpec(per_class_train=200, per_class_id_test=60,
                                       per_class_ood_test=1, seed=5))
        rng = np.random.default_rng(0)
        network = Network([DenseLayer.initialize(dataset.input_dim, dataset.num_classes, rng)])
        config = TrainConfig(epochs=40, batch_size=64, initial_lr=5e-3, l2_penalty=0.0)

        def batches(batch_rng):
            return iterate_minibatches(dataset.train_x, dataset.train_y, 64, batch_rng)

        fit(network, config, batches, softmax_cross_entropy, rng)
        predicted = network.forward(dataset.id_test_x).argmax(axis=1)
        self.assertGreaterEqual(np.mean(predicted == dataset.id_test_y), 0.8)


class TestBatches(unittest.TestCase):
    """Test minibatch iteration and flip augmentation."""

    def test_flips_permute_pixels(self):
        rng = np.random.default_rng(0)
        batch = rng.uniform(size=(10, 2 * 16))
        flipped = augment_flips(batch, 4, rng)
        self.assertEqual(flipped.shape, batch.shape)
        images = batch.reshape(-1, 16)
        out = flipped.reshape(-1, 16)
        for before, after in zip(images, out):
            np.testing.assert_array_equal(np.sort(before), np.sort(after))
        self.assertFalse(np.array_equal(flipped, batch))

    def test_flip_width_check(self):
        with self.assertRaises(DimensionError):
            augment_flips(np.zeros((2, 15)), 4, np.random.default_rng(0))

    def test_epoch_covers_every_row(self):
        x = np.arange(23, dtype=np.float64)[:, None]
        y = np.arange(23)
        batches = list(iterate_minibatches(x, y, 5, np.random.default_rng(3)))
        self.assertEqual([len(b[1]) for b in batches], [5, 5, 5, 5, 3])
        seen = np.concatenate([b[1] for b in batches])
        self.assertEqual(sorted(seen), list(range(23)))
        for inputs, labels in batches:
            np.testing.assert_array_equal(inputs[:, 0], labels)

    def test_augmentation_needs_side(self):
        with self.assertRaises(DimensionError):
            list(iterate_minibatches(np.zeros((4, 16)), np.zeros(4), 2,
                                     np.random.default_rng(0), augment=True))


if __name__ == "__main__":
    unittest.main()
