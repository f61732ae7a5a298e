from unittest import TestCase

import numpy as np

from fusion.droppath import sample_path_mask, sample_ray_mask


def subset_index(mask: np.ndarray) -> np.ndarray:
    """
    0 {front}, 1 {front, 1}, 2 {front, 2}, 3 {front, 1, 2}
    """
    return mask[:, 1].astype(int) + 2 * mask[:, 2].astype(int)


class TestDropPath(TestCase):

    def test_subset_frequencies_at_half(self):
        mask = sample_path_mask(np.random.default_rng(0), 100000, 0.5)
        self.assertTrue(np.all(mask[:, 0]))
        freq = np.bincount(subset_index(mask), minlength=4) / len(mask)
        for f in freq:
            self.assertAlmostEqual(0.25, f, delta=0.005)

    def test_extreme_rates(self):
        rng = np.random.default_rng(1)
        self.assertTrue(np.all(sample_path_mask(rng, 50, 0.0)))
        dropped = sample_path_mask(rng, 50, 1.0)
        self.assertTrue(np.all(dropped[:, 0]))
        self.assertFalse(np.any(dropped[:, 1:]))

    def test_ray_dropout_frequency(self):
        keep = sample_ray_mask(np.random.default_rng(2), (1000, 3, 128), 0.025)
        self.assertEqual((1000, 3, 128), keep.shape)
        self.assertAlmostEqual(0.025, 1.0 - keep.mean(), delta=0.001)

    def test_invalid_rates(self):
        rng = np.random.default_rng(3)
        self.assertRaises(ValueError, lambda: sample_path_mask(rng, 1, 1.5))
        self.assertRaises(ValueError, lambda: sample_ray_mask(rng, (1,), -0.1))

    def test_subset_index(self):
        mask = np.array([[1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1]], dtype=bool)
        np.testing.assert_array_equal([0, 1, 2, 3], subset_index(mask))
