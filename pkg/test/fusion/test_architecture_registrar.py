import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from fusion.architecture import PUBLISHED_PARAM_COUNTS, ArchitectureId
from fusion.architecture_registrar import ArchitectureMismatchError, ArchitectureRegistrar, build, load_network
from neural.parameter_file import read_parameters, write_parameters


class TestArchitectureRegistrar(TestCase):

    def setUp(self) -> None:
        self.registrar = ArchitectureRegistrar()

    def test_scan_finds_every_architecture(self):
        self.registrar.scan()
        self.assertEqual(set(ArchitectureId), set(self.registrar))

    def test_duplicate_registration(self):
        self.registrar.accept(ArchitectureId.SINGLE, lambda dims, rng, dtype: None)
        self.assertRaises(ValueError, lambda: self.registrar.accept(ArchitectureId.SINGLE,
                                                                    lambda dims, rng, dtype: None))

    def test_clear(self):
        self.registrar.scan()
        self.registrar.clear()
        self.assertEqual(0, len(self.registrar))
        self.assertIsNotNone(self.registrar.builder(ArchitectureId.LATE_ACC))

    def test_built_counts(self):
        for arch in ArchitectureId:
            with self.subTest(arch=arch):
                self.assertEqual(PUBLISHED_PARAM_COUNTS[arch], build(arch).param_count)

    def test_same_seed_same_weights(self):
        a, b = build(ArchitectureId.LATE_ACC, rng_seed=9), build(ArchitectureId.LATE_ACC, rng_seed=9)
        for x, y in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(x, y)


class TestLoadNetwork(TestCase):

    def setUp(self) -> None:
        self.dir = tempfile.TemporaryDirectory()
        self.path = Path(self.dir.name) / "net.fqn"

    def tearDown(self) -> None:
        self.dir.cleanup()

    def test_save_and_load(self):
        net = build(ArchitectureId.LATE_ACC, rng_seed=3, dtype=np.float64, droppath_rate=0.5,
                    ray_dropout_rate=0.025)
        net.save(self.path, {"gamma": 0.99})
        loaded = load_network(self.path, ArchitectureId.LATE_ACC)
        self.assertEqual(np.float64, loaded.dtype)
        self.assertEqual(0.5, loaded.droppath_rate)
        self.assertEqual(0.025, loaded.ray_dropout_rate)
        for a, b in zip(net.parameters(), loaded.parameters()):
            self.assertEqual(a.tobytes(), b.tobytes())
        self.assertEqual(0.99, read_parameters(self.path).hyperparameters["gamma"])

    def test_wrong_expected_architecture(self):
        build(ArchitectureId.SINGLE).save(self.path)
        self.assertRaises(ArchitectureMismatchError, lambda: load_network(self.path, ArchitectureId.LATE_ACC))

    def test_tampered_layer_dims(self):
        net = build(ArchitectureId.LATE_CONV)
        dims = net.layer_dims()
        dims[-2]["out_channels"] = 33
        write_parameters(self.path, "late_conv", dims, net.parameters())
        self.assertRaises(ArchitectureMismatchError, lambda: load_network(self.path))

    def test_unknown_architecture(self):
        net = build(ArchitectureId.SINGLE)
        write_parameters(self.path, "late_sum", net.layer_dims(), net.parameters())
        self.assertRaises(ArchitectureMismatchError, lambda: load_network(self.path))

    def test_missing_arrays(self):
        net = build(ArchitectureId.SINGLE)
        write_parameters(self.path, "single", net.layer_dims(), net.parameters()[:-1])
        self.assertRaises(ArchitectureMismatchError, lambda: load_network(self.path))
