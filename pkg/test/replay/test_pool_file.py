import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from common import framing
from common.framing import FramingError
from replay.experience_pool import ExperiencePool
from replay.pool_file import (POOL_MAGIC, PoolFileWriter, pool_files, read_pool_file, stream_pool_files,
                              write_pool_file)
from test.replay.test_experience_pool import RAYS, contents, transition


class TestPoolFile(TestCase):

    def setUp(self) -> None:
        self.dir = tempfile.TemporaryDirectory()
        self.root = Path(self.dir.name)

    def tearDown(self) -> None:
        self.dir.cleanup()

    def _batch(self, ks):
        pool = ExperiencePool(capacity=len(ks), rays=RAYS)
        for k in ks:
            pool.push(transition(k))
        return contents(pool)

    def test_write_and_read(self):
        batch = self._batch(range(5))
        path = self.root / "a.fqp"
        write_pool_file(path, batch)
        stored = read_pool_file(path)
        for a, b in zip(batch, stored):
            np.testing.assert_array_equal(a, b)
            self.assertEqual(a.dtype, b.dtype)

    def test_rejects_foreign_fields(self):
        path = self.root / "b.fqp"
        batch = self._batch(range(2))
        framing.write_file(path, POOL_MAGIC, {"count": 2, "fields": ["obs"]}, [batch.obs])
        self.assertRaises(FramingError, lambda: read_pool_file(path))

    def test_rejects_inconsistent_lengths(self):
        path = self.root / "c.fqp"
        batch = self._batch(range(3))
        write_pool_file(path, batch._replace(reward=batch.reward[:2]))
        self.assertRaises(FramingError, lambda: read_pool_file(path))

    def test_writer_splits_files(self):
        with PoolFileWriter(self.root / "corpus", file_size=3, rays=RAYS) as writer:
            for k in range(7):
                writer.push(transition(k))
        self.assertEqual(7, writer.written)
        self.assertEqual(writer.paths, pool_files(self.root / "corpus"))
        self.assertEqual(["corpus-00000.fqp", "corpus-00001.fqp", "corpus-00002.fqp"],
                         [p.name for p in writer.paths])
        batches = list(stream_pool_files(writer.paths))
        self.assertEqual([3, 3, 1], [b.size for b in batches])
        np.testing.assert_array_equal(np.arange(7), np.concatenate([b.obs[:, 0, 0] for b in batches]))

    def test_writer_drops_remainder_on_error(self):
        writer = PoolFileWriter(self.root, file_size=4, rays=RAYS)
        with self.assertRaises(KeyError):
            with writer:
                for k in range(6):
                    writer.push(transition(k))
                raise KeyError("stop")
        self.assertEqual(1, len(writer.paths))
        self.assertEqual(4, writer.written)

    def test_writer_open_twice(self):
        writer = PoolFileWriter(self.root, file_size=4, rays=RAYS)
        with writer:
            self.assertRaises(RuntimeError, writer.__enter__)
        self.assertRaises(RuntimeError, lambda: writer.push(transition(0)))

    def test_writer_checks_rays(self):
        with self.assertRaises(ValueError):
            with PoolFileWriter(self.root, file_size=1, rays=RAYS + 1) as writer:
                writer.push(transition(0))
