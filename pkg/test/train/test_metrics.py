import math
import tempfile
from pathlib import Path
from unittest import TestCase

from train.metrics import REFINE_METRICS_COLUMNS, IntervalAverage, MetricsWriter


class TestMetricsWriter(TestCase):

    def setUp(self) -> None:
        self.dir = tempfile.TemporaryDirectory()
        self.path = Path(self.dir.name) / "metrics.csv"

    def tearDown(self) -> None:
        self.dir.cleanup()

    def test_rows(self):
        with MetricsWriter(self.path, REFINE_METRICS_COLUMNS) as metrics:
            metrics.write(batch=1, loss=0.1, pool_size=10)
            metrics.write(pool_size=20, loss=1 / 3, batch=2)
        self.assertEqual(["batch,loss,pool_size", "1,0.1,10", f"2,{1 / 3!r},20"],
                         self.path.read_text().splitlines())
        self.assertEqual(2, metrics.rows)

    def test_column_mismatch(self):
        with MetricsWriter(self.path, REFINE_METRICS_COLUMNS) as metrics:
            self.assertRaises(ValueError, lambda: metrics.write(batch=1, loss=0.0))

    def test_not_opened(self):
        metrics = MetricsWriter(self.path)
        self.assertRaises(RuntimeError, lambda: metrics.write(batch=1))
        with metrics:
            self.assertRaises(RuntimeError, metrics.__enter__)


class TestIntervalAverage(TestCase):

    def test_pop_resets(self):
        avg = IntervalAverage()
        self.assertTrue(math.isnan(avg.pop()))
        avg.add(1.0)
        avg.add(2.0)
        self.assertEqual(1.5, avg.pop())
        avg.add(4.0)
        self.assertEqual(4.0, avg.pop())
