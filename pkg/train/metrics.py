import csv
import logging
from pathlib import Path
from typing import IO, Optional, Sequence

TRAIN_METRICS_COLUMNS = ("batch", "loss", "mean_max_q", "epsilon", "pool_size")
REFINE_METRICS_COLUMNS = ("batch", "loss", "pool_size")


class MetricsWriter:

    """
    CSV of per-interval training metrics.  Floats are written with `repr` so reruns can be compared byte for byte.
    Needs to be opened/closed with `__enter__` and `__exit__`.
    """

    def __init__(self, path: str | Path, columns: Sequence[str] = TRAIN_METRICS_COLUMNS):
        self._log = logging.getLogger(type(self).__name__)
        self.path = Path(path)
        self.columns = tuple(columns)
        self._file: Optional[IO] = None
        self._writer = None
        self.rows = 0

    def __enter__(self) -> 'MetricsWriter':
        if self._file is not None:
            raise RuntimeError("Cannot re-open this resource, it is already open.")
        self._file = self.path.open("w", newline="")
        self._writer = csv.writer(self._file)
        self._writer.writerow(self.columns)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._file is not None:
            try:
                self._file.close()
            except Exception as e:
                self._log.warning(f"Unable to close metrics file {self.path}", exc_info=e)
        self._file = None
        self._writer = None

    def write(self, **values) -> None:
        if self._writer is None:
            raise RuntimeError("Metrics writer not opened.")
        if set(values) != set(self.columns):
            raise ValueError(f"Expected columns {self.columns}, got {tuple(values)}.")
        self._writer.writerow([repr(values[c]) if isinstance(values[c], float) else values[c] for c in self.columns])
        self._file.flush()
        self.rows += 1


class IntervalAverage:
    """
    Running mean of a metric between two metric rows.
    """

    def __init__(self):
        self.total = 0.0
        self.count = 0

    def add(self, value: float) -> None:
        self.total += value
        self.count += 1

    def pop(self) -> float:
        mean = self.total / self.count if self.count else float("nan")
        self.total = 0.0
        self.count = 0
        return mean
