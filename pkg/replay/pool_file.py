import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Optional

import numpy as np

from arena.simulator import NUM_SENSORS
from common import framing
from replay.experience_pool import Batch, Transition

POOL_MAGIC = b"FQNPOOL0"
POOL_FILE_SUFFIX = ".fqp"

_FIELDS = Batch._fields


def write_pool_file(path: str | Path, batch: Batch) -> int:
    header = {"count": batch.size, "rays": int(batch.obs.shape[2]), "fields": list(_FIELDS)}
    return framing.write_file(path, POOL_MAGIC, header, list(batch))


def read_pool_file(path: str | Path) -> Batch:
    """
    :raise: FramingError if the file is not a pool file or its arrays are inconsistent
    """
    frame = framing.read_file(path, POOL_MAGIC)
    if frame.header.get("fields") != list(_FIELDS) or len(frame.arrays) != len(_FIELDS):
        raise framing.FramingError(f"{path} does not hold the expected transition fields.")
    batch = Batch(*frame.arrays)
    count = frame.header.get("count")
    if any(arr.shape[0] != count for arr in batch):
        raise framing.FramingError(f"{path} holds arrays of inconsistent length.")
    return batch


def stream_pool_files(paths: Iterable[str | Path]) -> Iterator[Batch]:
    """
    Yields the transitions of each file in turn; only one file is held in memory.
    """
    for path in paths:
        yield read_pool_file(path)


def pool_files(directory: str | Path) -> List[Path]:
    return sorted(Path(directory).glob(f"*{POOL_FILE_SUFFIX}"))


class PoolFileWriter:

    """
    Buffers pushed transitions and spills them to numbered pool files of `file_size` transitions each (the last file
    may be shorter).  Needs to be opened/closed with `__enter__` and `__exit__`, closing flushes the remainder.
    """

    def __init__(self, directory: str | Path, file_size: int, rays: int, prefix: str = "corpus"):
        if file_size < 1:
            raise ValueError("file_size must be >= 1.")
        self._log = logging.getLogger(type(self).__name__)
        self.directory = Path(directory)
        self.file_size = file_size
        self.rays = rays
        self.prefix = prefix
        self.paths: List[Path] = list()
        self.written = 0
        self._rows: Optional[List[Transition]] = None

    def __enter__(self) -> 'PoolFileWriter':
        if self._rows is not None:
            raise RuntimeError("Cannot re-open this resource, it is already open.")
        self.directory.mkdir(parents=True, exist_ok=True)
        self._rows = list()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._rows is None:
            return
        try:
            if exc_type is None:
                self._flush()
        finally:
            self._rows = None

    def push(self, t: Transition) -> None:
        if self._rows is None:
            raise RuntimeError("Writer not opened.")
        self._rows.append(t)
        if len(self._rows) >= self.file_size:
            self._flush()

    def _flush(self) -> None:
        if not self._rows:
            return
        n = len(self._rows)
        batch = Batch(
            obs=np.stack([t.obs.scans for t in self._rows]).astype(np.float32),
            available=np.array([t.obs.available for t in self._rows], dtype=bool).reshape(n, NUM_SENSORS),
            action=np.array([int(t.action) for t in self._rows], dtype=np.int64),
            reward=np.array([t.reward for t in self._rows], dtype=np.float64),
            next_obs=np.stack([t.next_obs.scans for t in self._rows]).astype(np.float32),
            next_available=np.array([t.next_obs.available for t in self._rows], dtype=bool).reshape(n, NUM_SENSORS),
            terminal=np.array([t.terminal for t in self._rows], dtype=bool))
        if batch.obs.shape[2] != self.rays:
            raise ValueError(f"Expected scans with {self.rays} rays, got {batch.obs.shape[2]}.")
        path = self.directory / f"{self.prefix}-{len(self.paths):05d}{POOL_FILE_SUFFIX}"
        write_pool_file(path, batch)
        self._log.debug(f"Wrote {n} transitions to {path}")
        self.paths.append(path)
        self.written += n
        self._rows = list()
