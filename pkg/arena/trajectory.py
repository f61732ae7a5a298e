import csv
import logging
from pathlib import Path
from typing import IO, Optional

from arena.simulator import Action, StepResult, WorldState

TRAJECTORY_COLUMNS = ("step", "x", "y", "heading", "can_x", "can_y", "action", "reward", "cause")


class TrajectoryRecorder:

    """
    Dumps a rollout as CSV, one row per step.  Row 0 is the reset state (empty action, reward and cause).
    Needs to be opened/closed with `__enter__` and `__exit__`.
    """

    def __init__(self, path: str | Path):
        self._log = logging.getLogger(type(self).__name__)
        self._path = Path(path)
        self._file: Optional[IO] = None
        self._writer = None

    def __enter__(self) -> 'TrajectoryRecorder':
        if self._file is not None:
            raise RuntimeError("Cannot re-open this resource, it is already open.")
        self._file = self._path.open("w", newline="")
        self._writer = csv.writer(self._file)
        self._writer.writerow(TRAJECTORY_COLUMNS)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._file is not None:
            try:
                self._file.close()
            except Exception as e:
                self._log.warning(f"Unable to close trajectory file {self._path}", exc_info=e)
        self._file = None
        self._writer = None

    def _row(self, state: WorldState, action: str, reward: str, cause: str) -> None:
        if self._writer is None:
            raise RuntimeError("Recorder not opened.")
        robot = state.robot
        self._writer.writerow((state.steps_elapsed, repr(robot.x), repr(robot.y), repr(robot.heading),
                               repr(state.can[0]), repr(state.can[1]), action, reward, cause))

    def record_reset(self, state: WorldState) -> None:
        self._row(state, "", "", "")

    def record_step(self, state: WorldState, action: Action, result: StepResult) -> None:
        self._row(state, Action(action).name, repr(result.reward), result.cause.value)
