import csv
import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import yaml

from arena import simulator
from arena.arena_config import ArenaConfig
from arena.simulator import ALL_AVAILABLE, ROBOT_SENSOR, Cause
from arena.trajectory import TrajectoryRecorder
from evaluation.policy import Policy

_log = logging.getLogger("harness")

SENSOR_MASKS: Dict[str, Tuple[bool, bool, bool]] = {
    "all": ALL_AVAILABLE,
    "front": (True, False, False),
    "front+1": (True, True, False),
    "front+2": (True, False, True),
}

REPORT_COLUMNS = ("seed", "return", "final_can_distance", "cause", "steps", "can_behind")
SUMMARY_COLUMNS = ("kind", "key", "value")

CDF_RESOLUTION = 0.01
WITHIN_DISTANCE = 0.10

# np.quantile method used for every box-plot statistic
QUANTILE_METHOD = "linear"


@dataclass(frozen=True)
class EvalSuite:
    seeds: Tuple[int, ...]
    available: Tuple[bool, bool, bool] = ALL_AVAILABLE
    max_steps: int = 100

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "available", tuple(bool(a) for a in self.available))
        if not self.seeds:
            raise ValueError("An evaluation suite needs at least one seed.")
        if len(self.available) != 3 or not self.available[ROBOT_SENSOR]:
            raise ValueError("Sensor availability needs three flags with the robot sensor available.")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1.")

    def with_sensors(self, available: Tuple[bool, bool, bool]) -> 'EvalSuite':
        return dataclasses.replace(self, available=available)

    @staticmethod
    def from_file(path: str | Path) -> 'EvalSuite':
        """
        Reads a suite file: a mapping with a `seeds` list and optional `max_steps`.
        :raise: ValueError on a malformed file
        """
        with Path(path).open() as f:
            raw = yaml.safe_load(f)
        if type(raw) is not dict or type(raw.get("seeds")) is not list:
            raise ValueError(f"Suite file {path} must be a mapping with a `seeds` list.")
        return EvalSuite(seeds=tuple(raw["seeds"]), max_steps=int(raw.get("max_steps", 100)))


class RolloutReport(NamedTuple):
    seed: int
    # undiscounted sum of per-step rewards
    total_return: float
    final_can_distance: float
    cause: Cause
    steps: int
    can_behind: bool


class Summary(NamedTuple):
    count: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    fraction_within_10cm: float
    median_can_behind: float
    median_can_in_front: float
    # (distance in meters, fraction of rollouts ending at most that far from the grip target)
    cdf: Tuple[Tuple[float, float], ...]


def trajectory_path(directory: str | Path, seed: int) -> Path:
    return Path(directory) / f"trajectory-{seed}.csv"


def rollout(policy: Policy, seed: int, suite: EvalSuite, config: ArenaConfig,
            recorder: Optional[TrajectoryRecorder] = None) -> RolloutReport:
    """
    :param recorder: optional open recorder receiving the reset state and every step
    """
    state = simulator.reset(seed, config)
    behind = simulator.can_behind(state, config)
    obs = simulator.observe(state, suite.available, config)
    rng = np.random.default_rng(seed)
    if recorder is not None:
        recorder.record_reset(state)
    total = 0.0
    result = None
    while not state.terminal:
        action = policy.act(obs, rng)
        state, result = simulator.step(state, action, config, suite.available)
        if recorder is not None:
            recorder.record_step(state, action, result)
        total += result.reward
        obs = result.observation
    return RolloutReport(seed=seed, total_return=total, final_can_distance=simulator.can_distance(state, config),
                         cause=result.cause, steps=state.steps_elapsed, can_behind=behind)


def _recorded_rollout(policy: Policy, seed: int, suite: EvalSuite, config: ArenaConfig,
                      trajectory_dir: Optional[Path]) -> RolloutReport:
    if trajectory_dir is None:
        return rollout(policy, seed, suite, config)
    with TrajectoryRecorder(trajectory_path(trajectory_dir, seed)) as recorder:
        return rollout(policy, seed, suite, config, recorder)


def evaluate(policy: Policy, suite: EvalSuite, config: ArenaConfig, workers: int = 1,
             trajectory_dir: str | Path | None = None) -> List[RolloutReport]:
    """
    Rolls `policy` out once per suite seed, in seed order.  Rollouts are independent and may run on `workers`
    threads; the result does not depend on `workers`.
    :param trajectory_dir: when given, every rollout is also dumped to `trajectory-<seed>.csv` in this directory
    """
    config = dataclasses.replace(config, max_steps=suite.max_steps)
    if trajectory_dir is not None:
        trajectory_dir = Path(trajectory_dir)
        trajectory_dir.mkdir(parents=True, exist_ok=True)
    _log.info(f"Evaluating {policy} on {len(suite.seeds)} seeds, sensors {suite.available}.")
    if workers <= 1:
        return [_recorded_rollout(policy, seed, suite, config, trajectory_dir) for seed in suite.seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda seed: _recorded_rollout(policy, seed, suite, config, trajectory_dir),
                             suite.seeds))


def distance_cdf(reports: Sequence[RolloutReport], at: float | np.ndarray) -> float | np.ndarray:
    """
    Empirical CDF of the final can distance.
    """
    if not reports:
        raise ValueError("Cannot compute a distribution of zero reports.")
    distances = np.sort([r.final_can_distance for r in reports])
    fractions = np.searchsorted(distances, at, side="right") / len(distances)
    return float(fractions) if np.ndim(fractions) == 0 else fractions


def _median(values: List[float]) -> float:
    return float(np.quantile(values, 0.5, method=QUANTILE_METHOD)) if values else math.nan


def summarize(reports: Sequence[RolloutReport]) -> Summary:
    """
    Box-plot statistics of the returns (quantiles by linear interpolation between order statistics, inclusive of
    the extremes) and the final-distance CDF sampled every centimeter until it reaches 1.
    :raise: ValueError on empty input
    """
    if not reports:
        raise ValueError("Cannot summarize zero reports.")
    returns = np.array([r.total_return for r in reports], dtype=np.float64)
    q = np.quantile(returns, [0.0, 0.25, 0.5, 0.75, 1.0], method=QUANTILE_METHOD)
    max_distance = max(r.final_can_distance for r in reports)
    grid = np.arange(math.ceil(max_distance / CDF_RESOLUTION) + 2) * CDF_RESOLUTION
    fractions = distance_cdf(reports, grid)
    return Summary(count=len(reports), min=float(q[0]), q1=float(q[1]), median=float(q[2]), q3=float(q[3]),
                   max=float(q[4]), mean=float(returns.mean()),
                   fraction_within_10cm=distance_cdf(reports, WITHIN_DISTANCE),
                   median_can_behind=_median([r.total_return for r in reports if r.can_behind]),
                   median_can_in_front=_median([r.total_return for r in reports if not r.can_behind]),
                   cdf=tuple((float(d), float(f)) for d, f in zip(grid, fractions)))


def write_reports(path: str | Path, reports: Sequence[RolloutReport]) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow((r.seed, repr(r.total_return), repr(r.final_can_distance), r.cause.value, r.steps,
                             int(r.can_behind)))


def write_summary(path: str | Path, summary: Summary) -> None:
    rows = [("return", key, getattr(summary, key)) for key in ("count", "min", "q1", "median", "q3", "max", "mean")]
    rows.append(("distance", "fraction_within_10cm", summary.fraction_within_10cm))
    rows.append(("group", "median_can_behind", summary.median_can_behind))
    rows.append(("group", "median_can_in_front", summary.median_can_in_front))
    rows.extend(("cdf", f"{d:.2f}", f) for d, f in summary.cdf)
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_COLUMNS)
        for kind, key, value in rows:
            writer.writerow((kind, key, repr(value) if isinstance(value, float) else value))
