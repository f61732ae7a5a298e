import dataclasses
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from arena.arena_config import ArenaConfig
from arena.simulator import ALL_AVAILABLE
from fusion.network import FusionNetwork
from neural.layers import Mode
from neural.loss import squared_error
from neural.rmsprop import RmsProp
from replay.experience_pool import Batch, ExperiencePool, PoolConfig
from replay.pool_file import PoolFileWriter, stream_pool_files
from train.actor import Actor
from train.metrics import IntervalAverage, MetricsWriter, REFINE_METRICS_COLUMNS
from train.session import FINAL_CHECKPOINT, METRICS_FILE, SessionResult
from train.train_config import RefineConfig

_log = logging.getLogger("refine")


def refine_step(student: FusionNetwork, teacher: FusionNetwork, batch: Batch, config: RefineConfig,
                optimizer: RmsProp, rng: np.random.Generator) -> float:
    """
    One RMSProp update pulling the student, run with freshly sampled DropPath and ray DropOut masks, toward the
    frozen teacher's full-sensor Q-values.  The squared difference is taken on the stored action's Q-value, or on
    all actions with `config.distill_all_actions`.
    :return: mean squared difference
    """
    wanted = teacher.forward(batch.obs, Mode.EVAL).astype(np.float64)
    q = student.forward(batch.obs, Mode.TRAIN_DROPPATH, batch.available, rng)
    grad = np.zeros(q.shape, dtype=np.float64)
    if config.distill_all_actions:
        losses, d_q = squared_error(q, wanted)
        grad[...] = d_q / losses.size
    else:
        rows = np.arange(batch.size)
        losses, d_q = squared_error(q[rows, batch.action], wanted[rows, batch.action])
        grad[rows, batch.action] = d_q / losses.size
    student.backward(grad.astype(q.dtype))
    optimizer.step(student.parameters(), student.gradients())
    return float(losses.mean())


def generate_refine_corpus(teacher: FusionNetwork, arena: ArenaConfig, size: int, epsilon: float,
                           writer: PoolFileWriter, seed: int) -> int:
    """
    Streams `size` transitions of epsilon-greedy teacher rollouts, all sensors available, into an open `writer`.
    :return: transitions written
    """
    if size < 1:
        raise ValueError("Corpus size must be >= 1.")
    actor = Actor(teacher, arena, seed, available=ALL_AVAILABLE, name="corpus")
    for i in range(size):
        writer.push(actor.step(epsilon))
        if (i + 1) % 100_000 == 0:
            _log.info(f"Generated {i + 1}/{size} corpus transitions.")
    return size


def refine_schedule(total_batches: int, files: int) -> List[int]:
    """
    Splits `total_batches` over `files` corpus files as evenly as possible, earlier files taking the remainder.
    """
    if files < 1:
        raise ValueError("At least one corpus file is required.")
    base, extra = divmod(total_batches, files)
    return [base + (1 if i < extra else 0) for i in range(files)]


class RefineSession:

    """
    Distills a converged LateAcc network into a DropPath-robust copy.  Corpus files are streamed through a FIFO
    experience pool one at a time; the refinement batches are divided evenly over the files.
    """

    def __init__(self, teacher: FusionNetwork, config: RefineConfig, pool_config: PoolConfig, out_dir: str | Path,
                 seed: int):
        if not teacher.supports_droppath:
            raise ValueError(f"Only a DropPath-capable network can be refined, got {teacher.architecture.value}.")
        self._log = logging.getLogger(type(self).__name__)
        self.teacher = teacher
        self.student = teacher.clone()
        self.student.set_dropout(config.droppath_rate, config.ray_dropout_rate)
        self.config = config
        self.pool_config = pool_config
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.optimizer = RmsProp(config.learning_rate, config.rms_decay, config.rms_epsilon)
        self.batches = 0
        seeds = np.random.SeedSequence(seed).spawn(2)
        self._sample_rng = np.random.default_rng(seeds[0])
        self._mask_rng = np.random.default_rng(seeds[1])

    def hyperparameters(self) -> Dict[str, Any]:
        return {**dataclasses.asdict(self.config), "seed": self.seed, "batches": self.batches, "refined": True}

    def run(self, corpus: Sequence[Path]) -> SessionResult:
        if not corpus:
            raise ValueError("Refinement needs at least one corpus file.")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        pool = ExperiencePool.from_pool_config(self.pool_config, self.teacher.dims.rays)
        schedule = refine_schedule(self.config.refine_batches, len(corpus))
        metrics_path = self.out_dir / METRICS_FILE
        loss = IntervalAverage()
        with MetricsWriter(metrics_path, REFINE_METRICS_COLUMNS) as metrics:
            for path, file_batches, transitions in zip(corpus, schedule, stream_pool_files(corpus)):
                pool.extend(transitions)
                self._log.info(f"Loaded {transitions.size} transitions from {path}, refining {file_batches} batches.")
                for _ in range(file_batches):
                    batch = pool.sample(self.config.batch_size, self._sample_rng)
                    loss.add(refine_step(self.student, self.teacher, batch, self.config, self.optimizer,
                                         self._mask_rng))
                    self.batches += 1
                    if self.batches % self.config.metrics_interval == 0 \
                            or self.batches == self.config.refine_batches:
                        mean_loss = loss.pop()
                        metrics.write(batch=self.batches, loss=mean_loss, pool_size=len(pool))
                        self._log.info(f"refine batch {self.batches}/{self.config.refine_batches} "
                                       f"loss {mean_loss:.6g}")
        final = self.out_dir / FINAL_CHECKPOINT
        self.student.save(final, self.hyperparameters())
        return SessionResult(checkpoint=final, metrics=metrics_path, batches=self.batches, checkpoints=list())
