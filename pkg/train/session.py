import dataclasses
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, NamedTuple

import numpy as np

from arena.arena_config import ArenaConfig
from fusion.network import FusionNetwork
from replay.experience_pool import ExperiencePool, PoolConfig
from train.actor import Actor, ActorPool, PolicySnapshot
from train.dqn_trainer import DqnTrainer, epsilon
from train.metrics import IntervalAverage, MetricsWriter, TRAIN_METRICS_COLUMNS
from train.train_config import TrainConfig

METRICS_FILE = "metrics.csv"
FINAL_CHECKPOINT = "final.fqn"

# trainer poll period while actors fill the pool
_FILL_POLL_S = 0.01


def checkpoint_name(batches: int) -> str:
    return f"checkpoint-{batches:08d}.fqn"


class SessionResult(NamedTuple):
    checkpoint: Path
    metrics: Path
    batches: int
    checkpoints: List[Path]


class TrainingSession:

    """
    Runs actors and the DQN trainer until `total_batches` batches were trained.

    In deterministic mode a single actor and the trainer are interleaved on the calling thread, `steps_per_batch`
    environment steps per trained batch, so a seed fully determines the metrics and checkpoints.  Otherwise
    `actor_count` actors run on their own threads while the trainer samples the shared pool.
    """

    def __init__(self, net: FusionNetwork, arena: ArenaConfig, config: TrainConfig, pool_config: PoolConfig,
                 out_dir: str | Path, seed: int, deterministic: bool = False):
        if deterministic and config.actor_count != 1:
            raise ValueError("Deterministic mode requires exactly one actor.")
        if config.droppath_rate > 0:
            net.set_dropout(config.droppath_rate, net.ray_dropout_rate)
        self._log = logging.getLogger(type(self).__name__)
        self.net = net
        self.arena = arena
        self.config = config
        self.pool_config = pool_config
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.deterministic = deterministic
        seeds = np.random.SeedSequence(seed).spawn(config.actor_count + 2)
        self._sample_rng = np.random.default_rng(seeds[0])
        self._trainer = DqnTrainer(net, config, rng=np.random.default_rng(seeds[1]))
        self._actor_seeds = [int(s.generate_state(1)[0]) for s in seeds[2:]]
        self.pool = ExperiencePool.from_pool_config(pool_config, arena.lidar_rays)
        self.snapshot = PolicySnapshot(net)
        self._checkpoints: List[Path] = list()
        self._loss = IntervalAverage()
        self._max_q = IntervalAverage()

    def hyperparameters(self) -> Dict[str, Any]:
        return {**dataclasses.asdict(self.config), "seed": self.seed, "batches": self._trainer.batches}

    def _actors(self) -> List[Actor]:
        return [Actor(self.net, self.arena, seed, name=f"actor-{i}") for i, seed in enumerate(self._actor_seeds)]

    def _epsilon(self) -> float:
        return epsilon(self.pool.pushed, self.config)

    def _train_once(self, metrics: MetricsWriter) -> None:
        batch = self.pool.sample(self.config.batch_size, self._sample_rng)
        stats = self._trainer.train(batch)
        self.snapshot.publish(self.net)
        self._loss.add(stats.loss)
        self._max_q.add(stats.mean_max_q)
        batches = self._trainer.batches
        if batches % self.config.metrics_interval == 0 or batches == self.config.total_batches:
            self._write_metrics(metrics)
        if self.config.checkpoint_interval and batches % self.config.checkpoint_interval == 0:
            path = self.out_dir / checkpoint_name(batches)
            self.net.save(path, self.hyperparameters())
            self._checkpoints.append(path)

    def _write_metrics(self, metrics: MetricsWriter) -> None:
        loss, max_q = self._loss.pop(), self._max_q.pop()
        eps = self._epsilon()
        metrics.write(batch=self._trainer.batches, loss=loss, mean_max_q=max_q, epsilon=eps,
                      pool_size=len(self.pool))
        self._log.info(f"batch {self._trainer.batches}/{self.config.total_batches} loss {loss:.6f} "
                       f"mean max Q {max_q:.4f} epsilon {eps:.4f} pool {len(self.pool)}")

    def _run_deterministic(self, metrics: MetricsWriter) -> None:
        (actor,) = self._actors()
        while self._trainer.batches < self.config.total_batches:
            for _ in range(self.config.steps_per_batch):
                self.pool.push(actor.step(self._epsilon()))
                if actor.steps % self.config.snapshot_interval == 0:
                    actor.refresh(self.snapshot)
            if self.pool.ready(self.pool_config):
                self._train_once(metrics)

    def _run_threaded(self, metrics: MetricsWriter) -> None:
        with ActorPool(self._actors(), self.snapshot, self.pool.push, self._epsilon,
                       self.config.snapshot_interval) as actors:
            while not self.pool.ready(self.pool_config):
                if actors.failed:
                    raise RuntimeError("An actor failed while filling the experience pool.") from actors.errors[0]
                time.sleep(_FILL_POLL_S)
            self._log.info(f"Experience pool holds {len(self.pool)} transitions, training.")
            while self._trainer.batches < self.config.total_batches:
                if actors.failed:
                    raise RuntimeError("An actor failed during training.") from actors.errors[0]
                self._train_once(metrics)

    def run(self) -> SessionResult:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = self.out_dir / METRICS_FILE
        self._log.info(f"Training {self.net!r} for {self.config.total_batches} batches "
                       f"({'deterministic' if self.deterministic else f'{self.config.actor_count} actor(s)'}).")
        with MetricsWriter(metrics_path, TRAIN_METRICS_COLUMNS) as metrics:
            if self.deterministic:
                self._run_deterministic(metrics)
            else:
                self._run_threaded(metrics)
        final = self.out_dir / FINAL_CHECKPOINT
        self.net.save(final, self.hyperparameters())
        return SessionResult(checkpoint=final, metrics=metrics_path, batches=self._trainer.batches,
                             checkpoints=list(self._checkpoints))
