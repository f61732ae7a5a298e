import logging
import threading
from typing import Callable, List, Optional, Tuple

import numpy as np

from arena import simulator
from arena.arena_config import ArenaConfig
from arena.simulator import ALL_AVAILABLE, NUM_ACTIONS, Action, Observation, WorldState
from fusion.network import FusionNetwork, greedy_action
from replay.experience_pool import Transition


class PolicySnapshot:

    """
    Hands whole-parameter copies from the trainer to the actors.  A published list is never mutated afterwards, so
    a reader either sees the previous or the new snapshot, never a mix.
    """

    def __init__(self, net: FusionNetwork):
        self._lock = threading.Lock()
        self._params = net.copy_parameters()
        self._version = 0

    @property
    def version(self) -> int:
        return self._version

    def publish(self, net: FusionNetwork) -> int:
        params = net.copy_parameters()
        with self._lock:
            self._params = params
            self._version += 1
            return self._version

    def fetch_into(self, net: FusionNetwork, known_version: int) -> int:
        """
        Loads the latest snapshot into `net` unless `known_version` is already the latest.
        :return: version now held by `net`
        """
        with self._lock:
            params, version = self._params, self._version
        if version != known_version:
            net.load_parameters(params)
        return version


class Actor:

    """
    One simulator plus a private policy copy.  Episodes are reset from seeds drawn from the actor's own generator,
    so a seeded actor with a fixed policy and epsilon replays the same trajectory.
    """

    def __init__(self, net: FusionNetwork, config: ArenaConfig, seed: int,
                 available: Tuple[bool, bool, bool] = ALL_AVAILABLE, name: str = "actor"):
        self._log = logging.getLogger(type(self).__name__)
        self.name = name
        self.net = net.clone()
        self.net_version = 0
        self.config = config
        self.available = available
        self.rng = np.random.default_rng(seed)
        self.episodes = 0
        self.steps = 0
        self.state: Optional[WorldState] = None
        self.obs: Optional[Observation] = None
        self._reset()

    def _reset(self) -> None:
        episode_seed = int(self.rng.integers(0, 2 ** 63 - 1))
        self.state = simulator.reset(episode_seed, self.config)
        self.obs = simulator.observe(self.state, self.available, self.config)
        self.episodes += 1
        self._log.debug(f"{self.name} started episode {self.episodes} (seed {episode_seed}).")

    def choose(self, epsilon: float) -> Action:
        if self.rng.random() < epsilon:
            return Action(int(self.rng.integers(0, NUM_ACTIONS)))
        return greedy_action(self.net, self.obs)

    def step(self, epsilon: float) -> Transition:
        """
        Takes one epsilon-greedy step, resetting the simulator after a terminal transition.
        """
        action = self.choose(epsilon)
        obs = self.obs
        self.state, result = simulator.step(self.state, action, self.config, self.available)
        self.steps += 1
        transition = Transition(obs=obs, action=action, reward=result.reward, next_obs=result.observation,
                                terminal=result.terminal)
        if result.terminal:
            self._reset()
        else:
            self.obs = result.observation
        return transition

    def refresh(self, snapshot: PolicySnapshot) -> None:
        self.net_version = snapshot.fetch_into(self.net, self.net_version)


def actor_loop(actor: Actor, snapshot: PolicySnapshot, push: Callable[[Transition], None],
               epsilon_fn: Callable[[], float], stop: threading.Event, snapshot_interval: int) -> None:
    """
    Steps `actor` until `stop` is set, pushing every transition and refreshing the policy every
    `snapshot_interval` steps.
    """
    actor.refresh(snapshot)
    while not stop.is_set():
        push(actor.step(epsilon_fn()))
        if actor.steps % snapshot_interval == 0:
            actor.refresh(snapshot)


class ActorPool:

    """
    Runs `actor_loop` for each actor on its own daemon thread.  Needs to be opened/closed with `__enter__` and
    `__exit__`; closing stops and joins the threads.  An exception in an actor is logged and recorded in `errors`.
    """

    def __init__(self, actors: List[Actor], snapshot: PolicySnapshot, push: Callable[[Transition], None],
                 epsilon_fn: Callable[[], float], snapshot_interval: int):
        self._log = logging.getLogger(type(self).__name__)
        self.actors = actors
        self._snapshot = snapshot
        self._push = push
        self._epsilon_fn = epsilon_fn
        self._snapshot_interval = snapshot_interval
        self._stop = threading.Event()
        self._threads: List[threading.Thread] = list()
        self.errors: List[BaseException] = list()

    def _run(self, actor: Actor) -> None:
        try:
            actor_loop(actor, self._snapshot, self._push, self._epsilon_fn, self._stop, self._snapshot_interval)
        except Exception as e:
            self._log.error(f"{actor.name} failed.", exc_info=e)
            self.errors.append(e)

    def __enter__(self) -> 'ActorPool':
        if self._threads:
            raise RuntimeError("Cannot re-open this resource, it is already open.")
        self._stop.clear()
        for actor in self.actors:
            thread = threading.Thread(target=self._run, args=(actor,), name=actor.name, daemon=True)
            self._threads.append(thread)
            thread.start()
        self._log.info(f"Started {len(self._threads)} actor(s).")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._stop.set()
        for thread in self._threads:
            thread.join()
        self._threads.clear()

    @property
    def failed(self) -> bool:
        return bool(self.errors)
