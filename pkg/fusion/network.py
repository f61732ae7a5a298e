import copy
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from arena.simulator import NUM_SENSORS, Action, Observation
from fusion.architecture import ArchitectureDims, ArchitectureId, Merge
from fusion.droppath import sample_path_mask, sample_ray_mask
from neural.layers import Conv1D, Mode
from neural.parameter_file import write_parameters
from neural.sequential import Sequential, load_into


class FusionNetwork:

    """
    A Q-network over the three lidar scans, output one Q-value per action.

    Inputs are (batch, 3, rays) arrays ordered robot, corner-1, corner-2.  Single-stack models (single, early) read
    channel 0 or all three channels; late models run one weight-independent stack per sensor and merge the stack
    outputs (concat, 1x1 convolution or sum) before the shared head.  The second convolution's ReLU is the first
    layer of the head, i.e. it is applied after the merge.

    DropPath is only defined for `LATE_ACC`: a dropped path contributes nothing to the sum.  Surviving paths are not
    rescaled, neither at train nor at eval time.  `path_mask` given to `forward` is the sensor availability; other
    architectures see unavailable sensors only as all-zero scans.
    """

    def __init__(self, architecture: ArchitectureId, dims: ArchitectureDims, stacks: Sequence[Sequential],
                 head: Sequential, merge_layer: Optional[Conv1D] = None, droppath_rate: float = 0.0,
                 ray_dropout_rate: float = 0.0):
        if len(stacks) != dims.stacks:
            raise ValueError(f"{architecture.value} expects {dims.stacks} stack(s), got {len(stacks)}.")
        if (merge_layer is None) != (dims.merge is not Merge.CONV1X1):
            raise ValueError("A merge layer is required exactly for 1x1-convolution fusion.")
        self._log = logging.getLogger(type(self).__name__)
        self.architecture = architecture
        self.dims = dims
        self.stacks: List[Sequential] = list(stacks)
        self.merge_layer = merge_layer
        self.head = head
        self.droppath_rate = 0.0
        self.ray_dropout_rate = 0.0
        self.set_dropout(droppath_rate, ray_dropout_rate)
        self._cache: Optional[Dict[str, Any]] = None

    @property
    def supports_droppath(self) -> bool:
        return self.dims.merge is Merge.ACCUMULATE

    def set_dropout(self, droppath_rate: float, ray_dropout_rate: float) -> None:
        if not (0.0 <= droppath_rate <= 1.0 and 0.0 <= ray_dropout_rate <= 1.0):
            raise ValueError("Drop rates must lie in [0, 1].")
        if droppath_rate > 0 and not self.supports_droppath:
            raise ValueError(f"DropPath is only implemented for {ArchitectureId.LATE_ACC.value}, "
                             f"not {self.architecture.value}.")
        self.droppath_rate = droppath_rate
        self.ray_dropout_rate = ray_dropout_rate

    def _stack_inputs(self, x: np.ndarray) -> List[np.ndarray]:
        if self.dims.stacks == 1:
            return [x[:, :self.dims.stack_channels]]
        return [x[:, i:i + 1] for i in range(self.dims.stacks)]

    def forward(self, x: np.ndarray, mode: Mode = Mode.EVAL, path_mask: Optional[np.ndarray] = None,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """
        :param x: (batch, 3, rays) normalized scans
        :param path_mask: optional (batch, 3) sensor availability, honoured as DropPath by accumulate fusion
        :param rng: required in `Mode.TRAIN_DROPPATH`, samples the DropPath and ray DropOut masks
        :return: (batch, actions) Q-values
        """
        if x.ndim != 3 or x.shape[1] != NUM_SENSORS or x.shape[2] != self.dims.rays:
            raise ValueError(f"Expected scans of shape (batch, {NUM_SENSORS}, {self.dims.rays}), got {x.shape}.")
        n = x.shape[0]
        keep_paths = np.ones((n, NUM_SENSORS), dtype=bool)
        if path_mask is not None:
            keep_paths &= np.asarray(path_mask, dtype=bool).reshape(n, NUM_SENSORS)
        keep_rays = None
        if mode is Mode.TRAIN_DROPPATH:
            if not self.supports_droppath:
                raise ValueError(f"{self.architecture.value} does not support DropPath training.")
            if rng is None:
                raise ValueError("DropPath training requires a random generator.")
            keep_paths &= sample_path_mask(rng, n, self.droppath_rate)
            if self.ray_dropout_rate > 0:
                keep_rays = sample_ray_mask(rng, x.shape, self.ray_dropout_rate)
                x = x * keep_rays

        outputs = [stack.forward(xi, mode) for stack, xi in zip(self.stacks, self._stack_inputs(x))]
        if self.dims.merge is Merge.ACCUMULATE:
            weights = keep_paths.astype(outputs[0].dtype)
            merged = sum(out * weights[:, i, None, None] for i, out in enumerate(outputs))
        elif self.dims.merge in (Merge.CONCAT, Merge.CONV1X1):
            merged = np.concatenate(outputs, axis=1)
            if self.merge_layer is not None:
                merged = self.merge_layer.forward(merged, mode)
        else:
            merged = outputs[0]
        q = self.head.forward(merged, mode)
        if mode.caches():
            self._cache = {"keep_paths": keep_paths, "keep_rays": keep_rays, "batch": n}
        return q

    def backward(self, grad: np.ndarray) -> np.ndarray:
        """
        :param grad: (batch, actions) gradient of the loss with respect to the Q-values
        :return: gradient with respect to the (batch, 3, rays) input
        """
        if self._cache is None:
            raise RuntimeError("backward called without a cached forward in a train mode.")
        keep_paths, keep_rays, n = self._cache["keep_paths"], self._cache["keep_rays"], self._cache["batch"]
        g = self.head.backward(grad)
        if self.merge_layer is not None:
            g = self.merge_layer.backward(g)
        if self.dims.merge is Merge.ACCUMULATE:
            weights = keep_paths.astype(g.dtype)
            stack_grads = [g * weights[:, i, None, None] for i in range(self.dims.stacks)]
        elif self.dims.merge in (Merge.CONCAT, Merge.CONV1X1):
            stack_grads = np.split(g, self.dims.stacks, axis=1)
        else:
            stack_grads = [g]
        dx = np.zeros((n, NUM_SENSORS, self.dims.rays), dtype=g.dtype)
        for i, (stack, sg) in enumerate(zip(self.stacks, stack_grads)):
            d_in = stack.backward(sg)
            if self.dims.stacks == 1:
                dx[:, :self.dims.stack_channels] = d_in
            else:
                dx[:, i:i + 1] = d_in
        if keep_rays is not None:
            dx *= keep_rays
        return dx

    def layers(self):
        """
        Every layer in parameter order: stacks, merge layer, head.
        """
        for stack in self.stacks:
            yield from stack
        if self.merge_layer is not None:
            yield self.merge_layer
        yield from self.head

    def parameters(self) -> List[np.ndarray]:
        return [p for layer in self.layers() for p in layer.params]

    def gradients(self) -> List[np.ndarray]:
        return [g for layer in self.layers() for g in layer.grads]

    def relu_masks(self) -> List[Optional[np.ndarray]]:
        return [m for stack in self.stacks for m in stack.relu_masks()] + self.head.relu_masks()

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    @property
    def dtype(self) -> np.dtype:
        return self.parameters()[0].dtype

    def layer_dims(self) -> List[Any]:
        return [[layer.dims() for layer in stack] for stack in self.stacks] + [
            self.merge_layer.dims() if self.merge_layer is not None else None,
            self.head.dims()]

    def zero_grad(self) -> None:
        for layer in self.layers():
            layer.zero_grad()

    def load_parameters(self, arrays: Sequence[np.ndarray]) -> None:
        load_into(self.parameters(), arrays)

    def copy_parameters(self) -> List[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def clone(self) -> 'FusionNetwork':
        twin = copy.copy(self)
        twin._log = self._log
        twin.stacks = [stack.clone() for stack in self.stacks]
        twin.merge_layer = copy.deepcopy(self.merge_layer)
        twin.head = self.head.clone()
        twin._cache = None
        return twin

    def save(self, path: str | Path, hyperparameters: Optional[Dict[str, Any]] = None) -> int:
        hp = {"droppath_rate": self.droppath_rate, "ray_dropout_rate": self.ray_dropout_rate,
              **(hyperparameters or dict())}
        return write_parameters(path, self.architecture.value, self.layer_dims(), self.parameters(), hp)

    def __repr__(self) -> str:
        return f"FusionNetwork(architecture={self.architecture.value}, params={self.param_count})"


def q_values(net: FusionNetwork, obs: Observation, mode: Mode = Mode.EVAL,
             rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Q-values of a single observation; the availability flags double as the DropPath mask.
    """
    scans = np.asarray(obs.scans)
    if scans.shape != (NUM_SENSORS, net.dims.rays):
        raise ValueError(f"Expected scans of shape ({NUM_SENSORS}, {net.dims.rays}), got {scans.shape}.")
    return net.forward(scans[None], mode, np.asarray(obs.available, dtype=bool)[None], rng)[0]


def greedy_action(net: FusionNetwork, obs: Observation) -> Action:
    """
    Ties break toward the lowest action index.
    """
    return Action(int(np.argmax(q_values(net, obs))))
