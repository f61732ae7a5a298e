import copy
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np

from neural.layers import Layer, Mode, ReLU


class Sequential:

    """
    A straight chain of layers.  Also the building block of the fusion networks' per-sensor stacks and heads.
    """

    def __init__(self, layers: Sequence[Layer]):
        self.layers: List[Layer] = list(layers)

    def __iter__(self) -> Iterator[Layer]:
        return self.layers.__iter__()

    def __len__(self) -> int:
        return len(self.layers)

    def forward(self, x: np.ndarray, mode: Mode = Mode.EVAL) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, mode)
        return x

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self) -> List[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def gradients(self) -> List[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    @property
    def param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers)

    def dims(self) -> List[Dict[str, Any]]:
        return [layer.dims() for layer in self.layers]

    def relu_masks(self) -> List[Optional[np.ndarray]]:
        return [layer.mask for layer in self.layers if isinstance(layer, ReLU)]

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def load_parameters(self, arrays: Sequence[np.ndarray]) -> None:
        load_into(self.parameters(), arrays)

    def clone(self) -> 'Sequential':
        return copy.deepcopy(self)


def load_into(params: List[np.ndarray], arrays: Sequence[np.ndarray]) -> None:
    """
    Copies `arrays` into `params` in place, keeping the parameters' dtype.
    :raise: ValueError on a count or shape mismatch
    """
    if len(params) != len(arrays):
        raise ValueError(f"Expected {len(params)} parameter arrays, got {len(arrays)}.")
    for p, a in zip(params, arrays):
        if p.shape != np.shape(a):
            raise ValueError(f"Parameter shape mismatch: {p.shape} vs {np.shape(a)}.")
    for p, a in zip(params, arrays):
        np.copyto(p, a, casting="same_kind")
