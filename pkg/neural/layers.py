import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Mode(Enum):
    EVAL = "eval"
    TRAIN = "train"
    # training with DropPath masks and ray DropOut sampled per forward pass
    TRAIN_DROPPATH = "train_droppath"

    def caches(self) -> bool:
        return self is not Mode.EVAL


def uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int, dtype: np.dtype) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer(ABC):
    """
    A layer owns its parameters and the gradient buffers of matching shapes.  `forward` in a caching mode keeps what
    `backward` needs; `forward` in `Mode.EVAL` never mutates the layer.  `backward` overwrites (does not accumulate)
    the gradient buffers and returns the gradient with respect to the input.
    """

    kind: str = "layer"

    def __init__(self):
        self.params: List[np.ndarray] = list()
        self.grads: List[np.ndarray] = list()

    @abstractmethod
    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        pass

    @abstractmethod
    def backward(self, grad: np.ndarray) -> np.ndarray:
        pass

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params)

    def dims(self) -> Dict[str, Any]:
        """
        Everything needed to rebuild the layer, recorded in parameter file headers.
        """
        return {"kind": self.kind}

    def zero_grad(self) -> None:
        for g in self.grads:
            g.fill(0)

    def _require_cache(self, cache: Optional[Any]) -> Any:
        if cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called without a cached forward in a train mode.")
        return cache

    def __repr__(self) -> str:
        vals = ", ".join(f"{k}={v}" for k, v in self.dims().items() if k != "kind")
        return f"{type(self).__name__}({vals})"


class Conv1D(Layer):

    """
    1D convolution over (batch, channels, length) inputs with explicit zero padding.
    """

    kind = "conv1d"

    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1, padding: int = 0,
                 rng: Optional[np.random.Generator] = None, dtype: np.dtype = np.float32):
        super().__init__()
        if min(in_channels, out_channels, kernel, stride) < 1 or padding < 0:
            raise ValueError("Invalid convolution dimensions.")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        rng = rng if rng is not None else np.random.default_rng()
        fan_in = in_channels * kernel
        self.weights = uniform_init(rng, (out_channels, in_channels, kernel), fan_in, dtype)
        self.bias = uniform_init(rng, (out_channels,), fan_in, dtype)
        self.params = [self.weights, self.bias]
        self.grads = [np.zeros_like(self.weights), np.zeros_like(self.bias)]
        self._cache = None

    def output_length(self, in_length: int) -> int:
        return (in_length + 2 * self.padding - self.kernel) // self.stride + 1

    def dims(self) -> Dict[str, Any]:
        return {"kind": self.kind, "in_channels": self.in_channels, "out_channels": self.out_channels,
                "kernel": self.kernel, "stride": self.stride, "padding": self.padding}

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ValueError(f"{self!r} expects (batch, {self.in_channels}, length), got {x.shape}.")
        x = x.astype(self.weights.dtype, copy=False)
        n, c, length = x.shape
        out_len = self.output_length(length)
        if out_len < 1:
            raise ValueError(f"Input length {length} too short for {self!r}.")
        xp = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding)))
        windows = sliding_window_view(xp, self.kernel, axis=2)[:, :, ::self.stride, :]
        cols = windows.transpose(0, 2, 1, 3).reshape(n, out_len, c * self.kernel)
        w_mat = self.weights.reshape(self.out_channels, -1)
        out = cols @ w_mat.T + self.bias
        if mode.caches():
            self._cache = (cols, length)
        return np.ascontiguousarray(out.transpose(0, 2, 1))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        cols, length = self._require_cache(self._cache)
        n, out_len, _ = cols.shape
        grad_t = grad.transpose(0, 2, 1)
        w_mat = self.weights.reshape(self.out_channels, -1)
        self.grads[0][...] = np.tensordot(grad_t, cols, axes=([0, 1], [0, 1])).reshape(self.weights.shape)
        self.grads[1][...] = grad.sum(axis=(0, 2))
        d_cols = (grad_t @ w_mat).reshape(n, out_len, self.in_channels, self.kernel).transpose(0, 2, 1, 3)
        d_xp = np.zeros((n, self.in_channels, length + 2 * self.padding), dtype=d_cols.dtype)
        span = self.stride * (out_len - 1) + 1
        for k in range(self.kernel):
            d_xp[:, :, k:k + span:self.stride] += d_cols[:, :, :, k]
        return d_xp[:, :, self.padding:self.padding + length]


class FullyConnected(Layer):

    kind = "fc"

    def __init__(self, in_features: int, out_features: int, rng: Optional[np.random.Generator] = None,
                 dtype: np.dtype = np.float32):
        super().__init__()
        if min(in_features, out_features) < 1:
            raise ValueError("Invalid fully connected dimensions.")
        self.in_features = in_features
        self.out_features = out_features
        rng = rng if rng is not None else np.random.default_rng()
        self.weights = uniform_init(rng, (out_features, in_features), in_features, dtype)
        self.bias = uniform_init(rng, (out_features,), in_features, dtype)
        self.params = [self.weights, self.bias]
        self.grads = [np.zeros_like(self.weights), np.zeros_like(self.bias)]
        self._cache = None

    def dims(self) -> Dict[str, Any]:
        return {"kind": self.kind, "in_features": self.in_features, "out_features": self.out_features}

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"{self!r} expects (batch, {self.in_features}), got {x.shape}.")
        x = x.astype(self.weights.dtype, copy=False)
        if mode.caches():
            self._cache = x
        return x @ self.weights.T + self.bias

    def backward(self, grad: np.ndarray) -> np.ndarray:
        x = self._require_cache(self._cache)
        self.grads[0][...] = grad.T @ x
        self.grads[1][...] = grad.sum(axis=0)
        return grad @ self.weights


class ReLU(Layer):

    kind = "relu"

    def __init__(self):
        super().__init__()
        self._mask: Optional[np.ndarray] = None

    @property
    def mask(self) -> Optional[np.ndarray]:
        """
        Activation pattern of the last caching forward pass.
        """
        return self._mask

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        mask = x > 0
        if mode.caches():
            self._mask = mask
        return x * mask

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._require_cache(self._mask)


class Flatten(Layer):

    kind = "flatten"

    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        if mode.caches():
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad.reshape(self._require_cache(self._shape))
