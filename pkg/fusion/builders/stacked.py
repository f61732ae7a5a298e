"""
Single-stack architectures: the robot-only baseline and the early fusion models that read all three scans as
input channels of one convolution stack.
"""
import numpy as np

from fusion.architecture import ArchitectureDims, ArchitectureId
from fusion.network import FusionNetwork
from neural.layers import Conv1D, Flatten, FullyConnected, ReLU
from neural.sequential import Sequential


def conv_stack(in_channels: int, dims: ArchitectureDims, rng: np.random.Generator, dtype: np.dtype) -> Sequential:
    """
    conv > ReLU > conv.  The activation of the second convolution belongs to the head.
    """
    return Sequential([
        Conv1D(in_channels, dims.conv1_filters, dims.kernel, dims.stride, dims.padding, rng, dtype),
        ReLU(),
        Conv1D(dims.conv1_filters, dims.conv2_filters, dims.kernel, dims.stride, dims.padding, rng, dtype),
    ])


def q_head(dims: ArchitectureDims, rng: np.random.Generator, dtype: np.dtype) -> Sequential:
    return Sequential([
        ReLU(),
        Flatten(),
        FullyConnected(dims.merged_channels * dims.feature_length, dims.hidden, rng, dtype),
        ReLU(),
        FullyConnected(dims.hidden, dims.actions, rng, dtype),
    ])


def _builder(arch: ArchitectureId):
    def build(dims: ArchitectureDims, rng: np.random.Generator, dtype: np.dtype) -> FusionNetwork:
        stack = conv_stack(dims.stack_channels, dims, rng, dtype)
        return FusionNetwork(arch, dims, [stack], q_head(dims, rng, dtype))
    return build


def register(registrar) -> None:
    for arch in (ArchitectureId.SINGLE, ArchitectureId.EARLY_SMALL, ArchitectureId.EARLY_LARGE):
        registrar.accept(arch, _builder(arch))
