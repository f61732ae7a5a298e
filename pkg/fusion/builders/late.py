"""
Late fusion: one weight-independent convolution stack per sensor, merged before the shared head.
"""
import numpy as np

from fusion.architecture import ArchitectureDims, ArchitectureId, Merge
from fusion.builders.stacked import conv_stack, q_head
from fusion.network import FusionNetwork
from neural.layers import Conv1D


def _builder(arch: ArchitectureId):
    def build(dims: ArchitectureDims, rng: np.random.Generator, dtype: np.dtype) -> FusionNetwork:
        stacks = [conv_stack(1, dims, rng, dtype) for _ in range(dims.stacks)]
        merge_layer = None
        if dims.merge is Merge.CONV1X1:
            merge_layer = Conv1D(dims.stacks * dims.conv2_filters, dims.merge_filters, 1, rng=rng, dtype=dtype)
        return FusionNetwork(arch, dims, stacks, q_head(dims, rng, dtype), merge_layer)
    return build


def register(registrar) -> None:
    for arch in (ArchitectureId.LATE_CONCAT, ArchitectureId.LATE_CONV, ArchitectureId.LATE_ACC):
        registrar.accept(arch, _builder(arch))
