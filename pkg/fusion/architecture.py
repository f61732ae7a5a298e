from enum import Enum
from typing import Dict, List, Mapping, NamedTuple, Optional


class ArchitectureId(Enum):
    SINGLE = "single"
    EARLY_SMALL = "early_small"
    EARLY_LARGE = "early_large"
    LATE_CONCAT = "late_concat"
    LATE_CONV = "late_conv"
    LATE_ACC = "late_acc"

    @staticmethod
    def parse(name: str) -> 'ArchitectureId':
        """
        Accepts the enum value or name in any case, dashes allowed: `late-acc`, `LATE_ACC`.
        :raise: ValueError naming the accepted ids
        """
        normalized = str(name).strip().lower().replace("-", "_")
        for arch in ArchitectureId:
            if arch.value == normalized:
                return arch
        raise ValueError(f"Unknown architecture: {name}. Expected one of "
                         f"{', '.join(a.value for a in ArchitectureId)}.")


class Merge(Enum):
    NONE = "none"
    CONCAT = "concat"
    CONV1X1 = "conv1x1"
    ACCUMULATE = "accumulate"


# Published parameter counts; the refined Acc + DP model shares the LATE_ACC count.
PUBLISHED_PARAM_COUNTS: Dict[ArchitectureId, int] = {
    ArchitectureId.SINGLE: 266887,
    ArchitectureId.EARLY_SMALL: 267047,
    ArchitectureId.EARLY_LARGE: 812391,
    ArchitectureId.LATE_CONCAT: 796551,
    ArchitectureId.LATE_CONV: 275367,
    ArchitectureId.LATE_ACC: 272263,
}


class ArchitectureDims(NamedTuple):
    """
    Topology of one architecture.  Every convolution stack is conv(conv1) > conv(conv2) with kernel 5, stride 2 and
    zero padding 2, so 128 rays shrink to 64 and then 32 positions.
    """
    stacks: int
    stack_channels: int
    conv1_filters: int
    conv2_filters: int
    merge: Merge
    merge_filters: int = 0
    hidden: int = 256
    actions: int = 7
    rays: int = 128
    kernel: int = 5
    stride: int = 2
    padding: int = 2

    def conv_length(self, length: int) -> int:
        return (length + 2 * self.padding - self.kernel) // self.stride + 1

    @property
    def feature_length(self) -> int:
        return self.conv_length(self.conv_length(self.rays))

    @property
    def merged_channels(self) -> int:
        if self.merge is Merge.CONCAT:
            return self.stacks * self.conv2_filters
        if self.merge is Merge.CONV1X1:
            return self.merge_filters
        return self.conv2_filters


ARCHITECTURE_DIMS: Dict[ArchitectureId, ArchitectureDims] = {
    ArchitectureId.SINGLE: ArchitectureDims(stacks=1, stack_channels=1, conv1_filters=16, conv2_filters=32,
                                            merge=Merge.NONE),
    ArchitectureId.EARLY_SMALL: ArchitectureDims(stacks=1, stack_channels=3, conv1_filters=16, conv2_filters=32,
                                                 merge=Merge.NONE),
    ArchitectureId.EARLY_LARGE: ArchitectureDims(stacks=1, stack_channels=3, conv1_filters=48, conv2_filters=96,
                                                 merge=Merge.NONE),
    ArchitectureId.LATE_CONCAT: ArchitectureDims(stacks=3, stack_channels=1, conv1_filters=16, conv2_filters=32,
                                                 merge=Merge.CONCAT),
    ArchitectureId.LATE_CONV: ArchitectureDims(stacks=3, stack_channels=1, conv1_filters=16, conv2_filters=32,
                                               merge=Merge.CONV1X1, merge_filters=32),
    ArchitectureId.LATE_ACC: ArchitectureDims(stacks=3, stack_channels=1, conv1_filters=16, conv2_filters=32,
                                              merge=Merge.ACCUMULATE),
}


class LayerSpec(NamedTuple):
    name: str
    params: int


def conv_params(in_channels: int, out_channels: int, kernel: int) -> int:
    return out_channels * in_channels * kernel + out_channels


def fc_params(in_features: int, out_features: int) -> int:
    return out_features * in_features + out_features


def layer_specs(arch: ArchitectureId, dims: Optional[Mapping[ArchitectureId, ArchitectureDims]] = None) -> List[LayerSpec]:
    """
    Closed-form parameter table of the parametrised layers, in parameter order.
    """
    d = (dims or ARCHITECTURE_DIMS)[arch]
    specs = list()
    for i in range(d.stacks):
        prefix = f"stack{i}." if d.stacks > 1 else ""
        specs.append(LayerSpec(f"{prefix}conv({d.conv1_filters})",
                               conv_params(d.stack_channels, d.conv1_filters, d.kernel)))
        specs.append(LayerSpec(f"{prefix}conv({d.conv2_filters})",
                               conv_params(d.conv1_filters, d.conv2_filters, d.kernel)))
    if d.merge is Merge.CONV1X1:
        specs.append(LayerSpec(f"merge.conv1x1({d.merge_filters})",
                               conv_params(d.stacks * d.conv2_filters, d.merge_filters, 1)))
    flat = d.merged_channels * d.feature_length
    specs.append(LayerSpec(f"fc({flat}>{d.hidden})", fc_params(flat, d.hidden)))
    specs.append(LayerSpec(f"fc({d.hidden}>{d.actions})", fc_params(d.hidden, d.actions)))
    return specs


def param_count(arch: ArchitectureId, dims: Optional[Mapping[ArchitectureId, ArchitectureDims]] = None) -> int:
    return sum(spec.params for spec in layer_specs(arch, dims))


class AuditRow(NamedTuple):
    architecture: ArchitectureId
    computed: int
    expected: int

    @property
    def matches(self) -> bool:
        return self.computed == self.expected


def audit(dims: Optional[Mapping[ArchitectureId, ArchitectureDims]] = None) -> List[AuditRow]:
    return [AuditRow(architecture=arch, computed=param_count(arch, dims), expected=PUBLISHED_PARAM_COUNTS[arch])
            for arch in ArchitectureId]
