"""Nested Attention GhostUNet++.

Nodes X(i, j) with i + j <= depth - 1 form a triangular grid; i is the
resolution level and j the nested depth. Encoder nodes X(i, 0) see the
max-pooled output of X(i-1, 0). Decoder nodes X(i, j >= 1) merge the j
same-level skips X(i, 0..j-1), weighted by depth attention, with the
up-sampled X(i+1, j-1). Top-row nodes X(0, 1..depth-1) feed 1x1 heads whose
logits are summed.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from functools import reduce
from typing import Any, NamedTuple

import torch
from torch import nn

from ..core.exceptions import ConfigurationError, UsageError
from ..utils.common import ConfigHelper
from .attention import AttentionBlockSpec, AttentionGhostBlock, DepthAttention, DepthAttentionSpec
from .ghost import GhostBottleneckSpec
from .initialization import initialize_weights

logger = logging.getLogger("ghostseg.nn")

MERGE_MODES = ("concat", "sum")


@dataclass(frozen=True)
class NetworkSpec:
    depth: int = 5
    base_channels: int = 32
    in_channels: int = 1
    num_classes: int = 4
    ghost_ratio: int = 2
    expansion: int = 2
    channel_reduction: int = 16
    spatial_kernel: int = 7
    channel_attention: bool = True
    spatial_attention: bool = True
    depth_attention: bool = True
    deep_supervision: bool = True
    merge_mode: str = "concat"

    def __post_init__(self):
        if not 1 <= self.depth <= 8:
            raise ConfigurationError(f"depth must be in 1..8, got {self.depth}")  # noqa: TRY003
        if self.base_channels < 1 or self.in_channels < 1:
            raise ConfigurationError("base_channels and in_channels must be positive")  # noqa: TRY003
        if self.num_classes < 2:
            raise ConfigurationError(f"num_classes must be >= 2, got {self.num_classes}")  # noqa: TRY003
        if self.ghost_ratio < 1 or self.expansion < 1:
            raise ConfigurationError("ghost_ratio and expansion must be >= 1")  # noqa: TRY003
        if self.base_channels % self.ghost_ratio != 0:
            raise ConfigurationError(  # noqa: TRY003
                f"base_channels={self.base_channels} is not divisible by ghost_ratio={self.ghost_ratio}"
            )
        if self.merge_mode not in MERGE_MODES:
            raise ConfigurationError(f"merge_mode must be one of {MERGE_MODES}, got {self.merge_mode!r}")  # noqa: TRY003

    @property
    def node_count(self) -> int:
        return self.depth * (self.depth + 1) // 2

    @property
    def node_ids(self) -> list[tuple[int, int]]:
        """Grid positions in evaluation order (column by column)."""
        return [(i, j) for j in range(self.depth) for i in range(self.depth - j)]

    @property
    def head_ids(self) -> list[tuple[int, int]]:
        if self.depth == 1:
            return [(0, 0)]
        if self.deep_supervision:
            return [(0, j) for j in range(1, self.depth)]
        return [(0, self.depth - 1)]

    @property
    def spatial_multiple(self) -> int:
        return 2 ** (self.depth - 1)

    def channels(self, level: int) -> int:
        return self.base_channels * 2**level

    def node_in_channels(self, i: int, j: int) -> int:
        if j == 0:
            return self.in_channels if i == 0 else self.channels(i - 1)
        if self.merge_mode == "concat":
            return (j + 1) * self.channels(i)
        return self.channels(i)

    def dense_twin(self) -> "NetworkSpec":
        """Same topology with every ghost module replaced by a dense convolution."""
        return replace(self, ghost_ratio=1)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "NetworkSpec":
        return ConfigHelper.build_dataclass(cls, data, "network")


def node_key(i: int, j: int) -> str:
    return f"x{i}_{j}"


class SegmentationOutput(NamedTuple):
    logits: torch.Tensor
    heads: tuple[torch.Tensor, ...]


def fuse_outputs(heads: list[torch.Tensor] | tuple[torch.Tensor, ...]) -> torch.Tensor:
    """F_final = F_1 + ... + F_n over the supervision heads."""
    if not heads:
        raise UsageError("fuse_outputs needs at least one head")  # noqa: TRY003
    shape = heads[0].shape
    for idx, head in enumerate(heads):
        if head.shape != shape:
            raise ConfigurationError(f"Head {idx} has shape {tuple(head.shape)}, expected {tuple(shape)}")  # noqa: TRY003
    if len(heads) == 1:
        return heads[0]
    return reduce(torch.add, heads)


class UpSample(nn.Module):
    """2x nearest-neighbour up-sampling followed by a 1x1 channel projection."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.up = nn.Upsample(scale_factor=2, mode="nearest")
        self.proj = nn.Conv2d(in_channels, out_channels, 1, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.proj(self.up(x))


class AttentionGhostUNetPP(nn.Module):
    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.spec = spec
        self.pool = nn.MaxPool2d(2)

        self.nodes = nn.ModuleDict()
        for i, j in spec.node_ids:
            width = spec.channels(i)
            bottleneck = GhostBottleneckSpec(
                spec.node_in_channels(i, j),
                width,
                stride=1,
                expansion_channels=spec.expansion * width,
                ratio_s=spec.ghost_ratio,
            )
            attention = AttentionBlockSpec(
                width,
                channel_reduction=spec.channel_reduction,
                spatial_kernel=spec.spatial_kernel,
                channel=spec.channel_attention,
                spatial=spec.spatial_attention,
            )
            self.nodes[node_key(i, j)] = AttentionGhostBlock(bottleneck, attention)

        # one up-sampler per level, shared by every decoder node on that level
        self.upsamplers = nn.ModuleList(
            [UpSample(spec.channels(i + 1), spec.channels(i)) for i in range(spec.depth - 1)]
        )

        # a single skip branch always gets weight 1, so depth attention starts at two branches
        self.depth_attention = nn.ModuleDict()
        if spec.depth_attention:
            for i, j in spec.node_ids:
                if j >= 2:
                    self.depth_attention[node_key(i, j)] = DepthAttention(DepthAttentionSpec(spec.channels(i), j))

        self.heads = nn.ModuleDict({
            node_key(i, j): nn.Conv2d(spec.channels(0), spec.num_classes, 1) for i, j in spec.head_ids
        })

    @property
    def bottleneck_count(self) -> int:
        return len(self.nodes)

    def _check_input(self, x: torch.Tensor) -> None:
        if x.dim() != 4:
            raise UsageError(f"Expected a (batch, channel, height, width) input, got shape {tuple(x.shape)}")  # noqa: TRY003
        if x.shape[1] != self.spec.in_channels:
            raise ConfigurationError(  # noqa: TRY003
                f"Network expects {self.spec.in_channels} input channels, got {x.shape[1]}"
            )
        multiple = self.spec.spatial_multiple
        height, width = x.shape[2], x.shape[3]
        if height % multiple or width % multiple:
            pad_h = -height % multiple
            pad_w = -width % multiple
            raise UsageError(  # noqa: TRY003
                f"Input {height}x{width} is not divisible by {multiple} (depth {self.spec.depth}); "
                f"pad by {pad_h} rows and {pad_w} columns to {height + pad_h}x{width + pad_w}"
            )

    def _merge(self, i: int, j: int, skips: list[torch.Tensor], up: torch.Tensor) -> torch.Tensor:
        key = node_key(i, j)
        concat = self.spec.merge_mode == "concat"
        if key in self.depth_attention:
            attention = self.depth_attention[key]
            if concat:
                weights = attention.branch_weights(skips)
                weighted = [weights[:, k].view(-1, 1, 1, 1) * skip for k, skip in enumerate(skips)]
                return torch.cat([*weighted, up], dim=1)
            fused, _ = attention(skips)
            return fused + up
        if concat:
            return torch.cat([*skips, up], dim=1)
        return reduce(torch.add, skips) + up

    def forward(self, x: torch.Tensor) -> SegmentationOutput:
        self._check_input(x)
        grid: dict[tuple[int, int], torch.Tensor] = {}
        for i, j in self.spec.node_ids:
            node = self.nodes[node_key(i, j)]
            if j == 0:
                inputs = x if i == 0 else self.pool(grid[(i - 1, 0)])
            else:
                skips = [grid[(i, k)] for k in range(j)]
                up = self.upsamplers[i](grid[(i + 1, j - 1)])
                inputs = self._merge(i, j, skips, up)
            grid[(i, j)] = node(inputs)

        heads = tuple(self.heads[node_key(i, j)](grid[(i, j)]) for i, j in self.spec.head_ids)
        return SegmentationOutput(fuse_outputs(heads), heads)


def build_network(spec: NetworkSpec, seed: int = 0) -> AttentionGhostUNetPP:
    """Build the nested grid and Xavier-initialize it from ``seed``."""
    net = AttentionGhostUNetPP(spec)
    initialize_weights(net, seed)
    logger.debug(
        "Built network depth=%d nodes=%d params=%d", spec.depth, net.bottleneck_count, _numel(net.parameters())
    )
    return net


def _numel(parameters) -> int:
    return sum(p.numel() for p in parameters)


@dataclass
class ParameterReport:
    total: int
    groups: dict[str, int] = field(default_factory=dict)
    dense_twin_total: int = 0
    bottleneck_nodes: int = 0

    @property
    def ratio(self) -> float:
        """Dense-twin parameters divided by ghost-network parameters."""
        return self.dense_twin_total / self.total if self.total else 0.0

    @property
    def fraction_of_dense(self) -> float:
        return self.total / self.dense_twin_total if self.dense_twin_total else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "groups": dict(self.groups),
            "dense_twin_total": self.dense_twin_total,
            "bottleneck_nodes": self.bottleneck_nodes,
            "ratio": round(self.ratio, 4),
            "fraction_of_dense": round(self.fraction_of_dense, 4),
        }


def parameter_groups(net: AttentionGhostUNetPP) -> dict[str, int]:
    encoder = sum(_numel(net.nodes[node_key(i, j)].parameters()) for i, j in net.spec.node_ids if j == 0)
    decoder = sum(_numel(net.nodes[node_key(i, j)].parameters()) for i, j in net.spec.node_ids if j > 0)
    return {
        "encoder": encoder,
        "decoder": decoder,
        "upsampling": _numel(net.upsamplers.parameters()),
        "depth_attention": _numel(net.depth_attention.parameters()),
        "heads": _numel(net.heads.parameters()),
    }


def parameter_report(net: AttentionGhostUNetPP) -> ParameterReport:
    """Parameter counts per group and against the dense-convolution twin."""
    twin = AttentionGhostUNetPP(net.spec.dense_twin())
    return ParameterReport(
        total=_numel(net.parameters()),
        groups=parameter_groups(net),
        dense_twin_total=_numel(twin.parameters()),
        bottleneck_nodes=net.bottleneck_count,
    )
