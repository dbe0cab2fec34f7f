"""Channel, spatial and depth attention, and the attention-wrapped ghost bottleneck.

Gate layers start at zero so every gate opens at sigmoid(0) = 0.5 and every
depth-attention weighting starts uniform; ``reset_gates`` restores that state
after weight initialization.
"""

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..core.exceptions import ConfigurationError, UsageError
from .ghost import GhostBottleneck, GhostBottleneckSpec


@dataclass(frozen=True)
class AttentionBlockSpec:
    channels: int
    channel_reduction: int = 16
    spatial_kernel: int = 7
    channel: bool = True
    spatial: bool = True

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigurationError(f"channels must be positive, got {self.channels}")  # noqa: TRY003
        if self.channel_reduction < 1:
            raise ConfigurationError(f"channel_reduction must be >= 1, got {self.channel_reduction}")  # noqa: TRY003
        if self.spatial_kernel < 1 or self.spatial_kernel % 2 == 0:
            raise ConfigurationError(f"spatial_kernel must be a positive odd size, got {self.spatial_kernel}")  # noqa: TRY003

    @property
    def hidden_channels(self) -> int:
        return max(1, self.channels // self.channel_reduction)

    def parameter_count(self) -> int:
        total = 0
        if self.channel:
            hidden = self.hidden_channels
            total += self.channels * hidden + hidden + hidden * self.channels + self.channels
        if self.spatial:
            total += 2 * self.spatial_kernel**2
        return total


@dataclass(frozen=True)
class DepthAttentionSpec:
    channels: int
    branch_count: int

    def __post_init__(self):
        if self.channels < 1 or self.branch_count < 1:
            raise ConfigurationError(  # noqa: TRY003
                f"Depth attention needs positive channels and branches, got {self.channels}/{self.branch_count}"
            )

    def parameter_count(self) -> int:
        return self.branch_count * (self.channels + 1)


class ChannelAttention(nn.Module):
    """Squeeze-excitation gate: global average pool -> reduce -> expand -> sigmoid."""

    def __init__(self, spec: AttentionBlockSpec):
        super().__init__()
        self.spec = spec
        self.avg_pool = nn.AdaptiveAvgPool2d(1)
        self.reduce = nn.Conv2d(spec.channels, spec.hidden_channels, 1)
        self.act = nn.SiLU()
        self.expand = nn.Conv2d(spec.hidden_channels, spec.channels, 1)
        self.reset_gates()

    def reset_gates(self) -> None:
        with torch.no_grad():
            self.expand.weight.zero_()
            self.expand.bias.zero_()

    def gate(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.spec.channels:
            raise ConfigurationError(  # noqa: TRY003
                f"Channel attention expects {self.spec.channels} channels, got {x.shape[1]}"
            )
        return torch.sigmoid(self.expand(self.act(self.reduce(self.avg_pool(x)))))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x * self.gate(x)


class SpatialAttention(nn.Module):
    """Convolution over channel-mean and channel-max maps, squashed to a per-pixel gate."""

    def __init__(self, spec: AttentionBlockSpec):
        super().__init__()
        self.spec = spec
        k = spec.spatial_kernel
        self.conv = nn.Conv2d(2, 1, k, padding=k // 2, bias=False)
        self.reset_gates()

    def reset_gates(self) -> None:
        with torch.no_grad():
            self.conv.weight.zero_()

    def gate(self, x: torch.Tensor) -> torch.Tensor:
        avg = torch.mean(x, dim=1, keepdim=True)
        peak = torch.amax(x, dim=1, keepdim=True)
        return torch.sigmoid(self.conv(torch.cat([avg, peak], dim=1)))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x * self.gate(x)


class DepthAttention(nn.Module):
    """Softmax weighting over the same-shape skip branches entering a nested node.

    Each branch k is scored from its global-average descriptor with its own
    vector ``weight[k]`` and offset ``bias[k]``; the scores are normalized
    across branches per sample.
    """

    def __init__(self, spec: DepthAttentionSpec):
        super().__init__()
        self.spec = spec
        self.weight = nn.Parameter(torch.zeros(spec.branch_count, spec.channels))
        self.bias = nn.Parameter(torch.zeros(spec.branch_count))

    def reset_gates(self) -> None:
        with torch.no_grad():
            self.weight.zero_()
            self.bias.zero_()

    def _check(self, branches: list[torch.Tensor]) -> None:
        if not branches:
            raise UsageError("Depth attention needs at least one branch")  # noqa: TRY003
        shape = branches[0].shape
        for idx, branch in enumerate(branches):
            if branch.shape != shape:
                raise ConfigurationError(  # noqa: TRY003
                    f"Branch {idx} has shape {tuple(branch.shape)}, expected {tuple(shape)}"
                )
        if len(branches) != self.spec.branch_count:
            raise ConfigurationError(  # noqa: TRY003
                f"Depth attention built for {self.spec.branch_count} branches, got {len(branches)}"
            )
        if shape[1] != self.spec.channels:
            raise ConfigurationError(  # noqa: TRY003
                f"Depth attention expects {self.spec.channels} channels, got {shape[1]}"
            )

    def branch_weights(self, branches: list[torch.Tensor]) -> torch.Tensor:
        """Probability vector over branches, shape (batch, branch_count)."""
        self._check(branches)
        descriptors = torch.stack([branch.mean(dim=(2, 3)) for branch in branches], dim=1)
        scores = (descriptors * self.weight).sum(dim=-1) + self.bias
        return F.softmax(scores, dim=1)

    def forward(self, branches: list[torch.Tensor]) -> tuple[torch.Tensor, torch.Tensor]:
        weights = self.branch_weights(branches)
        fused = sum(weights[:, k].view(-1, 1, 1, 1) * branch for k, branch in enumerate(branches))
        return fused, weights


class AttentionGhostBlock(nn.Module):
    """F_o = A(G(F_i)): ghost bottleneck followed by channel then spatial attention."""

    def __init__(self, bottleneck: GhostBottleneckSpec, attention: AttentionBlockSpec):
        super().__init__()
        if attention.channels != bottleneck.out_channels:
            raise ConfigurationError(  # noqa: TRY003
                f"Attention channels {attention.channels} != bottleneck out_channels {bottleneck.out_channels}"
            )
        self.bottleneck_spec = bottleneck
        self.attention_spec = attention
        self.bottleneck = GhostBottleneck(bottleneck)
        self.channel_attention = ChannelAttention(attention) if attention.channel else None
        self.spatial_attention = SpatialAttention(attention) if attention.spatial else None

    def parameter_count(self) -> int:
        return self.bottleneck_spec.parameter_count() + self.attention_spec.parameter_count()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.bottleneck(x)
        if self.channel_attention is not None:
            out = self.channel_attention(out)
        if self.spatial_attention is not None:
            out = self.spatial_attention(out)
        return out
